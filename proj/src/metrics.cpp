#include "malscope/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "malscope/error.hpp"

namespace malscope {

namespace {

void finish(ConfusionReport& r) {
    r.recall_mal.reset();
    r.recall_ben.reset();
    r.balanced_accuracy.reset();
    if (r.tp + r.fn > 0.0) r.recall_mal = r.tp / (r.tp + r.fn);
    if (r.tn + r.fp > 0.0) r.recall_ben = r.tn / (r.tn + r.fp);
    if (r.recall_mal && r.recall_ben) r.balanced_accuracy = (*r.recall_mal + *r.recall_ben) / 2.0;
}

struct MeanStd {
    double sum = 0.0;
    double sq = 0.0;
    int n = 0;
    void add(double v) {
        sum += v;
        sq += v * v;
        ++n;
    }
    std::optional<double> mean() const { return n ? std::optional<double>(sum / n) : std::nullopt; }
    double stdev() const {
        if (n == 0) return 0.0;
        const double m = sum / n;
        return std::sqrt(std::max(0.0, sq / n - m * m));
    }
};

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

}  // namespace

ConfusionReport score(const std::vector<Prediction>& predictions, const std::vector<LabeledRow>& truth) {
    if (predictions.size() != truth.size())
        throw data_error("prediction count " + std::to_string(predictions.size()) + " differs from truth count " +
                         std::to_string(truth.size()));
    ConfusionReport r;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool actual = truth[i].klass == Klass::Malicious;
        const bool predicted = predictions[i].klass == Klass::Malicious;
        if (actual && predicted) r.tp += 1;
        else if (actual) r.fn += 1;
        else if (predicted) r.fp += 1;
        else r.tn += 1;
        auto& tally = r.per_activity[truth[i].activity];
        tally.total += 1;
        if (actual == predicted) tally.correct += 1;
    }
    finish(r);
    return r;
}

ConfusionReport score(const std::vector<Prediction>& predictions, const LabeledDataset& truth) {
    return score(predictions, truth.rows());
}

ConfusionReport aggregate(const std::vector<ConfusionReport>& runs) {
    if (runs.empty()) throw data_error("nothing to aggregate");
    ConfusionReport out;
    const double n = static_cast<double>(runs.size());
    MeanStd rm, rb, ba;
    for (const auto& r : runs) {
        out.tp += r.tp;
        out.fp += r.fp;
        out.tn += r.tn;
        out.fn += r.fn;
        if (r.recall_mal) rm.add(*r.recall_mal);
        if (r.recall_ben) rb.add(*r.recall_ben);
        if (r.balanced_accuracy) ba.add(*r.balanced_accuracy);
        for (const auto& [activity, t] : r.per_activity) {
            auto& o = out.per_activity[activity];
            o.total += t.total;
            o.correct += t.correct;
        }
    }
    out.tp /= n;
    out.fp /= n;
    out.tn /= n;
    out.fn /= n;
    for (auto& [activity, t] : out.per_activity) {
        t.total /= n;
        t.correct /= n;
    }
    out.recall_mal = rm.mean();
    out.recall_ben = rb.mean();
    out.balanced_accuracy = ba.mean();
    out.repeats = static_cast<int>(runs.size());
    out.dispersion = {{"recall_mal", rm.stdev()}, {"recall_ben", rb.stdev()}, {"balanced_accuracy", ba.stdev()}};
    return out;
}

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::Split: return "split";
        case Scenario::NewData: return "newdata";
        case Scenario::Adversarial: return "adversarial";
    }
    return "?";
}

Scenario parse_scenario(std::string_view s) {
    if (s == "split") return Scenario::Split;
    if (s == "newdata") return Scenario::NewData;
    if (s == "adversarial") return Scenario::Adversarial;
    throw config_error("unknown scenario '" + std::string(s) + "' (expected split, newdata or adversarial)");
}

ExperimentResult run_experiment(const ExperimentInputs& inputs, const ExperimentSpec& spec) {
    if (!inputs.original) throw config_error("experiment needs the original labeled dataset");
    if (spec.repeats < 1) throw config_error("repeats must be >= 1");
    if (spec.scenario == Scenario::NewData && !inputs.new_malicious)
        throw config_error("new-data scenario needs the newly observed malicious dataset");
    if (spec.scenario == Scenario::Adversarial && (!inputs.adversarial || inputs.adversarial->empty()))
        throw config_error("adversarial scenario needs a non-empty generated dataset");

    ExperimentResult result;
    for (int i = 0; i < spec.repeats; ++i) {
        const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(i);
        try {
            LabeledDataset train, test;
            switch (spec.scenario) {
                case Scenario::Split: {
                    auto split = make_split(*inputs.original, spec.config, spec.focus_activity, seed);
                    train = std::move(split.train);
                    test = std::move(split.test);
                    break;
                }
                case Scenario::NewData: {
                    auto base = make_c0(*inputs.original, seed);
                    auto eval = make_newdata_eval(*inputs.original, *inputs.new_malicious, base);
                    train = std::move(eval.train);
                    test = std::move(eval.test);
                    break;
                }
                case Scenario::Adversarial: {
                    auto split = make_split(*inputs.original, spec.config, spec.focus_activity, seed);
                    test = std::move(split.test);
                    if (spec.contamination) {
                        auto c = contaminate_training(split.train, *inputs.adversarial, *spec.contamination, seed);
                        train = spec.inject ? std::move(c.train) : std::move(split.train);
                        test = test.merged(c.adversarial_test);
                    } else {
                        train = std::move(split.train);
                        test = test.merged(*inputs.adversarial);
                    }
                    break;
                }
            }
            const TrainedModel model = fit_model(train, spec.model, seed);
            const auto preds = model.predict(test.matrix());
            result.runs.push_back(score(preds, test));
            if (spec.scenario == Scenario::Adversarial) {
                std::vector<Prediction> p;
                std::vector<LabeledRow> t;
                for (std::size_t k = 0; k < test.size(); ++k) {
                    if (test.rows()[k].source != Source::Dg) continue;
                    p.push_back(preds[k]);
                    t.push_back(test.rows()[k]);
                }
                result.adversarial_runs.push_back(score(p, t));
            }
        } catch (const Error& e) {
            throw Error(e.kind(), "experiment repeat " + std::to_string(i) + " (seed " + std::to_string(seed) +
                                      ") failed: " + e.what());
        }
    }
    result.report = aggregate(result.runs);
    if (!result.adversarial_runs.empty()) result.adversarial = aggregate(result.adversarial_runs);
    return result;
}

nlohmann::json report_to_json(const ConfusionReport& r) {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [activity, t] : r.per_activity) per[activity] = {{"total", t.total}, {"correct", t.correct}};
    return {{"tp", r.tp},
            {"fp", r.fp},
            {"tn", r.tn},
            {"fn", r.fn},
            {"recall_mal", optional_json(r.recall_mal)},
            {"recall_ben", optional_json(r.recall_ben)},
            {"balanced_accuracy", optional_json(r.balanced_accuracy)},
            {"per_activity", per},
            {"repeats", r.repeats},
            {"dispersion", r.dispersion}};
}

ConfusionReport report_from_json(const nlohmann::json& j) {
    ConfusionReport r;
    r.tp = j.at("tp").get<double>();
    r.fp = j.at("fp").get<double>();
    r.tn = j.at("tn").get<double>();
    r.fn = j.at("fn").get<double>();
    r.recall_mal = optional_from(j, "recall_mal");
    r.recall_ben = optional_from(j, "recall_ben");
    r.balanced_accuracy = optional_from(j, "balanced_accuracy");
    for (const auto& [activity, t] : j.at("per_activity").items())
        r.per_activity[activity] = {t.at("total").get<double>(), t.at("correct").get<double>()};
    r.repeats = j.value("repeats", 1);
    if (j.contains("dispersion")) r.dispersion = j["dispersion"].get<std::map<std::string, double>>();
    return r;
}

std::string format_2dp(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

}  // namespace malscope
