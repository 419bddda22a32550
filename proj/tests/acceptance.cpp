// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sys/wait.h>

#include "feature_oracle.hpp"
#include "malscope/advgen.hpp"
#include "malscope/error.hpp"
#include "malscope/features.hpp"
#include "malscope/metrics.hpp"
#include "malscope/pipeline.hpp"
#include "malscope/similarity.hpp"
#include "malscope/splits.hpp"
#include "malscope/synth.hpp"
#include "support.hpp"

using namespace malscope;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 3) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << v;
    return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Settings desk_settings() { return Settings::load(testing::source_dir() / "configs" / "desk.json"); }

PlanEntry entry(std::string activity, std::string archetype, std::size_t n) {
    PlanEntry e;
    e.activity = std::move(activity);
    e.archetype = std::move(archetype);
    e.count = n;
    e.klass = e.archetype == "benign_regular" ? Klass::Benign : Klass::Malicious;
    return e;
}

LabeledDataset synthetic_dataset(const std::vector<PlanEntry>& entries, std::uint64_t seed) {
    SynthPlan plan;
    plan.entries = entries;
    auto s = generate_ledger(plan, seed);
    return make_dataset(extract_all(s.ledger, {}).vectors, s.ledger.labels());
}

double activity_recall(const ConfusionReport& r, const std::string& activity) {
    const auto& t = r.per_activity.at(activity);
    return t.total > 0 ? t.correct / t.total : 0.0;
}

// 1 ----------------------------------------------------------------------------
Outcome feature_oracle() {
    auto t0 = std::chrono::steady_clock::now();
    auto txs = parse_transactions(testing::slurp(testing::fixture("accounts25.jsonl")), TxFormat::Jsonl);
    std::istringstream lab(testing::slurp(testing::fixture("accounts25_labels.csv")));
    auto labels = load_labels(lab);
    Ledger ledger(txs, labels, txs.back().timestamp + 86400);
    EpochConfig cfg;
    auto batch = extract_all(ledger, cfg);
    auto names = feature_names();
    std::size_t checked = 0, mismatched = 0;
    std::string first_bad;
    for (const auto& fv : batch.vectors) {
        auto want = oracle::features(txs, fv.address, cfg.epoch_seconds, cfg.burst_sigma, ledger.snapshot_time());
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            ++checked;
            double w = want.at(names[i]);
            bool ok = oracle::is_count(names[i]) ? fv.values[i] == w : testing::rel_close(fv.values[i], w, 1e-9);
            if (!ok && mismatched++ == 0) first_bad = fv.address + " " + names[i];
        }
    }
    double secs = seconds_since(t0);
    bool pass = batch.vectors.size() == 25 && mismatched == 0 && checked == 25 * 59 && secs < 5.0;
    return {pass, std::to_string(batch.vectors.size()) + " accounts, " + std::to_string(checked) + " entries, " +
                      std::to_string(mismatched) + " mismatches" + (first_bad.empty() ? "" : " (" + first_bad + ")") +
                      ", " + fmt(secs, 2) + " s"};
}

// 2 ----------------------------------------------------------------------------
Outcome burst_suite() {
    int total = 0, ok = 0;
    auto expect = [&](bool c) { ++total, ok += c; };
    auto ledger = [](std::vector<Transaction> txs) {
        std::uint64_t last = 0;
        for (auto& t : txs) last = std::max(last, t.timestamp);
        return Ledger(std::move(txs), {}, last);
    };
    const auto me = testing::address(1);

    auto one = build_profile(ledger({testing::tx(1, 10, 2, 1, 5.0)}), me, {});
    expect(one.indegree == std::vector<double>{1} && one.balance_in == std::vector<double>{5.0} &&
           one.inter_event_times.empty());
    auto three = build_profile(ledger({testing::tx(1, 3600, 2, 1, 1), testing::tx(2, 3700, 3, 1, 1),
                                       testing::tx(3, 11600, 4, 1, 1)}),
                               me, {});
    expect(three.indegree == std::vector<double>{2, 0, 1} && three.inter_event_times == std::vector<double>{100, 7900});
    auto sender = build_profile(ledger({testing::tx(1, 10, 1, 2, 1), testing::tx(2, 9000, 1, 3, 1)}), me, {});
    expect(std::all_of(sender.attractiveness.begin(), sender.attractiveness.end(), [](double a) { return a == 0.0; }));

    expect(build_profile(ledger({testing::tx(1, 10, 2, 1, 1), testing::tx(2, 3610, 2, 1, 1)}), me, {}).attractiveness ==
           std::vector<double>{1.0, 0.0});
    expect(build_profile(ledger({testing::tx(1, 10, 2, 1, 1), testing::tx(2, 3610, 3, 1, 1), testing::tx(3, 7210, 4, 1, 1)}),
                         me, {})
               .attractiveness == std::vector<double>{1, 1, 1});
    expect(build_profile(ledger({testing::tx(1, 10, 2, 1, 1), testing::tx(2, 3610, 2, 1, 1), testing::tx(3, 3620, 3, 1, 1)}),
                         me, {})
               .attractiveness == std::vector<double>{1.0, 0.5});

    std::vector<double> a{1, 5, 1, 6, 1};
    auto r = detect_bursts(a, ThresholdMode::Absolute, 4);
    expect(r.count == 2 && r.longest_run == 1 && r.first_instance && *r.first_instance == 1);
    std::vector<double> flat{2, 2, 2, 2, 2};
    auto f = detect_bursts(flat, ThresholdMode::Sigma, 2.0);
    expect(f.threshold == 2.0 && f.count == 0);
    std::vector<double> b{0, 5, 6, 7, 0};
    expect(detect_bursts(b, ThresholdMode::Absolute, 4).longest_run == 3);
    return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " hand-counted examples exact"};
}

// 3 ----------------------------------------------------------------------------
Outcome similarity_suite() {
    Rng rng(303);
    const std::vector<std::string> acts{"A", "B", "C", "D", "E", "F"};
    LabeledDataset data;
    for (int i = 0; i < 500; ++i) {
        std::vector<double> v(59);
        for (auto& x : v) x = rng.normal(0.15, 1.0) * std::pow(10.0, rng.uniform(-2, 2));
        data.add(testing::row(testing::address(i + 1), v, true, acts[rng.index(acts.size())]));
    }
    auto m = similarity_matrix(std::vector<std::string>(500), data.matrix());
    bool sym = true, diag = true, clamp = true;
    for (Eigen::Index i = 0; i < 500; ++i) {
        diag &= m.values(i, i) == 1.0;
        for (Eigen::Index j = 0; j < 500; ++j) {
            sym &= m.values(i, j) == m.values(j, i);
            clamp &= std::abs(m.values(i, j)) <= 1.0;
        }
    }
    auto s = pairwise_activity_similarity(data, {false});
    std::map<std::pair<std::string, std::string>, std::pair<double, double>> tally;
    const auto& rows = data.rows();
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            auto key = std::minmax(rows[i].activity, rows[j].activity);
            auto& t = tally[{key.first, key.second}];
            double dot = 0, na = 0, nb = 0;
            for (std::size_t k = 0; k < 59; ++k)
                dot += rows[i].values[k] * rows[j].values[k], na += rows[i].values[k] * rows[i].values[k],
                    nb += rows[j].values[k] * rows[j].values[k];
            t.first += dot / std::sqrt(na * nb) < 0 ? 1 : 0;
            t.second += 1;
        }
    bool complement = true;
    auto lt = s.p_lt0();
    for (std::size_t a = 0; a < s.activities.size(); ++a)
        for (std::size_t b = 0; b < s.activities.size(); ++b) {
            auto key = std::minmax(s.activities[a], s.activities[b]);
            auto [neg, total] = tally.at({key.first, key.second});
            complement &= std::abs(lt(a, b) - neg / total) < 1e-12 && std::abs(lt(a, b) + s.p_geq0(a, b) - 1.0) < 1e-15;
        }
    int scale_ok = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> x(59), y(59), cx(59);
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.normal();
        double c = std::exp(rng.uniform(-8, 8));
        for (std::size_t k = 0; k < 59; ++k) cx[k] = c * x[k];
        scale_ok += std::abs(cosine(cx, y) - cosine(x, y)) <= 1e-12;
    }
    bool pass = sym && diag && clamp && complement && scale_ok == 1000;
    return {pass, std::string("symmetry ") + (sym ? "ok" : "BAD") + ", diagonal " + (diag ? "ok" : "BAD") + ", clamp " +
                      (clamp ? "ok" : "BAD") + ", complementarity on 500 vectors " + (complement ? "ok" : "BAD") +
                      ", scale invariance " + std::to_string(scale_ok) + "/1000"};
}

// 4 ----------------------------------------------------------------------------
Outcome kmeans_suite() {
    bool monotone = true;
    int runs = 0;
    auto watch = [&](const KMeansResult& r) {
        ++runs;
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
            monotone &= r.inertia_history[i] <= r.inertia_history[i - 1] * (1 + 1e-12) + 1e-12;
    };
    int recovered = 0, trials = 10;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(400 + trial);
        Eigen::MatrixXd x(20, 3);
        std::vector<int> truth(20);
        for (int i = 0; i < 20; ++i) {
            truth[i] = i < 2 ? i : (rng.bernoulli(0.5) ? 1 : 0);
            for (int j = 0; j < 3; ++j) x(i, j) = rng.normal() + (truth[i] ? 100.0 : 0.0);
        }
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_mask = 0;
        for (std::uint32_t mask = 0; mask < (1u << 19); ++mask) {
            Eigen::RowVector3d mu[2] = {Eigen::RowVector3d::Zero(), Eigen::RowVector3d::Zero()};
            int n[2] = {0, 0};
            auto side = [&](int i) { return i == 0 ? 0 : int((mask >> (i - 1)) & 1); };
            for (int i = 0; i < 20; ++i) mu[side(i)] += x.row(i), ++n[side(i)];
            double v = 0;
            for (int c = 0; c < 2; ++c)
                if (n[c]) mu[c] /= n[c];
            for (int i = 0; i < 20; ++i) v += (x.row(i) - mu[side(i)]).squaredNorm();
            if (v < best) best = v, best_mask = mask;
        }
        auto r = kmeans(x, {2, static_cast<std::uint64_t>(trial), 300, 10});
        watch(r);
        bool same = true;
        for (int i = 1; i < 20; ++i) {
            int brute = int((best_mask >> (i - 1)) & 1);
            same &= brute == truth[i] && ((r.labels[i] == r.labels[0]) == (brute == 0));
        }
        recovered += same;
    }
    Rng rng(450);
    for (int trial = 0; trial < 40; ++trial) {
        Eigen::MatrixXd x(60, 5);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal() * (1 + trial % 4);
        watch(kmeans(x, {static_cast<std::size_t>(2 + trial % 6), static_cast<std::uint64_t>(trial), 300, 5}));
    }
    return {recovered == trials && monotone,
            std::to_string(recovered) + "/" + std::to_string(trials) +
                " blob pairs recovered exactly (brute-force oracle), inertia monotone on " + std::to_string(runs) +
                " runs: " + (monotone ? "yes" : "NO")};
}

// 5 ----------------------------------------------------------------------------
Outcome split_suite() {
    Rng rng(505);
    const std::string focus = "Phishing";
    const std::vector<std::string> acts{"Phishing", "Hack", "Scam", "Ponzi", "Gambling"};
    std::size_t id = 1;
    int cases = 0, failures = 0;
    for (int trial = 0; trial < 300; ++trial) {
        LabeledDataset d;
        d.add(testing::row(testing::address(id++), {0}, true, focus));
        d.add(testing::row(testing::address(id++), {0}, false));
        std::size_t n = 5 + rng.index(150);
        for (std::size_t i = 2; i < n; ++i) {
            bool mal = rng.bernoulli(0.4);
            d.add(testing::row(testing::address(id++), {0}, mal, mal ? acts[rng.index(acts.size())] : ""));
        }
        if (rng.bernoulli(0.5)) d.add(testing::row(testing::address(id++), {0}, true, "Singleton"));
        std::uint64_t seed = rng.bits();
        auto base = make_c0(d, seed);
        std::map<SplitConfig, SplitPair> s;
        for (auto c : {SplitConfig::C1, SplitConfig::C2, SplitConfig::C3, SplitConfig::C4, SplitConfig::C5})
            s.emplace(c, make_split(d, c, focus, seed));
        s.emplace(SplitConfig::C0, base);
        bool ok = base.train.size() == train_share(d.size()) && base.train.size() + base.test.size() == d.size();
        for (auto& [c, p] : s) {
            auto tr = p.train.addresses();
            for (const auto& r : p.test.rows()) ok &= !tr.contains(r.address);
        }
        ok &= s[SplitConfig::C1].train.addresses() == base.train.addresses();
        ok &= s[SplitConfig::C2].train.addresses() == s[SplitConfig::C3].train.addresses();
        ok &= s[SplitConfig::C2].train.count_activity(focus) == 0 && s[SplitConfig::C3].train.count_activity(focus) == 0;
        ok &= s[SplitConfig::C2].test.addresses() == base.test.addresses();
        for (auto c : {SplitConfig::C1, SplitConfig::C3, SplitConfig::C4}) ok &= s[c].test.count_activity(focus) == 0;
        auto c4 = s[SplitConfig::C4].train.addresses();
        for (const auto& r : base.test.rows())
            if (r.activity == focus) ok &= c4.contains(r.address);
        const auto& c5 = s[SplitConfig::C5];
        for (const auto& a : d.activities()) ok &= c5.train.count_activity(a) == train_share(d.count_activity(a));
        if (d.count_activity("Singleton") == 1)
            ok &= c5.train.count_activity("Singleton") == 1 && c5.test.count_activity("Singleton") == 0;
        ++cases;
        failures += !ok;
    }
    return {cases >= 200 && failures == 0,
            std::to_string(cases) + " random datasets, " + std::to_string(failures) + " invariant violations"};
}

// 6 ----------------------------------------------------------------------------
Outcome bias_analogue() {
    auto t0 = std::chrono::steady_clock::now();
    auto settings = desk_settings();
    const std::vector<ModelKind> kinds{ModelKind::RandomForest, ModelKind::ExtraTrees, ModelKind::AdaBoost,
                                       ModelKind::GradientBoosting, ModelKind::NeuralNet};
    auto c2_recalls = [&](const LabeledDataset& data) {
        std::map<ModelKind, double> out;
        for (auto k : kinds) {
            ExperimentSpec spec;
            spec.config = SplitConfig::C2;
            spec.focus_activity = "A";
            spec.model = settings.models;
            spec.model.kind = k;
            spec.repeats = 5;
            spec.base_seed = 600;
            out[k] = activity_recall(run_experiment({&data, nullptr, nullptr}, spec).report, "A");
        }
        return out;
    };
    auto similar = synthetic_dataset({entry("benign", "benign_regular", 150), entry("A", "phishing_like", 40),
                                      entry("B", "phishing_like", 40)},
                                     61);
    auto disjoint = synthetic_dataset({entry("benign", "benign_regular", 150), entry("A", "gambling_like", 40),
                                       entry("B", "phishing_like", 40)},
                                      62);
    auto sim = c2_recalls(similar), dis = c2_recalls(disjoint);
    bool transfer = false, drop = true;
    std::string detail;
    for (auto k : kinds) {
        transfer |= sim[k] >= 0.5;
        drop &= dis[k] < 0.5;
        detail += std::string(to_string(k)) + " " + fmt(sim[k], 2) + "/" + fmt(dis[k], 2) + " ";
    }
    double secs = seconds_since(t0);
    return {transfer && drop && secs < 120.0,
            "C2 recall on A, similar/disjoint: " + detail + "(" + fmt(secs, 1) + " s)"};
}

// 7 ----------------------------------------------------------------------------
Outcome classifier_sanity() {
    auto settings = desk_settings();
    auto data = synthetic_dataset({entry("benign", "benign_regular", 150), entry("Phishing", "phishing_like", 40),
                                   entry("Hack", "hack_like", 25), entry("Gambling", "gambling_like", 25)},
                                  settings.seed);
    auto run_all = [&]() {
        std::map<ModelKind, ConfusionReport> out;
        for (auto k : kAllModelKinds) {
            ExperimentSpec spec;
            spec.config = SplitConfig::C0;
            spec.model = settings.models;
            spec.model.kind = k;
            spec.repeats = 10;
            spec.base_seed = 700;
            out[k] = run_experiment({&data, nullptr, nullptr}, spec).report;
        }
        return out;
    };
    auto first = run_all(), second = run_all();
    bool all_good = true, identical = true;
    std::string detail;
    for (auto k : kAllModelKinds) {
        double m = first[k].recall_mal.value_or(0), b = first[k].recall_ben.value_or(0);
        all_good &= m >= 0.9 && b >= 0.9;
        identical &= report_to_json(first[k]).dump() == report_to_json(second[k]).dump();
        detail += std::string(to_string(k)) + " " + fmt(m, 2) + "/" + fmt(b, 2) + " ";
    }
    return {all_good && identical,
            "recall mal/ben: " + detail + "rerun " + (identical ? "byte-identical" : "DIFFERS")};
}

// 8 ----------------------------------------------------------------------------
Outcome gradient_check() {
    Rng init(808);
    MlpParams p;
    p.hidden_layers = {8, 6};
    p.dropout = 0.5;
    Mlp net(5, p, init);
    for (auto* param : net.params())
        if (!param->decay)
            for (Eigen::Index k = 0; k < param->value.size(); ++k) param->value.data()[k] = init.uniform(-0.3, 0.3);
    Eigen::MatrixXd z(3, 5);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = init.normal();
    Eigen::VectorXd y(3);
    y << 1, 0, 1;
    const double l2 = 1e-3, h = 1e-5;
    net.loss_and_gradient(z, y, l2, false, nullptr);
    double diff = 0, na = 0, nn = 0;
    for (auto* param : net.params()) {
        Eigen::MatrixXd analytic = param->grad;
        for (Eigen::Index k = 0; k < param->value.size(); ++k) {
            double keep = param->value.data()[k];
            param->value.data()[k] = keep + h;
            double up = net.loss(z, y, l2);
            param->value.data()[k] = keep - h;
            double down = net.loss(z, y, l2);
            param->value.data()[k] = keep;
            double numeric = (up - down) / (2 * h);
            diff += std::pow(analytic.data()[k] - numeric, 2), na += std::pow(analytic.data()[k], 2),
                nn += numeric * numeric;
        }
    }
    double rel = std::sqrt(diff) / (std::sqrt(na) + std::sqrt(nn));
    return {rel < 1e-4, "relative error " + [&] {
                std::ostringstream ss;
                ss << std::scientific << std::setprecision(2) << rel;
                return ss.str();
            }() + " (3 samples, dropout off)"};
}

// 9 ----------------------------------------------------------------------------
Outcome gan_suite() {
    bool rejects = false;
    {
        GanConfig tiny;
        tiny.epochs = 1;
        try {
            gan_fit(Eigen::MatrixXd::Ones(9, 2), tiny);
        } catch (const Error& e) {
            rejects = std::string(e.what()).find("insufficient feature vectors") != std::string::npos;
        }
    }

    auto t0 = std::chrono::steady_clock::now();
    Rng rng(909);
    Eigen::MatrixXd toy(500, 2);
    for (Eigen::Index i = 0; i < 500; ++i) toy.row(i) << rng.normal(3, 1), rng.normal(-1, 2);
    GanConfig cfg;
    cfg.epochs = 1000;
    cfg.seed = 9;
    auto fit = gan_fit(toy, cfg, "toy");
    auto gen = fit.generator.generate(2000, 99);
    double secs = seconds_since(t0);
    Eigen::RowVectorXd src_mean = toy.colwise().mean(), gen_mean = gen.colwise().mean();
    auto sd = [](const Eigen::MatrixXd& m, Eigen::Index c) {
        return std::sqrt((m.col(c).array() - m.col(c).mean()).square().mean());
    };
    bool moments = true;
    std::string detail;
    for (Eigen::Index c = 0; c < 2; ++c) {
        moments &= std::abs(gen_mean(c) - src_mean(c)) <= 0.3 && std::abs(sd(gen, c) - sd(toy, c)) <= 0.5;
        detail += "col" + std::to_string(c) + " mean " + fmt(gen_mean(c), 2) + " vs " + fmt(src_mean(c), 2) + ", std " +
                  fmt(sd(gen, c), 2) + " vs " + fmt(sd(toy, c), 2) + "; ";
    }
    double d_acc = fit.history.discriminator_accuracy.back();

    auto settings = desk_settings();
    auto data = synthetic_dataset({entry("benign", "benign_regular", 150), entry("Phishing", "phishing_like", 40),
                                   entry("Hack", "hack_like", 25), entry("Gambling", "gambling_like", 25)},
                                  settings.seed);
    auto dg = make_dg(data, {{"Phishing", 200}}, settings.gan);
    auto source = data.filter([](const LabeledRow& r) { return r.activity == "Phishing"; });
    auto st = Standardizer::fit(data.merged(dg).matrix());
    double share = fraction_non_negative(st.transform(dg.matrix()), st.transform(source.matrix()));

    bool pass = rejects && moments && secs < 60.0 && d_acc <= 0.8 && share >= 0.7;
    return {pass, std::string("m<10 ") + (rejects ? "rejected" : "NOT rejected") + "; toy " + detail + fmt(secs, 1) +
                      " s; final discriminator accuracy " + fmt(d_acc, 2) + "; Dg vs phishing-like pairs >= 0: " +
                      fmt(100 * share, 1) + "%"};
}

// 10 ---------------------------------------------------------------------------
Outcome contamination_analogue() {
    auto settings = desk_settings();
    auto data = synthetic_dataset({entry("benign", "benign_regular", 150), entry("Phishing", "phishing_like", 40),
                                   entry("Hack", "hack_like", 30), entry("Gambling", "gambling_like", 40)},
                                  settings.seed);
    auto dg = make_dg(data, {{"Gambling", 200}}, settings.gan);
    auto adversarial_recall = [&](SplitConfig config, ModelKind k, bool inject) {
        ExperimentSpec spec;
        spec.scenario = Scenario::Adversarial;
        spec.config = config;
        spec.focus_activity = "Gambling";
        spec.model = settings.models;
        spec.model.kind = k;
        spec.repeats = 10;
        spec.base_seed = 1000;
        spec.contamination = ContaminationMode::Fraction5;
        spec.inject = inject;
        return run_experiment({&data, nullptr, &dg}, spec).adversarial->recall_mal.value_or(0);
    };
    bool all_up = true;
    std::string detail, informational;
    for (auto k : kAllModelKinds) {
        double clean = adversarial_recall(SplitConfig::C2, k, false);
        double dirty = adversarial_recall(SplitConfig::C2, k, true);
        all_up &= dirty > clean;
        detail += std::string(to_string(k)) + " " + fmt(clean, 3) + "->" + fmt(dirty, 3) + " ";
        double c0_clean = adversarial_recall(SplitConfig::C0, k, false);
        double c0_dirty = adversarial_recall(SplitConfig::C0, k, true);
        informational += std::string(to_string(k)) + " " + fmt(c0_clean, 3) + "->" + fmt(c0_dirty, 3) + " ";
    }
    std::cout << "    info: with the source activity in training (C0): " << informational << "\n";
    return {all_up, "adversarial recall clean->5% Dg, source activity unseen in training (C2): " + detail};
}

// 11 ---------------------------------------------------------------------------
int run_cli(const fs::path& out, const std::string& args) {
    std::string cmd = "\"" + testing::cli_path().string() + "\" --config-file \"" +
                      (testing::source_dir() / "configs" / "desk.json").string() + "\" --out-dir \"" + out.string() +
                      "\" " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = testing::slurp(e.path());
    return files;
}

Outcome reproducibility() {
    auto root = testing::scratch_dir("acceptance-e2e");
    const std::vector<std::string> steps{"synth",
                                         "features",
                                         "similarity",
                                         "cluster",
                                         "split --config C0",
                                         "split --config C2 --focus Phishing",
                                         "train --config C0 --model dt",
                                         "train --config C0 --model rf",
                                         "train --config C0 --model etc",
                                         "train --config C0 --model adaboost",
                                         "train --config C0 --model gboost",
                                         "train --config C0 --model nn",
                                         "advgen",
                                         "report"};
    std::map<std::string, std::string> runs[2];
    for (int r = 0; r < 2; ++r) {
        auto out = root / ("run" + std::to_string(r));
        for (const auto& step : steps)
            if (int code = run_cli(out, step); code != 0)
                return {false, "`malscope " + step + "` exited with " + std::to_string(code)};
        runs[r] = snapshot(out);
    }
    std::size_t differing = 0;
    std::string first;
    for (const auto& [name, bytes] : runs[0]) {
        auto it = runs[1].find(name);
        if (it == runs[1].end() || it->second != bytes)
            if (differing++ == 0) first = name;
    }
    bool same_set = runs[0].size() == runs[1].size();
    fs::remove_all(root);
    return {differing == 0 && same_set && runs[0].size() > 20,
            std::to_string(runs[0].size()) + " files compared across two runs, " + std::to_string(differing) +
                " differ" + (first.empty() ? "" : " (first: " + first + ")")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"feature-oracle equivalence", feature_oracle},
        {"burst/attractiveness examples", burst_suite},
        {"similarity properties", similarity_suite},
        {"k-means recovery and monotone inertia", kmeans_suite},
        {"split-protocol invariants", split_suite},
        {"bias analogue (C2 similarity transfer)", bias_analogue},
        {"classifier sanity and determinism", classifier_sanity},
        {"MLP gradient check", gradient_check},
        {"GAN desk suite", gan_suite},
        {"contamination analogue", contamination_analogue},
        {"end-to-end reproducibility", reproducibility},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        int n = static_cast<int>(i + 1);
        if (!only.empty() && !only.contains(n)) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << std::setw(2) << n << "] " << criteria[i].first << ": "
                  << o.detail << " [" << fmt(seconds_since(t0), 1) << " s]" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
