#include "malscope/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "malscope/error.hpp"

namespace malscope {

namespace {

constexpr const char* kModelFormat = "malscope-model/1";

std::string_view criterion_name(Criterion c) {
    switch (c) {
        case Criterion::Entropy: return "entropy";
        case Criterion::Gini: return "gini";
        case Criterion::SquaredError: return "squared_error";
    }
    return "?";
}

Criterion parse_criterion(std::string_view s) {
    if (s == "entropy") return Criterion::Entropy;
    if (s == "gini") return Criterion::Gini;
    throw config_error("unknown criterion '" + std::string(s) + "' (expected entropy or gini)");
}

void require_two_classes(const LabeledDataset& train) {
    if (train.empty()) throw data_error("training set is empty");
    if (train.count(Klass::Malicious) == 0 || train.count(Klass::Benign) == 0)
        throw data_error("training set holds a single class; both malicious and benign rows are required");
}

std::size_t fraction_count(double frac, std::size_t n) {
    auto k = static_cast<std::size_t>(std::floor(frac * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n);
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    std::iota(r.begin(), r.end(), std::size_t{0});
    return r;
}

GrowOptions tree_options(const TreeParams& p, std::size_t dim, ThresholdSearch search) {
    GrowOptions o;
    o.criterion = p.criterion;
    o.max_features = p.max_features >= 1.0 ? 0 : fraction_count(p.max_features, dim);
    o.min_samples_leaf = p.min_samples_leaf;
    o.min_samples_split = p.min_samples_split;
    o.max_depth = p.max_depth;
    o.search = search;
    return o;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double mean_log_loss(const Eigen::VectorXd& f, const Eigen::VectorXd& y) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) s += nn::softplus(f[i]) - y[i] * f[i];
    return s / static_cast<double>(f.size());
}

nlohmann::json trees_to_json(const std::vector<DecisionTree>& trees) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : trees) arr.push_back(t.to_json());
    return arr;
}

std::vector<DecisionTree> trees_from_json(const nlohmann::json& j) {
    std::vector<DecisionTree> out;
    for (const auto& t : j) out.push_back(DecisionTree::from_json(t));
    return out;
}

}  // namespace

std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::DecisionTree: return "dt";
        case ModelKind::RandomForest: return "rf";
        case ModelKind::ExtraTrees: return "etc";
        case ModelKind::AdaBoost: return "adaboost";
        case ModelKind::GradientBoosting: return "gboost";
        case ModelKind::NeuralNet: return "nn";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view s) {
    for (ModelKind k : kAllModelKinds)
        if (to_string(k) == s) return k;
    throw config_error("unknown model kind '" + std::string(s) + "' (expected dt, rf, etc, adaboost, gboost or nn)");
}

// --- parameters -------------------------------------------------------------

std::vector<std::string> TreeParams::validate() const {
    if (!(max_features > 0.0 && max_features <= 1.0)) throw config_error("max_features must lie in (0, 1]");
    if (!(max_samples > 0.0 && max_samples <= 1.0)) throw config_error("max_samples must lie in (0, 1]");
    if (min_samples_leaf < 1) throw config_error("min_samples_leaf must be >= 1");
    if (min_samples_split < 2) throw config_error("min_samples_split must be >= 2");
    if (n_estimators < 1) throw config_error("n_estimators must be >= 1");
    if (criterion == Criterion::SquaredError) throw config_error("classification trees use entropy or gini");
    std::vector<std::string> warnings;
    if (min_samples_split < 2 * min_samples_leaf)
        warnings.push_back("min_samples_split < 2 * min_samples_leaf: some nodes can never be split");
    return warnings;
}

TreeParams TreeParams::tuned_extra_trees() {
    TreeParams p;
    p.class_weight = ClassWeight::Balanced;
    p.criterion = Criterion::Entropy;
    p.max_features = 0.3;
    p.max_samples = 0.3;
    p.min_samples_leaf = 14;
    p.min_samples_split = 20;
    p.n_estimators = 200;
    p.bootstrap = false;
    return p;
}

TreeParams TreeParams::random_forest() {
    TreeParams p;
    p.max_features = 0.3;
    p.n_estimators = 100;
    p.bootstrap = true;
    return p;
}

void MlpParams::validate() const {
    if (epochs < 1) throw config_error("epochs must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw config_error("dropout must lie in [0, 1)");
    if (l2 < 0.0) throw config_error("l2 must be non-negative");
    if (batch_size < 1) throw config_error("batch_size must be >= 1");
    for (int w : hidden_layers)
        if (w < 1) throw config_error("hidden layer widths must be positive");
}

nlohmann::json tree_params_to_json(const TreeParams& p) {
    return {{"criterion", criterion_name(p.criterion)},
            {"max_features", p.max_features},
            {"min_samples_leaf", p.min_samples_leaf},
            {"min_samples_split", p.min_samples_split},
            {"n_estimators", p.n_estimators},
            {"max_samples", p.max_samples},
            {"bootstrap", p.bootstrap},
            {"class_weight", p.class_weight == ClassWeight::Balanced ? "balanced" : "none"},
            {"max_depth", p.max_depth},
            {"seed", p.seed}};
}

TreeParams tree_params_from_json(const nlohmann::json& j, TreeParams p) {
    if (j.contains("criterion")) p.criterion = parse_criterion(j["criterion"].get<std::string>());
    if (j.contains("max_features")) p.max_features = j["max_features"].get<double>();
    if (j.contains("min_samples_leaf")) p.min_samples_leaf = j["min_samples_leaf"].get<std::size_t>();
    if (j.contains("min_samples_split")) p.min_samples_split = j["min_samples_split"].get<std::size_t>();
    if (j.contains("n_estimators")) p.n_estimators = j["n_estimators"].get<std::size_t>();
    if (j.contains("max_samples")) p.max_samples = j["max_samples"].get<double>();
    if (j.contains("bootstrap")) p.bootstrap = j["bootstrap"].get<bool>();
    if (j.contains("class_weight")) {
        auto cw = j["class_weight"].get<std::string>();
        if (cw == "balanced") p.class_weight = ClassWeight::Balanced;
        else if (cw == "none") p.class_weight = ClassWeight::None;
        else throw config_error("unknown class_weight '" + cw + "'");
    }
    if (j.contains("max_depth")) p.max_depth = j["max_depth"].get<int>();
    if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
    return p;
}

nlohmann::json mlp_params_to_json(const MlpParams& p) {
    return {{"hidden_layers", p.hidden_layers},
            {"epochs", p.epochs},
            {"l2", p.l2},
            {"dropout", p.dropout},
            {"learning_rate", p.adam.learning_rate},
            {"beta1", p.adam.beta1},
            {"beta2", p.adam.beta2},
            {"epsilon", p.adam.epsilon},
            {"batch_size", p.batch_size},
            {"seed", p.seed}};
}

MlpParams mlp_params_from_json(const nlohmann::json& j, MlpParams p) {
    if (j.contains("hidden_layers")) p.hidden_layers = j["hidden_layers"].get<std::vector<int>>();
    if (j.contains("epochs")) p.epochs = j["epochs"].get<int>();
    if (j.contains("l2")) p.l2 = j["l2"].get<double>();
    if (j.contains("dropout")) p.dropout = j["dropout"].get<double>();
    if (j.contains("learning_rate")) p.adam.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("beta1")) p.adam.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) p.adam.beta2 = j["beta2"].get<double>();
    if (j.contains("epsilon")) p.adam.epsilon = j["epsilon"].get<double>();
    if (j.contains("batch_size")) p.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
    return p;
}

std::vector<double> class_weights(const Eigen::VectorXd& y, ClassWeight mode) {
    const auto n = static_cast<std::size_t>(y.size());
    std::vector<double> w(n, 1.0);
    if (mode == ClassWeight::None) return w;
    double pos = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) pos += y[i];
    const double neg = static_cast<double>(n) - pos;
    for (std::size_t i = 0; i < n; ++i) {
        const double cls = y[static_cast<Eigen::Index>(i)] > 0.5 ? pos : neg;
        w[i] = static_cast<double>(n) / (2.0 * cls);
    }
    return w;
}

// --- Mlp --------------------------------------------------------------------

Mlp::Mlp(Eigen::Index inputs, const MlpParams& params, Rng& rng) {
    Eigen::Index width = inputs;
    for (int h : params.hidden_layers) {
        net_.add<nn::Dense>(width, h).init(rng);
        net_.add<nn::Relu>();
        if (params.dropout > 0.0) net_.add<nn::Dropout>(params.dropout);
        width = h;
    }
    net_.add<nn::Dense>(width, 1).init(rng);
}

Mlp Mlp::from_network(nn::Sequential net) {
    Mlp m;
    m.net_ = std::move(net);
    return m;
}

Eigen::VectorXd Mlp::logits(const Eigen::MatrixXd& z, bool training, Rng* rng) {
    return net_.forward(z, training, rng).col(0);
}

double Mlp::loss(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double l2) {
    const Eigen::VectorXd f = logits(z, false, nullptr);
    double penalty = 0.0;
    for (nn::Param* p : net_.params())
        if (p->decay) penalty += p->value.squaredNorm();
    return mean_log_loss(f, y) + l2 * penalty;
}

double Mlp::loss_and_gradient(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double l2, bool training,
                              Rng* rng) {
    const Eigen::VectorXd f = logits(z, training, rng);
    const double n = static_cast<double>(f.size());
    Eigen::MatrixXd df(f.size(), 1);
    for (Eigen::Index i = 0; i < f.size(); ++i) df(i, 0) = (nn::sigmoid(f[i]) - y[i]) / n;
    net_.zero_grad();
    net_.backward(df);
    double penalty = 0.0;
    for (nn::Param* p : net_.params()) {
        if (!p->decay) continue;
        penalty += p->value.squaredNorm();
        p->grad += 2.0 * l2 * p->value;
    }
    return mean_log_loss(f, y) + l2 * penalty;
}

// --- TrainedModel -----------------------------------------------------------

TrainedModel::TrainedModel(ModelKind kind, nlohmann::json params, ModelState state, std::size_t feature_count,
                           std::uint64_t seed, std::size_t train_size)
    : kind_(kind), params_(std::move(params)), state_(std::move(state)), feature_count_(feature_count),
      seed_(seed), train_size_(train_size) {}

std::vector<double> TrainedModel::scores(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.cols()) != feature_count_)
        throw data_error("model expects " + std::to_string(feature_count_) + " features, got " +
                         std::to_string(x.cols()));
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> out(n, 0.0);
    std::visit(
        [&](auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, TreeEnsembleState>) {
                for (std::size_t i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (const auto& t : s.trees) {
                        const double v = t.predict(x.row(static_cast<Eigen::Index>(i)));
                        acc += s.vote ? (classify(v) == Klass::Malicious ? 1.0 : 0.0) : v;
                    }
                    out[i] = acc / static_cast<double>(s.trees.size());
                }
            } else if constexpr (std::is_same_v<S, AdaBoostState>) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (s.stumps.empty()) {
                        out[i] = s.prior;
                        continue;
                    }
                    double f = 0.0;
                    for (std::size_t t = 0; t < s.stumps.size(); ++t) {
                        const double v = s.stumps[t].predict(x.row(static_cast<Eigen::Index>(i)));
                        f += s.alphas[t] * (v > 0.5 ? 1.0 : -1.0);
                    }
                    out[i] = nn::sigmoid(2.0 * f);
                }
            } else if constexpr (std::is_same_v<S, GBoostState>) {
                for (std::size_t i = 0; i < n; ++i) {
                    double f = s.init;
                    for (const auto& t : s.trees) f += s.learning_rate * t.predict(x.row(static_cast<Eigen::Index>(i)));
                    out[i] = nn::sigmoid(f);
                }
            } else {
                if (n == 0) return;
                const Eigen::VectorXd f = s.mlp.logits(s.standardizer.transform(x), false, nullptr);
                for (std::size_t i = 0; i < n; ++i) out[i] = nn::sigmoid(f[static_cast<Eigen::Index>(i)]);
            }
        },
        state_);
    return out;
}

std::vector<Prediction> TrainedModel::predict(const Eigen::MatrixXd& x) const {
    auto s = scores(x);
    std::vector<Prediction> out;
    out.reserve(s.size());
    for (double v : s) out.push_back({classify(v), v});
    return out;
}

std::vector<Prediction> predict(const TrainedModel& model, const Eigen::MatrixXd& x) { return model.predict(x); }

nlohmann::json TrainedModel::to_json() const {
    nlohmann::json st;
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, TreeEnsembleState>) {
                st = {{"trees", trees_to_json(s.trees)}, {"vote", s.vote}};
            } else if constexpr (std::is_same_v<S, AdaBoostState>) {
                nlohmann::json stages = nlohmann::json::array();
                for (const auto& g : s.stages)
                    stages.push_back({{"error", g.error},
                                      {"alpha", g.alpha},
                                      {"weight_sum", g.weight_sum},
                                      {"train_error", g.train_error},
                                      {"loss_bound", g.loss_bound}});
                st = {{"stumps", trees_to_json(s.stumps)}, {"alphas", s.alphas}, {"stages", stages}, {"prior", s.prior}};
            } else if constexpr (std::is_same_v<S, GBoostState>) {
                st = {{"init", s.init},
                      {"learning_rate", s.learning_rate},
                      {"trees", trees_to_json(s.trees)},
                      {"train_loss", s.train_loss}};
            } else {
                const auto& mean = s.standardizer.mean();
                const auto& scale = s.standardizer.scale();
                st = {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
                      {"scale", std::vector<double>(scale.data(), scale.data() + scale.size())},
                      {"layers", s.mlp.network().to_json()},
                      {"epoch_loss", s.epoch_loss}};
            }
        },
        state_);
    return {{"format", kModelFormat},
            {"kind", to_string(kind_)},
            {"params", params_},
            {"feature_count", feature_count_},
            {"seed", seed_},
            {"train_size", train_size_},
            {"state", st}};
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != kModelFormat)
        throw data_error("unsupported model document (expected format " + std::string(kModelFormat) + ")");
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    const auto& st = j.at("state");
    ModelState state;
    switch (kind) {
        case ModelKind::DecisionTree:
        case ModelKind::RandomForest:
        case ModelKind::ExtraTrees:
            state = TreeEnsembleState{trees_from_json(st.at("trees")), st.at("vote").get<bool>()};
            break;
        case ModelKind::AdaBoost: {
            AdaBoostState a;
            a.stumps = trees_from_json(st.at("stumps"));
            a.alphas = st.at("alphas").get<std::vector<double>>();
            a.prior = st.at("prior").get<double>();
            for (const auto& g : st.at("stages"))
                a.stages.push_back({g.at("error").get<double>(), g.at("alpha").get<double>(),
                                    g.at("weight_sum").get<double>(), g.at("train_error").get<double>(),
                                    g.at("loss_bound").get<double>()});
            state = std::move(a);
            break;
        }
        case ModelKind::GradientBoosting:
            state = GBoostState{st.at("init").get<double>(), st.at("learning_rate").get<double>(),
                                trees_from_json(st.at("trees")), st.at("train_loss").get<std::vector<double>>()};
            break;
        case ModelKind::NeuralNet: {
            auto mean = st.at("mean").get<std::vector<double>>();
            auto scale = st.at("scale").get<std::vector<double>>();
            MlpState m;
            m.standardizer = Standardizer::from(Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())),
                                                Eigen::Map<Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size())));
            m.mlp = Mlp::from_network(nn::Sequential::from_json(st.at("layers")));
            m.epoch_loss = st.at("epoch_loss").get<std::vector<double>>();
            state = std::move(m);
            break;
        }
    }
    return TrainedModel(kind, j.at("params"), std::move(state), j.at("feature_count").get<std::size_t>(),
                        j.at("seed").get<std::uint64_t>(), j.at("train_size").get<std::size_t>());
}

// --- fitting ----------------------------------------------------------------

TrainedModel fit_tree(const LabeledDataset& train, const TreeParams& params) {
    params.validate();
    require_two_classes(train);
    const Eigen::MatrixXd x = train.matrix();
    const auto y = to_vector(train.targets());
    const auto w = class_weights(train.targets(), params.class_weight);
    Rng rng(params.seed);
    auto tree = grow_tree(x, y, w, all_rows(train.size()), tree_options(params, train.dim(), ThresholdSearch::Best), rng);
    return TrainedModel(ModelKind::DecisionTree, tree_params_to_json(params), TreeEnsembleState{{std::move(tree)}, false},
                        train.dim(), params.seed, train.size());
}

TrainedModel fit_forest(const LabeledDataset& train, const TreeParams& params, ForestMode mode) {
    params.validate();
    require_two_classes(train);
    const Eigen::MatrixXd x = train.matrix();
    const auto y = to_vector(train.targets());
    const auto w = class_weights(train.targets(), params.class_weight);
    const std::size_t n = train.size();
    const std::size_t draw = fraction_count(params.max_samples, n);
    const bool with_replacement = mode == ForestMode::Bagging && params.bootstrap;
    const auto opts = tree_options(params, train.dim(),
                                   mode == ForestMode::ExtraTrees ? ThresholdSearch::Random : ThresholdSearch::Best);

    TreeEnsembleState state;
    state.vote = true;
    state.trees.reserve(params.n_estimators);
    for (std::size_t m = 0; m < params.n_estimators; ++m) {
        Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(m)));
        std::vector<std::size_t> rows;
        if (with_replacement) {
            rows.reserve(draw);
            for (std::size_t i = 0; i < draw; ++i) rows.push_back(rng.index(n));
        } else {
            rows = all_rows(n);
            rng.shuffle(rows.begin(), rows.end());
            rows.resize(draw);
        }
        std::sort(rows.begin(), rows.end());
        state.trees.push_back(grow_tree(x, y, w, rows, opts, rng));
    }
    auto snapshot = tree_params_to_json(params);
    snapshot["mode"] = mode == ForestMode::Bagging ? "bagging_rf" : "extra";
    return TrainedModel(mode == ForestMode::Bagging ? ModelKind::RandomForest : ModelKind::ExtraTrees, snapshot,
                        std::move(state), train.dim(), params.seed, n);
}

TrainedModel fit_adaboost(const LabeledDataset& train, int rounds, int depth) {
    if (rounds < 0) throw config_error("rounds must be non-negative");
    if (depth < 1) throw config_error("depth must be >= 1");
    require_two_classes(train);
    const Eigen::MatrixXd x = train.matrix();
    const auto y = to_vector(train.targets());
    const std::size_t n = train.size();
    const auto rows = all_rows(n);
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<double> f(n, 0.0);

    AdaBoostState state;
    state.prior = static_cast<double>(train.count(Klass::Malicious)) / static_cast<double>(n);
    GrowOptions opts;
    opts.criterion = Criterion::Gini;
    opts.max_depth = depth;
    Rng rng(0);
    double bound = 1.0;

    for (int r = 0; r < rounds; ++r) {
        auto stump = grow_tree(x, y, w, rows, opts, rng);
        std::vector<double> h(n);
        double eps = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            h[i] = stump.predict(x.row(static_cast<Eigen::Index>(i))) > 0.5 ? 1.0 : 0.0;
            if (h[i] != y[i]) eps += w[i];
        }
        if (eps >= 0.5) break;
        const double eps_c = std::max(eps, 1e-10);
        const double alpha = 0.5 * std::log((1.0 - eps_c) / eps_c);

        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double yi = y[i] > 0.5 ? 1.0 : -1.0;
            const double hi = h[i] > 0.5 ? 1.0 : -1.0;
            w[i] *= std::exp(-alpha * yi * hi);
            total += w[i];
            f[i] += alpha * hi;
        }
        double wsum = 0.0;
        for (double& wi : w) {
            wi /= total;
            wsum += wi;
        }
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < n; ++i)
            if ((f[i] > 0.0 ? 1.0 : 0.0) != y[i]) ++wrong;
        bound *= 2.0 * std::sqrt(eps * (1.0 - eps));

        state.stumps.push_back(std::move(stump));
        state.alphas.push_back(alpha);
        state.stages.push_back({eps, alpha, wsum, static_cast<double>(wrong) / static_cast<double>(n), bound});
        if (eps == 0.0) break;
    }
    return TrainedModel(ModelKind::AdaBoost, {{"rounds", rounds}, {"depth", depth}}, std::move(state), train.dim(), 0,
                        n);
}

TrainedModel fit_gboost(const LabeledDataset& train, int rounds, double learning_rate, int depth) {
    if (rounds < 0) throw config_error("rounds must be non-negative");
    if (learning_rate < 0.0) throw config_error("learning_rate must be non-negative");
    if (depth < 1) throw config_error("depth must be >= 1");
    require_two_classes(train);
    const Eigen::MatrixXd x = train.matrix();
    const Eigen::VectorXd y = train.targets();
    const std::size_t n = train.size();
    const auto rows = all_rows(n);
    const std::vector<double> ones(n, 1.0);

    GBoostState state;
    const double p = y.mean();
    state.init = std::log(p / (1.0 - p));
    state.learning_rate = learning_rate;
    Eigen::VectorXd f = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), state.init);
    state.train_loss.push_back(mean_log_loss(f, y));

    GrowOptions opts;
    opts.criterion = Criterion::SquaredError;
    opts.max_depth = depth;
    Rng rng(0);
    std::vector<double> r(n);
    for (int round = 0; round < rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            r[i] = y[ii] - nn::sigmoid(f[ii]);
        }
        auto tree = grow_tree(x, r, ones, rows, opts, rng);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            f[ii] += learning_rate * tree.predict(x.row(ii));
        }
        state.trees.push_back(std::move(tree));
        state.train_loss.push_back(mean_log_loss(f, y));
    }
    return TrainedModel(ModelKind::GradientBoosting,
                        {{"rounds", rounds}, {"learning_rate", learning_rate}, {"depth", depth}}, std::move(state),
                        train.dim(), 0, n);
}

TrainedModel fit_mlp(const LabeledDataset& train, const MlpParams& params) {
    params.validate();
    require_two_classes(train);
    const Eigen::MatrixXd raw = train.matrix();
    MlpState state;
    state.standardizer = Standardizer::fit(raw);
    const Eigen::MatrixXd z = state.standardizer.transform(raw);
    const Eigen::VectorXd y = train.targets();
    const std::size_t n = train.size();

    Rng init_rng(derive_seed(params.seed, "init"));
    Rng batch_rng(derive_seed(params.seed, "batches"));
    Rng drop_rng(derive_seed(params.seed, "dropout"));
    state.mlp = Mlp(raw.cols(), params, init_rng);
    nn::Adam adam(params.adam);
    auto ps = state.mlp.params();

    std::vector<std::size_t> order = all_rows(n);
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        batch_rng.shuffle(order.begin(), order.end());
        double epoch_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += params.batch_size) {
            const std::size_t end = std::min(n, start + params.batch_size);
            const auto b = static_cast<Eigen::Index>(end - start);
            Eigen::MatrixXd zb(b, z.cols());
            Eigen::VectorXd yb(b);
            for (Eigen::Index k = 0; k < b; ++k) {
                const auto src = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(k)]);
                zb.row(k) = z.row(src);
                yb[k] = y[src];
            }
            const double loss = state.mlp.loss_and_gradient(zb, yb, params.l2, true, &drop_rng);
            if (!std::isfinite(loss))
                throw Error(ErrorKind::Numeric, "neural network loss became non-finite at epoch " +
                                                    std::to_string(epoch + 1) + ", batch " +
                                                    std::to_string(batches + 1));
            adam.step(ps);
            epoch_sum += loss;
            ++batches;
        }
        state.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
    }
    return TrainedModel(ModelKind::NeuralNet, mlp_params_to_json(params), std::move(state), train.dim(), params.seed,
                        n);
}

TrainedModel fit_model(const LabeledDataset& train, const ModelSpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
        case ModelKind::DecisionTree: {
            auto p = spec.tree;
            p.seed = seed;
            return fit_tree(train, p);
        }
        case ModelKind::RandomForest: {
            auto p = spec.forest;
            p.seed = seed;
            return fit_forest(train, p, ForestMode::Bagging);
        }
        case ModelKind::ExtraTrees: {
            auto p = spec.extra;
            p.seed = seed;
            return fit_forest(train, p, ForestMode::ExtraTrees);
        }
        case ModelKind::AdaBoost: return fit_adaboost(train, spec.adaboost.rounds, spec.adaboost.depth);
        case ModelKind::GradientBoosting:
            return fit_gboost(train, spec.gboost.rounds, spec.gboost.learning_rate, spec.gboost.depth);
        case ModelKind::NeuralNet: {
            auto p = spec.mlp;
            p.seed = seed;
            return fit_mlp(train, p);
        }
    }
    throw config_error("unknown model kind");
}

}  // namespace malscope
