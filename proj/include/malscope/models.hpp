#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "malscope/dataset.hpp"
#include "malscope/nn.hpp"
#include "malscope/tree.hpp"

namespace malscope {

enum class ModelKind { DecisionTree, RandomForest, ExtraTrees, AdaBoost, GradientBoosting, NeuralNet };

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);  // dt, rf, etc, adaboost, gboost, nn
inline constexpr ModelKind kAllModelKinds[] = {ModelKind::DecisionTree,     ModelKind::RandomForest,
                                               ModelKind::ExtraTrees,       ModelKind::AdaBoost,
                                               ModelKind::GradientBoosting, ModelKind::NeuralNet};

enum class ClassWeight { None, Balanced };

struct TreeParams {
    Criterion criterion = Criterion::Gini;
    double max_features = 1.0;  // fraction of features examined per node
    std::size_t min_samples_leaf = 1;
    std::size_t min_samples_split = 2;
    std::size_t n_estimators = 100;
    double max_samples = 1.0;  // fraction of rows drawn per member
    bool bootstrap = true;     // forests: draw rows with replacement
    ClassWeight class_weight = ClassWeight::None;
    int max_depth = -1;
    std::uint64_t seed = 0;

    /// Throws on invalid values; returns advisory warnings.
    std::vector<std::string> validate() const;

    /// Extra-trees settings used for the bias experiments: balanced class
    /// weights, entropy, 0.3 feature/sample fractions, leaf 14, split 20,
    /// 200 members.
    static TreeParams tuned_extra_trees();
    /// Bagged gini trees on 30% of the features per node, 100 members.
    static TreeParams random_forest();
};

struct MlpParams {
    std::vector<int> hidden_layers{64, 64};
    int epochs = 50;
    double l2 = 1e-4;
    double dropout = 0.5;
    nn::AdamConfig adam{};
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BoostParams {
    int rounds = 100;
    double learning_rate = 0.1;  // gradient boosting only
    int depth = 3;               // 1 for AdaBoost stumps
    std::uint64_t seed = 0;
};

enum class ForestMode { Bagging, ExtraTrees };

struct Prediction {
    Klass klass = Klass::Benign;
    double score = 0.0;  // malicious score in [0, 1]
};

/// Class rule on a score: malicious only above 0.5.
inline Klass classify(double score) { return score > 0.5 ? Klass::Malicious : Klass::Benign; }

// Fitted state per family ------------------------------------------------------

struct TreeEnsembleState {
    std::vector<DecisionTree> trees;
    bool vote = false;  // forests vote; a single tree reports its leaf fraction
};

struct AdaBoostStage {
    double error = 0.0;         // weighted training error of the stump
    double alpha = 0.0;
    double weight_sum = 0.0;    // sample weights after renormalization
    double train_error = 0.0;   // staged ensemble training error
    double loss_bound = 0.0;    // running product of 2 sqrt(err (1 - err))
};

struct AdaBoostState {
    std::vector<DecisionTree> stumps;
    std::vector<double> alphas;
    std::vector<AdaBoostStage> stages;
    double prior = 0.5;  // used when no stump was kept
};

struct GBoostState {
    double init = 0.0;  // prior log-odds
    double learning_rate = 0.1;
    std::vector<DecisionTree> trees;
    std::vector<double> train_loss;  // mean log-loss after init and after every round
};

/// Feed-forward classifier: Dense/ReLU/Dropout blocks and a sigmoid output.
class Mlp {
public:
    Mlp() = default;
    Mlp(Eigen::Index inputs, const MlpParams& params, Rng& rng);

    /// Logits for standardized inputs.
    Eigen::VectorXd logits(const Eigen::MatrixXd& z, bool training, Rng* rng);
    /// Mean binary cross-entropy plus l2 * sum of squared kernel weights;
    /// fills parameter gradients.
    double loss_and_gradient(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double l2, bool training,
                             Rng* rng);
    double loss(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double l2);

    std::vector<nn::Param*> params() { return net_.params(); }
    nn::Sequential& network() { return net_; }
    const nn::Sequential& network() const { return net_; }

    static Mlp from_network(nn::Sequential net);

private:
    nn::Sequential net_;
};

struct MlpState {
    Standardizer standardizer;
    Mlp mlp;
    std::vector<double> epoch_loss;
};

using ModelState = std::variant<TreeEnsembleState, AdaBoostState, GBoostState, MlpState>;

/// A fitted classifier. Prediction is pure and deterministic.
class TrainedModel {
public:
    TrainedModel(ModelKind kind, nlohmann::json params, ModelState state, std::size_t feature_count,
                 std::uint64_t seed, std::size_t train_size);

    ModelKind kind() const { return kind_; }
    std::size_t feature_count() const { return feature_count_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t train_size() const { return train_size_; }
    const nlohmann::json& params() const { return params_; }
    const ModelState& state() const { return state_; }

    std::vector<double> scores(const Eigen::MatrixXd& x) const;
    std::vector<Prediction> predict(const Eigen::MatrixXd& x) const;

    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);

private:
    ModelKind kind_;
    nlohmann::json params_;
    mutable ModelState state_;  // MLP forward passes reuse layer caches
    std::size_t feature_count_;
    std::uint64_t seed_;
    std::size_t train_size_;
};

std::vector<Prediction> predict(const TrainedModel& model, const Eigen::MatrixXd& x);

/// Sample weights: 1 each, or n / (2 n_class) under balanced weighting.
std::vector<double> class_weights(const Eigen::VectorXd& y, ClassWeight mode);

TrainedModel fit_tree(const LabeledDataset& train, const TreeParams& params);
TrainedModel fit_forest(const LabeledDataset& train, const TreeParams& params, ForestMode mode);
TrainedModel fit_adaboost(const LabeledDataset& train, int rounds, int depth = 1);
TrainedModel fit_gboost(const LabeledDataset& train, int rounds, double learning_rate = 0.1, int depth = 3);
TrainedModel fit_mlp(const LabeledDataset& train, const MlpParams& params);

/// Hyperparameters for every kind; fit_model picks the relevant block.
struct ModelSpec {
    ModelKind kind = ModelKind::ExtraTrees;
    TreeParams tree{};
    TreeParams forest = TreeParams::random_forest();
    TreeParams extra = TreeParams::tuned_extra_trees();
    BoostParams adaboost{50, 1.0, 1, 0};
    BoostParams gboost{100, 0.1, 3, 0};
    MlpParams mlp{};
};

/// Fits `spec.kind` with every seed replaced by `seed`.
TrainedModel fit_model(const LabeledDataset& train, const ModelSpec& spec, std::uint64_t seed);

nlohmann::json tree_params_to_json(const TreeParams& p);
TreeParams tree_params_from_json(const nlohmann::json& j, TreeParams defaults = {});
nlohmann::json mlp_params_to_json(const MlpParams& p);
MlpParams mlp_params_from_json(const nlohmann::json& j, MlpParams defaults = {});

}  // namespace malscope
