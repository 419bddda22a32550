#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "malscope/rng.hpp"

namespace malscope {

enum class Criterion { Entropy, Gini, SquaredError };

/// How a node picks its threshold on a candidate feature.
enum class ThresholdSearch {
    Best,    // midpoints between consecutive distinct values
    Random,  // one uniform draw between the node's min and max
};

struct GrowOptions {
    Criterion criterion = Criterion::Entropy;
    std::size_t max_features = 0;  // features examined per node; 0 means all
    std::size_t min_samples_leaf = 1;
    std::size_t min_samples_split = 2;
    int max_depth = -1;  // unlimited when negative
    ThresholdSearch search = ThresholdSearch::Best;
};

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // weighted mean target of the node's samples
    double weight = 0.0;
    std::size_t samples = 0;
};

/// Binary tree; samples with x[feature] <= threshold go left.
class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    int depth() const;
    std::size_t leaf_count() const;

    nlohmann::json to_json() const;
    static DecisionTree from_json(const nlohmann::json& j);

private:
    std::vector<TreeNode> nodes_;
};

/// Greedy top-down growth on the listed rows (repeats allowed). y is 0/1 for
/// the classification criteria and real-valued for squared error; w holds
/// per-row sample weights indexed like x. Ties in gain keep the lowest
/// feature index, then the lowest threshold.
DecisionTree grow_tree(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const double> w,
                       const std::vector<std::size_t>& rows, const GrowOptions& opts, Rng& rng);

}  // namespace malscope
