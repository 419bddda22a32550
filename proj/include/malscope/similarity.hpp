#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "malscope/dataset.hpp"

namespace malscope {

/// dot(a, b) / (|a| |b|), clamped to [-1, 1]. Throws when either vector is
/// all zeros or the lengths differ.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct SimilarityMatrix {
    std::vector<std::string> addresses;
    Eigen::MatrixXd values;  // symmetric, unit diagonal
};

/// Pairwise cosine similarity of the rows of x.
SimilarityMatrix similarity_matrix(std::vector<std::string> addresses, const Eigen::MatrixXd& x);

struct SimilarityOptions {
    /// z-score columns over the whole analysis set before comparing.
    bool standardize = true;
};

/// Fraction of account pairs with cosine >= 0, per activity pair.
struct ActivitySimilarity {
    std::vector<std::string> activities;
    Eigen::MatrixXd p_geq0;       // NaN where no pair exists
    Eigen::MatrixXd pair_counts;  // number of pairs behind each entry
    std::vector<std::string> excluded;

    Eigen::MatrixXd p_lt0() const { return (1.0 - p_geq0.array()).matrix(); }
    /// Every cross pair has non-negative similarity.
    bool similar(std::size_t a, std::size_t b) const { return p_geq0(a, b) == 1.0; }
};

/// Malicious rows of `data` grouped by activity. Off-diagonal entries use all
/// cross pairs, diagonal entries all distinct within-activity pairs.
ActivitySimilarity pairwise_activity_similarity(const LabeledDataset& data, const SimilarityOptions& opts = {});

/// Fraction of (i in a, j in b) row pairs with cosine >= 0.
double fraction_non_negative(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct KMeansOptions {
    std::size_t k = 2;
    std::uint64_t seed = 0;
    int max_iter = 300;
    int restarts = 10;
};

struct KMeansResult {
    std::size_t k = 0;
    std::vector<std::size_t> labels;      // cluster id per row
    Eigen::MatrixXd centroids;            // k x d
    double inertia = 0.0;
    std::vector<double> inertia_history;  // winning restart, one entry per Lloyd iteration
    std::size_t best_restart = 0;
    bool converged = false;
};

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` by inertia.
KMeansResult kmeans(const Eigen::MatrixXd& x, const KMeansOptions& opts);

/// Activity x cluster counts; clusters ordered by descending number of
/// malicious members (ties by cluster id).
struct Contingency {
    std::vector<std::string> activities;  // benign last
    std::vector<std::size_t> cluster_order;
    Eigen::MatrixXi counts;  // activities x ranked clusters
};

struct ClusterAssignment {
    std::size_t k = 0;
    std::vector<std::string> addresses;
    std::vector<std::size_t> labels;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
    Contingency contingency;
};

Contingency contingency_table(const LabeledDataset& data, const std::vector<std::size_t>& labels, std::size_t k);

/// Clusters every row of `data`; k defaults to (#malicious activities + 1).
ClusterAssignment cluster_accounts(const LabeledDataset& data, std::optional<std::size_t> k, std::uint64_t seed,
                                   const SimilarityOptions& opts = {}, int max_iter = 300, int restarts = 10);

}  // namespace malscope
