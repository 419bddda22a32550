#pragma once

#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "malscope/features.hpp"
#include "malscope/types.hpp"

namespace malscope {

struct LabeledRow {
    std::string address;
    std::vector<double> values;
    Klass klass = Klass::Benign;
    std::string activity{kBenignActivity};
    Source source = Source::Da;
};

/// Labeled feature rows. All rows share one dimension (59 for account
/// features); (address, source) pairs are unique.
class LabeledDataset {
public:
    LabeledDataset() = default;
    explicit LabeledDataset(std::vector<LabeledRow> rows);

    void add(LabeledRow row);

    const std::vector<LabeledRow>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    std::size_t dim() const { return dim_; }

    std::size_t count(Klass k) const;
    std::size_t count_activity(std::string_view activity) const;
    /// Malicious activities present, sorted.
    std::vector<std::string> activities() const;
    std::set<std::string> addresses() const;

    LabeledDataset filter(const std::function<bool(const LabeledRow&)>& keep) const;
    LabeledDataset subset(const std::vector<std::size_t>& indices) const;
    LabeledDataset merged(const LabeledDataset& other) const;

    Eigen::MatrixXd matrix() const;
    /// 1 for malicious, 0 for benign.
    Eigen::VectorXd targets() const;

private:
    std::vector<LabeledRow> rows_;
    std::size_t dim_ = 0;
    std::set<std::pair<std::string, Source>> keys_;
};

/// Joins feature vectors with their labels; unlabeled vectors are dropped.
LabeledDataset make_dataset(const std::vector<FeatureVector>& vectors, const LabelMap& labels);

/// Feature matrix CSV: address,klass,activity,source followed by one column
/// per catalog feature name.
void write_feature_matrix(std::ostream& out, const LabeledDataset& data);
void write_feature_matrix(std::ostream& out, const LabeledDataset& data, const std::vector<std::string>& names);
LabeledDataset read_feature_matrix(std::istream& in);

/// Per-column z-score transform. Constant columns are centered only.
class Standardizer {
public:
    Standardizer() = default;
    static Standardizer fit(const Eigen::MatrixXd& x);

    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd inverse(const Eigen::MatrixXd& z) const;

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::VectorXd& scale() const { return scale_; }
    static Standardizer from(Eigen::VectorXd mean, Eigen::VectorXd scale);

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd scale_;
};

}  // namespace malscope
