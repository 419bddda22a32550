#include "malscope/dataset.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "malscope/csv.hpp"
#include "malscope/error.hpp"

namespace malscope {

LabeledDataset::LabeledDataset(std::vector<LabeledRow> rows) {
    rows_.reserve(rows.size());
    for (auto& r : rows) add(std::move(r));
}

void LabeledDataset::add(LabeledRow row) {
    if (rows_.empty()) {
        dim_ = row.values.size();
    } else if (row.values.size() != dim_) {
        throw data_error("row " + row.address + " has " + std::to_string(row.values.size()) +
                         " values, expected " + std::to_string(dim_));
    }
    if (!keys_.emplace(row.address, row.source).second)
        throw data_error("duplicate row for address " + row.address + " (source " +
                         std::string(to_string(row.source)) + ")");
    rows_.push_back(std::move(row));
}

std::size_t LabeledDataset::count(Klass k) const {
    return static_cast<std::size_t>(
        std::count_if(rows_.begin(), rows_.end(), [k](const LabeledRow& r) { return r.klass == k; }));
}

std::size_t LabeledDataset::count_activity(std::string_view activity) const {
    return static_cast<std::size_t>(std::count_if(
        rows_.begin(), rows_.end(), [activity](const LabeledRow& r) { return r.activity == activity; }));
}

std::vector<std::string> LabeledDataset::activities() const {
    std::set<std::string> acts;
    for (const auto& r : rows_)
        if (r.klass == Klass::Malicious) acts.insert(r.activity);
    return {acts.begin(), acts.end()};
}

std::set<std::string> LabeledDataset::addresses() const {
    std::set<std::string> out;
    for (const auto& r : rows_) out.insert(r.address);
    return out;
}

LabeledDataset LabeledDataset::filter(const std::function<bool(const LabeledRow&)>& keep) const {
    LabeledDataset out;
    for (const auto& r : rows_)
        if (keep(r)) out.add(r);
    out.dim_ = out.rows_.empty() ? dim_ : out.dim_;
    return out;
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
    LabeledDataset out;
    for (std::size_t i : indices) out.add(rows_.at(i));
    if (out.rows_.empty()) out.dim_ = dim_;
    return out;
}

LabeledDataset LabeledDataset::merged(const LabeledDataset& other) const {
    LabeledDataset out = *this;
    for (const auto& r : other.rows_) out.add(r);
    return out;
}

Eigen::MatrixXd LabeledDataset::matrix() const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < rows_.size(); ++i)
        for (std::size_t j = 0; j < dim_; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows_[i].values[j];
    return x;
}

Eigen::VectorXd LabeledDataset::targets() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows_.size()));
    for (std::size_t i = 0; i < rows_.size(); ++i)
        y(static_cast<Eigen::Index>(i)) = rows_[i].klass == Klass::Malicious ? 1.0 : 0.0;
    return y;
}

LabeledDataset make_dataset(const std::vector<FeatureVector>& vectors, const LabelMap& labels) {
    LabeledDataset data;
    for (const auto& fv : vectors) {
        auto it = labels.find(fv.address);
        if (it == labels.end()) continue;
        data.add({fv.address, fv.values, it->second.klass, it->second.activity, it->second.source});
    }
    return data;
}

void write_feature_matrix(std::ostream& out, const LabeledDataset& data) {
    write_feature_matrix(out, data, feature_names());
}

void write_feature_matrix(std::ostream& out, const LabeledDataset& data, const std::vector<std::string>& names) {
    if (!data.empty() && names.size() != data.dim())
        throw data_error("feature matrix has " + std::to_string(data.dim()) + " columns but " +
                         std::to_string(names.size()) + " names");
    std::vector<std::string> header{"address", "klass", "activity", "source"};
    header.insert(header.end(), names.begin(), names.end());
    out << csv::join(header) << '\n';
    for (const auto& r : data.rows()) {
        std::vector<std::string> f{r.address, std::string(to_string(r.klass)), r.activity,
                                   std::string(to_string(r.source))};
        for (double v : r.values) f.push_back(csv::format_double(v));
        out << csv::join(f) << '\n';
    }
}

LabeledDataset read_feature_matrix(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    LabeledDataset data;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        try {
            f = csv::split_line(line);
        } catch (const std::invalid_argument& e) {
            throw ParseError(lineno, "<record>", e.what());
        }
        if (width == 0) {
            if (f.size() < 5 || f[0] != "address" || f[1] != "klass" || f[2] != "activity" || f[3] != "source")
                throw ParseError(lineno, "<header>", "expected address,klass,activity,source,<features...>");
            width = f.size();
            continue;
        }
        if (f.size() != width)
            throw ParseError(lineno, "<record>", "expected " + std::to_string(width) + " fields, got " +
                                                     std::to_string(f.size()));
        LabeledRow row;
        row.address = f[0];
        try {
            row.klass = parse_klass(f[1]);
        } catch (const Error& e) {
            throw ParseError(lineno, "klass", e.what());
        }
        row.activity = f[2];
        try {
            row.source = parse_source(f[3]);
        } catch (const Error& e) {
            throw ParseError(lineno, "source", e.what());
        }
        for (std::size_t j = 4; j < f.size(); ++j) {
            try {
                double v = csv::parse_double(f[j]);
                if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
                row.values.push_back(v);
            } catch (const std::invalid_argument&) {
                throw ParseError(lineno, "column " + std::to_string(j + 1), "expected a finite number");
            }
        }
        data.add(std::move(row));
    }
    if (width == 0) throw ParseError(1, "<header>", "empty feature matrix");
    return data;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    const auto n = static_cast<double>(x.rows());
    if (x.rows() == 0) throw data_error("cannot standardize an empty matrix");
    s.mean_ = x.colwise().mean().transpose();
    s.scale_.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double var = (x.col(j).array() - s.mean_(j)).square().sum() / n;
        double sd = std::sqrt(var);
        s.scale_(j) = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Standardizer Standardizer::from(Eigen::VectorXd mean, Eigen::VectorXd scale) {
    if (mean.size() != scale.size()) throw data_error("standardizer mean/scale size mismatch");
    Standardizer s;
    s.mean_ = std::move(mean);
    s.scale_ = std::move(scale);
    return s;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean_.size()) throw data_error("standardizer dimension mismatch");
    return (x.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
}

Eigen::MatrixXd Standardizer::inverse(const Eigen::MatrixXd& z) const {
    if (z.cols() != mean_.size()) throw data_error("standardizer dimension mismatch");
    return (z.array().rowwise() * scale_.transpose().array()).rowwise() + mean_.transpose().array();
}

}  // namespace malscope
