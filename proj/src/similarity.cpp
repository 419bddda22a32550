#include "malscope/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "malscope/error.hpp"
#include "malscope/rng.hpp"

namespace malscope {

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw data_error("cosine of vectors with different lengths");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw data_error("undefined similarity: zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return cosine(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                  std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

namespace {

Eigen::MatrixXd normalized_rows(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double n = x.row(i).norm();
        if (n == 0.0) throw data_error("undefined similarity: zero vector at row " + std::to_string(i));
        out.row(i) /= n;
    }
    return out;
}

}  // namespace

SimilarityMatrix similarity_matrix(std::vector<std::string> addresses, const Eigen::MatrixXd& x) {
    if (addresses.size() != static_cast<std::size_t>(x.rows())) throw data_error("address/row count mismatch");
    Eigen::MatrixXd u = normalized_rows(x);
    SimilarityMatrix m;
    m.addresses = std::move(addresses);
    m.values = u * u.transpose();
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        m.values(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < m.values.cols(); ++j) {
            double v = std::clamp(m.values(i, j), -1.0, 1.0);
            m.values(i, j) = v;
            m.values(j, i) = v;
        }
    }
    return m;
}

double fraction_non_negative(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() == 0 || b.rows() == 0) throw data_error("similarity fraction over an empty set");
    Eigen::MatrixXd s = normalized_rows(a) * normalized_rows(b).transpose();
    return static_cast<double>((s.array() >= 0.0).count()) / static_cast<double>(s.size());
}

ActivitySimilarity pairwise_activity_similarity(const LabeledDataset& data, const SimilarityOptions& opts) {
    if (data.empty()) throw data_error("similarity analysis on an empty dataset");
    Eigen::MatrixXd x = data.matrix();
    if (opts.standardize) x = Standardizer::fit(x).transform(x);

    std::map<std::string, std::vector<Eigen::Index>> groups;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.rows()[i].klass == Klass::Malicious)
            groups[data.rows()[i].activity].push_back(static_cast<Eigen::Index>(i));

    ActivitySimilarity out;
    for (const auto& [name, idx] : groups) {
        if (idx.empty()) out.excluded.push_back(name);
        else out.activities.push_back(name);
    }
    const auto n = static_cast<Eigen::Index>(out.activities.size());
    out.p_geq0 = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    out.pair_counts = Eigen::MatrixXd::Zero(n, n);

    std::vector<Eigen::MatrixXd> unit(static_cast<std::size_t>(n));
    for (Eigen::Index a = 0; a < n; ++a) {
        const auto& idx = groups[out.activities[static_cast<std::size_t>(a)]];
        Eigen::MatrixXd rows(static_cast<Eigen::Index>(idx.size()), x.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) rows.row(static_cast<Eigen::Index>(r)) = x.row(idx[r]);
        unit[static_cast<std::size_t>(a)] = normalized_rows(rows);
    }
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            Eigen::MatrixXd s = unit[static_cast<std::size_t>(a)] * unit[static_cast<std::size_t>(b)].transpose();
            double pairs = 0.0, hits = 0.0;
            if (a == b) {
                for (Eigen::Index i = 0; i < s.rows(); ++i)
                    for (Eigen::Index j = i + 1; j < s.cols(); ++j) {
                        pairs += 1.0;
                        if (s(i, j) >= 0.0) hits += 1.0;
                    }
            } else {
                pairs = static_cast<double>(s.size());
                hits = static_cast<double>((s.array() >= 0.0).count());
            }
            out.pair_counts(a, b) = out.pair_counts(b, a) = pairs;
            if (pairs > 0) out.p_geq0(a, b) = out.p_geq0(b, a) = hits / pairs;
        }
    }
    return out;
}

namespace {

struct Run {
    std::vector<std::size_t> labels;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
    std::vector<double> history;
    bool converged = false;
};

Eigen::MatrixXd plus_plus_init(const Eigen::MatrixXd& x, std::size_t k, Rng& rng) {
    const auto n = static_cast<std::size_t>(x.rows());
    Eigen::MatrixXd c(static_cast<Eigen::Index>(k), x.cols());
    c.row(0) = x.row(static_cast<Eigen::Index>(rng.index(n)));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t m = 1; m < k; ++m) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (x.row(static_cast<Eigen::Index>(i)) - c.row(static_cast<Eigen::Index>(m - 1))).squaredNorm());
            total += d2[i];
        }
        std::size_t pick = n - 1;
        if (total <= 0.0) {
            pick = rng.index(n);
        } else {
            double r = rng.uniform() * total, acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (d2[i] > 0.0 && acc > r) {
                    pick = i;
                    break;
                }
            }
            while (d2[pick] <= 0.0 && pick > 0) --pick;
        }
        c.row(static_cast<Eigen::Index>(m)) = x.row(static_cast<Eigen::Index>(pick));
    }
    return c;
}

std::size_t nearest(const Eigen::MatrixXd& c, const Eigen::RowVectorXd& p, double* dist = nullptr) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < c.rows(); ++j) {
        double d = (c.row(j) - p).squaredNorm();
        if (d < bd) {
            bd = d;
            best = static_cast<std::size_t>(j);
        }
    }
    if (dist) *dist = bd;
    return best;
}

double inertia_of(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c, const std::vector<std::size_t>& labels) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        s += (x.row(i) - c.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]))).squaredNorm();
    return s;
}

void update_centroids(const Eigen::MatrixXd& x, std::vector<std::size_t>& labels, Eigen::MatrixXd& c) {
    const auto k = static_cast<std::size_t>(c.rows());
    for (;;) {
        std::vector<std::size_t> counts(k, 0);
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(c.rows(), c.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            auto l = labels[static_cast<std::size_t>(i)];
            sums.row(static_cast<Eigen::Index>(l)) += x.row(i);
            ++counts[l];
        }
        auto empty = std::find(counts.begin(), counts.end(), 0);
        if (empty == counts.end()) {
            for (std::size_t j = 0; j < k; ++j)
                c.row(static_cast<Eigen::Index>(j)) = sums.row(static_cast<Eigen::Index>(j)) / static_cast<double>(counts[j]);
            return;
        }
        // Empty cluster: take the farthest point of the highest-inertia cluster.
        for (std::size_t j = 0; j < k; ++j)
            if (counts[j]) c.row(static_cast<Eigen::Index>(j)) = sums.row(static_cast<Eigen::Index>(j)) / static_cast<double>(counts[j]);
        std::vector<double> sse(k, 0.0);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            auto l = labels[static_cast<std::size_t>(i)];
            sse[l] += (x.row(i) - c.row(static_cast<Eigen::Index>(l))).squaredNorm();
        }
        std::size_t worst = static_cast<std::size_t>(std::max_element(sse.begin(), sse.end()) - sse.begin());
        if (counts[worst] < 2) throw data_error("k-means: cannot repair empty cluster (too few distinct points)");
        Eigen::Index far = -1;
        double fd = -1.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (labels[static_cast<std::size_t>(i)] != worst) continue;
            double d = (x.row(i) - c.row(static_cast<Eigen::Index>(worst))).squaredNorm();
            if (d > fd) {
                fd = d;
                far = i;
            }
        }
        labels[static_cast<std::size_t>(far)] = static_cast<std::size_t>(empty - counts.begin());
    }
}

Run lloyd(const Eigen::MatrixXd& x, std::size_t k, int max_iter, Rng& rng) {
    Run run;
    run.centroids = plus_plus_init(x, k, rng);
    const auto n = static_cast<std::size_t>(x.rows());
    run.labels.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) run.labels[i] = nearest(run.centroids, x.row(static_cast<Eigen::Index>(i)));
    for (int it = 0; it < max_iter; ++it) {
        update_centroids(x, run.labels, run.centroids);
        run.history.push_back(inertia_of(x, run.centroids, run.labels));
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            auto row = x.row(static_cast<Eigen::Index>(i));
            double cur = (row - run.centroids.row(static_cast<Eigen::Index>(run.labels[i]))).squaredNorm();
            double d;
            std::size_t l = nearest(run.centroids, row, &d);
            if (l != run.labels[i] && d < cur) {
                run.labels[i] = l;
                changed = true;
            }
        }
        if (!changed) {
            run.converged = true;
            break;
        }
    }
    run.inertia = inertia_of(x, run.centroids, run.labels);
    return run;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& x, const KMeansOptions& opts) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (opts.k == 0) throw config_error("k must be positive");
    if (n < opts.k) throw data_error("k-means needs at least k points (n=" + std::to_string(n) + ", k=" +
                                     std::to_string(opts.k) + ")");
    if (opts.restarts < 1 || opts.max_iter < 1) throw config_error("restarts and max_iter must be positive");

    KMeansResult best;
    bool have = false;
    for (int r = 0; r < opts.restarts; ++r) {
        Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
        Run run = lloyd(x, opts.k, opts.max_iter, rng);
        if (!have || run.inertia < best.inertia) {
            best.k = opts.k;
            best.labels = std::move(run.labels);
            best.centroids = std::move(run.centroids);
            best.inertia = run.inertia;
            best.inertia_history = std::move(run.history);
            best.best_restart = static_cast<std::size_t>(r);
            best.converged = run.converged;
            have = true;
        }
    }
    return best;
}

Contingency contingency_table(const LabeledDataset& data, const std::vector<std::size_t>& labels, std::size_t k) {
    if (labels.size() != data.size()) throw data_error("label count does not match dataset size");
    Contingency t;
    t.activities = data.activities();
    bool has_benign = data.count(Klass::Benign) > 0;
    if (has_benign) t.activities.emplace_back(kBenignActivity);

    std::vector<std::size_t> malicious(k, 0);
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (data.rows()[i].klass == Klass::Malicious) ++malicious.at(labels[i]);
    t.cluster_order.resize(k);
    std::iota(t.cluster_order.begin(), t.cluster_order.end(), std::size_t{0});
    std::stable_sort(t.cluster_order.begin(), t.cluster_order.end(),
                     [&](std::size_t a, std::size_t b) { return malicious[a] > malicious[b]; });
    std::vector<std::size_t> rank(k);
    for (std::size_t r = 0; r < k; ++r) rank[t.cluster_order[r]] = r;

    std::map<std::string, Eigen::Index> row_of;
    for (std::size_t a = 0; a < t.activities.size(); ++a) row_of[t.activities[a]] = static_cast<Eigen::Index>(a);
    t.counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(t.activities.size()), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& row = data.rows()[i];
        const std::string& key = row.klass == Klass::Malicious ? row.activity : std::string(kBenignActivity);
        t.counts(row_of.at(key), static_cast<Eigen::Index>(rank[labels[i]])) += 1;
    }
    return t;
}

ClusterAssignment cluster_accounts(const LabeledDataset& data, std::optional<std::size_t> k, std::uint64_t seed,
                                   const SimilarityOptions& opts, int max_iter, int restarts) {
    ClusterAssignment out;
    out.k = k.value_or(data.activities().size() + 1);
    Eigen::MatrixXd x = data.matrix();
    if (opts.standardize) x = Standardizer::fit(x).transform(x);
    auto res = kmeans(x, {out.k, seed, max_iter, restarts});
    for (const auto& r : data.rows()) out.addresses.push_back(r.address);
    out.labels = res.labels;
    out.centroids = res.centroids;
    out.inertia = res.inertia;
    out.contingency = contingency_table(data, res.labels, out.k);
    return out;
}

}  // namespace malscope
