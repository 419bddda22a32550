#include "malscope/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "malscope/error.hpp"

namespace malscope {

double DecisionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& n = nodes_[static_cast<std::size_t>(i)];
        i = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].value;
}

int DecisionTree::depth() const {
    std::vector<int> d(nodes_.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        best = std::max(best, d[i]);
        if (nodes_[i].feature >= 0) {
            d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
        }
    }
    return best;
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

nlohmann::json DecisionTree::to_json() const {
    nlohmann::json f = nlohmann::json::array(), t = nlohmann::json::array(), l = nlohmann::json::array(),
                   r = nlohmann::json::array(), v = nlohmann::json::array();
    for (const auto& n : nodes_) {
        f.push_back(n.feature);
        t.push_back(n.threshold);
        l.push_back(n.left);
        r.push_back(n.right);
        v.push_back(n.value);
    }
    return {{"feature", f}, {"threshold", t}, {"left", l}, {"right", r}, {"value", v}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
    auto f = j.at("feature").get<std::vector<int>>();
    auto t = j.at("threshold").get<std::vector<double>>();
    auto l = j.at("left").get<std::vector<int>>();
    auto r = j.at("right").get<std::vector<int>>();
    auto v = j.at("value").get<std::vector<double>>();
    if (f.empty() || t.size() != f.size() || l.size() != f.size() || r.size() != f.size() || v.size() != f.size())
        throw data_error("malformed tree payload");
    std::vector<TreeNode> nodes(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        nodes[i].feature = f[i];
        nodes[i].threshold = t[i];
        nodes[i].left = l[i];
        nodes[i].right = r[i];
        nodes[i].value = v[i];
        if (f[i] >= 0 && (l[i] <= static_cast<int>(i) || r[i] <= static_cast<int>(i) ||
                          static_cast<std::size_t>(std::max(l[i], r[i])) >= f.size()))
            throw data_error("malformed tree payload: bad child index");
    }
    return DecisionTree(std::move(nodes));
}

namespace {

/// Weighted sufficient statistics of a set of samples.
struct Stats {
    double w = 0.0, wy = 0.0, wyy = 0.0;
    std::size_t n = 0;

    void add(double weight, double y) {
        w += weight;
        wy += weight * y;
        wyy += weight * y * y;
        ++n;
    }
    Stats minus(const Stats& o) const { return {w - o.w, wy - o.wy, wyy - o.wyy, n - o.n}; }
};

double impurity(const Stats& s, Criterion c) {
    if (s.w <= 0.0) return 0.0;
    const double mean = s.wy / s.w;
    switch (c) {
        case Criterion::Entropy: {
            double p = std::clamp(mean, 0.0, 1.0);
            double h = 0.0;
            if (p > 0.0) h -= p * std::log2(p);
            if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
            return h;
        }
        case Criterion::Gini: {
            double p = std::clamp(mean, 0.0, 1.0);
            return 2.0 * p * (1.0 - p);
        }
        case Criterion::SquaredError: return std::max(0.0, s.wyy / s.w - mean * mean);
    }
    return 0.0;
}

/// Weighted impurity decrease of a split.
double gain(const Stats& parent, const Stats& left, const Stats& right, Criterion c) {
    return parent.w * impurity(parent, c) - left.w * impurity(left, c) - right.w * impurity(right, c);
}

struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = -std::numeric_limits<double>::infinity();
};

bool better(double g, const Candidate& best) {
    return best.feature < 0 || g > best.gain + 1e-12 * std::max(1.0, std::abs(best.gain));
}

class Grower {
public:
    Grower(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const double> w, const GrowOptions& o,
           Rng& rng)
        : x_(x), y_(y), w_(w), o_(o), rng_(rng) {
        d_ = static_cast<std::size_t>(x.cols());
        k_ = (o.max_features == 0 || o.max_features > d_) ? d_ : o.max_features;
    }

    std::vector<TreeNode> run(std::vector<std::size_t> rows) {
        build(rows, 0);
        return std::move(nodes_);
    }

private:
    int build(std::vector<std::size_t>& rows, int depth) {
        Stats s;
        for (auto r : rows) s.add(w_[r], y_[r]);
        const int id = static_cast<int>(nodes_.size());
        TreeNode node;
        node.value = s.w > 0.0 ? s.wy / s.w : 0.0;
        node.weight = s.w;
        node.samples = rows.size();
        nodes_.push_back(node);

        const bool pure = impurity(s, o_.criterion) <= 1e-14;
        if (pure || rows.size() < o_.min_samples_split || rows.size() < 2 * o_.min_samples_leaf ||
            (o_.max_depth >= 0 && depth >= o_.max_depth))
            return id;

        Candidate best = find_split(rows, s);
        if (best.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (auto r : rows) (x_(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        nodes_[static_cast<std::size_t>(id)].feature = best.feature;
        nodes_[static_cast<std::size_t>(id)].threshold = best.threshold;
        int l = build(left, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = l;
        int r = build(right, depth + 1);
        nodes_[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    Candidate find_split(const std::vector<std::size_t>& rows, const Stats& parent) {
        std::vector<std::size_t> order(d_);
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (k_ < d_) {
            for (std::size_t i = 0; i < d_; ++i) std::swap(order[i], order[i + rng_.index(d_ - i)]);
        }
        Candidate best;
        std::size_t examined = 0;
        std::size_t pos = 0;
        // Examine k features; keep drawing while none of them admits a split.
        while (pos < d_ && (examined < k_ || best.feature < 0)) {
            std::size_t batch_end = std::min(d_, pos + (examined < k_ ? k_ - examined : 1));
            std::vector<std::size_t> feats(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                           order.begin() + static_cast<std::ptrdiff_t>(batch_end));
            std::sort(feats.begin(), feats.end());
            for (auto f : feats) {
                if (o_.search == ThresholdSearch::Best) best_on_feature(rows, parent, f, best);
                else random_on_feature(rows, parent, f, best);
            }
            examined += feats.size();
            pos = batch_end;
        }
        return best;
    }

    void consider(const Stats& parent, const Stats& left, std::size_t f, double threshold, Candidate& best) {
        Stats right = parent.minus(left);
        if (left.n < o_.min_samples_leaf || right.n < o_.min_samples_leaf) return;
        double g = gain(parent, left, right, o_.criterion);
        if (better(g, best)) {
            best.feature = static_cast<int>(f);
            best.threshold = threshold;
            best.gain = g;
        }
    }

    void best_on_feature(const std::vector<std::size_t>& rows, const Stats& parent, std::size_t f,
                         Candidate& best) {
        const auto col = static_cast<Eigen::Index>(f);
        std::vector<std::size_t> sorted = rows;
        std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
            return x_(static_cast<Eigen::Index>(a), col) < x_(static_cast<Eigen::Index>(b), col);
        });
        Stats left;
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            left.add(w_[sorted[i]], y_[sorted[i]]);
            const double a = x_(static_cast<Eigen::Index>(sorted[i]), col);
            const double b = x_(static_cast<Eigen::Index>(sorted[i + 1]), col);
            if (!(a < b)) continue;
            double t = a + (b - a) / 2.0;
            if (!(t < b)) t = a;
            consider(parent, left, f, t, best);
        }
    }

    void random_on_feature(const std::vector<std::size_t>& rows, const Stats& parent, std::size_t f,
                           Candidate& best) {
        const auto col = static_cast<Eigen::Index>(f);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (auto r : rows) {
            lo = std::min(lo, x_(static_cast<Eigen::Index>(r), col));
            hi = std::max(hi, x_(static_cast<Eigen::Index>(r), col));
        }
        if (!(lo < hi)) return;
        double t = rng_.uniform(lo, hi);
        if (t >= hi) t = lo;
        Stats left;
        for (auto r : rows)
            if (x_(static_cast<Eigen::Index>(r), col) <= t) left.add(w_[r], y_[r]);
        consider(parent, left, f, t, best);
    }

    const Eigen::MatrixXd& x_;
    std::span<const double> y_;
    std::span<const double> w_;
    const GrowOptions& o_;
    Rng& rng_;
    std::size_t d_ = 0, k_ = 0;
    std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree grow_tree(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const double> w,
                       const std::vector<std::size_t>& rows, const GrowOptions& opts, Rng& rng) {
    if (rows.empty()) throw data_error("cannot grow a tree on zero samples");
    if (y.size() != static_cast<std::size_t>(x.rows()) || w.size() != y.size())
        throw data_error("target/weight length does not match the sample matrix");
    if (opts.min_samples_leaf < 1 || opts.min_samples_split < 2)
        throw config_error("min_samples_leaf must be >= 1 and min_samples_split >= 2");
    Grower g(x, y, w, opts, rng);
    return DecisionTree(g.run(rows));
}

}  // namespace malscope
