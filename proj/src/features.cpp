#include "malscope/features.hpp"

#include <algorithm>
#include <cmath>

#include "malscope/error.hpp"

namespace malscope {

namespace {

using S = SeriesSource;

constexpr std::array<CatalogEntry, kFeatureCount> kCatalog{{
    {"indegreeTimeInv", "degree_time_inverse(direction=in)", S::None},
    {"outdegreeTimeInv", "degree_time_inverse(direction=out)", S::None},
    {"degreeTimeInv", "degree_time_inverse(direction=inout)", S::None},
    {"numberOfburstTemporalInOut", "burst_count", S::InterEventTime},
    {"longestBurstTemporalInOut", "burst_longest_run", S::InterEventTime},
    {"numberOfburstTemporalIn", "burst_count", S::InInterEventTime},
    {"longestBurstTemporalIn", "burst_longest_run", S::InInterEventTime},
    {"numberOfburstTemporalOut", "burst_count", S::OutInterEventTime},
    {"longestBurstTemporalOut", "burst_longest_run", S::OutInterEventTime},
    {"numberOfburstDegreeInOut", "burst_count", S::Degree},
    {"longestBurstDegreeInOutAtTime", "burst_longest_run", S::Degree},
    {"numberOfburstDegreeIn", "burst_count", S::Indegree},
    {"longestBurstDegreeInAtTime", "burst_longest_run", S::Indegree},
    {"numberOfburstDegreeOut", "burst_count", S::Outdegree},
    {"longestBurstDegreeOutAtTime", "burst_longest_run", S::Outdegree},
    {"zeroTransactions", "zero_value_count", S::None},
    {"totalBal", "net_balance", S::None},
    {"transactedFirst", "seconds_since_first", S::None},
    {"transactedLast", "seconds_since_last", S::None},
    {"activeDuration", "active_seconds", S::None},
    {"averagePerInBal", "mean_receipt", S::None},
    {"uniqueIn", "distinct_senders", S::None},
    {"lastActiveSince", "seconds_since_last_send", S::None},
    {"indegree__index_mass_quantile__q_0.1", "index_mass_quantile(q=0.1)", S::Indegree},
    {"indegree__energy_ratio_by_chunks__num_segments_10__-segment_focus_0",
     "energy_ratio_by_chunks(num_segments=10,segment_focus=0)", S::Indegree},
    {"indegree__linear_trend__attr_\"pvalue\"", "linear_trend(attr=pvalue)", S::Indegree},
    {"ittime__quantile__q_0.7", "quantile(q=0.7)", S::InterEventTime},
    {"ittime__fft_coefficient__coeff_0__attr_\"real\"", "fft_coefficient(coeff=0,attr=real)", S::InterEventTime},
    {"ittime__median", "median", S::InterEventTime},
    {"outdegree__energy_ratio_by_chunks__num_segments_10-__segment_focus_0",
     "energy_ratio_by_chunks(num_segments=10,segment_focus=0)", S::Outdegree},
    {"outdegree__enegy_ratio_by_chunks__-num_segments_10__segment_focus_1",
     "energy_ratio_by_chunks(num_segments=10,segment_focus=1)", S::Outdegree},
    {"outdegree__fft_coefficient__coeff_0__attr_\"real\"", "fft_coefficient(coeff=0,attr=real)", S::Outdegree},
    {"gasPrice__quantile__q_0.2", "quantile(q=0.2)", S::GasPrice},
    {"gasPrice__quantile__q_0.1", "quantile(q=0.1)", S::GasPrice},
    {"gasPrice__cwt_coefficients__widths_(2, 5, 10, 20)__coeff_0__w_20", "cwt_coefficients(coeff=0,w=20)",
     S::GasPrice},
    {"attractiveness__median", "median", S::Attractiveness},
    {"attractiveness__quantile__q_0_0.4", "quantile(q=0.4)", S::Attractiveness},
    {"attractiveness__mean", "mean", S::Attractiveness},
    {"balanceOut__quantile__q_0.1", "quantile(q=0.1)", S::BalanceOut},
    {"balanceOut__quantile__q_0.3", "quantile(q=0.3)", S::BalanceOut},
    {"balanceOut__cwt_coefficients__widths_(2, 5, 10, 20)__coeff_0__w_2", "cwt_coefficients(coeff=0,w=2)",
     S::BalanceOut},
    {"balanceIn__quantile__q_0.4", "quantile(q=0.4)", S::BalanceIn},
    {"balanceIn-__cwt_coefficients__widths_(2, 5, 10,20)__coeff_0__w_20", "cwt_coefficients(coeff=0,w=20)",
     S::BalanceIn},
    {"balanceIn__quantile__q_0.3", "quantile(q=0.3)", S::BalanceIn},
    {"maxInPayment__quantile__q_0.3", "quantile(q=0.3)", S::MaxInPayment},
    {"maxInPayment__quantile__q_0.2", "quantile(q=0.2)", S::MaxInPayment},
    {"maxInPayment__cwt_coefficients__widths_(2, 5, 10, 20)__coeff_0__w_5", "cwt_coefficients(coeff=0,w=5)",
     S::MaxInPayment},
    {"maxOutPayment__quantile__q_0.6", "quantile(q=0.6)", S::MaxOutPayment},
    {"maxOutPayment__quantile__q_0.1", "quantile(q=0.1)", S::MaxOutPayment},
    {"maxOutPayment__cwt_coefficients__widths_(2, 5, 10, 20)__coeff_0__w_2", "cwt_coefficients(coeff=0,w=2)",
     S::MaxOutPayment},
    {"clusteringCoeff", "clustering_coefficient", S::None},
    {"burstCount_gasPrice", "burst_count", S::GasPrice},
    {"burstCount_balanceIn", "burst_count", S::BalanceIn},
    {"burstCount_balanceOut", "burst_count", S::BalanceOut},
    {"burstInstance_indegree", "burst_first_instance", S::Indegree},
    {"burstInstance_outdegree", "burst_first_instance", S::Outdegree},
    {"burstInstance_maxInPayment", "burst_first_instance", S::MaxInPayment},
    {"burstInstance_maxOutPayment", "burst_first_instance", S::MaxOutPayment},
    {"burstInstance_gasPrice", "burst_first_instance", S::GasPrice},
}};

std::vector<double> degree_series(const AccountProfile& p) {
    std::vector<double> d(p.indegree.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = p.indegree[i] + p.outdegree[i];
    return d;
}

}  // namespace

const std::array<CatalogEntry, kFeatureCount>& feature_catalog() { return kCatalog; }

std::vector<std::string> feature_names() {
    std::vector<std::string> names;
    names.reserve(kFeatureCount);
    for (const auto& e : kCatalog) names.emplace_back(e.name);
    return names;
}

std::size_t feature_index(std::string_view name) {
    for (std::size_t i = 0; i < kCatalog.size(); ++i)
        if (kCatalog[i].name == name) return i;
    throw config_error("unknown feature '" + std::string(name) + "'");
}

std::span<const double> select_series(const AccountProfile& p, SeriesSource source) {
    switch (source) {
        case S::Indegree: return p.indegree;
        case S::Outdegree: return p.outdegree;
        case S::InterEventTime: return p.inter_event_times;
        case S::InInterEventTime: return p.in_inter_event_times;
        case S::OutInterEventTime: return p.out_inter_event_times;
        case S::GasPrice: return p.gas_price_sequence;
        case S::Attractiveness: return p.attractiveness;
        case S::BalanceIn: return p.balance_in;
        case S::BalanceOut: return p.balance_out;
        case S::MaxInPayment: return p.max_in_payment;
        case S::MaxOutPayment: return p.max_out_payment;
        case S::Degree:
        case S::None: break;
    }
    throw std::logic_error("series source has no stored sequence");
}

NeighborIndex::NeighborIndex(const Ledger& ledger, bool include_failed) {
    for (const auto& tx : ledger.transactions()) {
        if (tx.is_error && !include_failed) continue;
        adj_.try_emplace(tx.from);
        if (tx.to) add_edge(tx.from, *tx.to);
    }
}

void NeighborIndex::add_edge(const std::string& a, const std::string& b) {
    auto& na = adj_[a];
    auto& nb = adj_[b];
    if (a == b) return;
    na.insert(b);
    nb.insert(a);
}

bool NeighborIndex::contains(std::string_view address) const { return adj_.contains(std::string(address)); }

const std::unordered_set<std::string>& NeighborIndex::neighbors(std::string_view address) const {
    auto it = adj_.find(std::string(address));
    if (it == adj_.end()) throw data_error("address " + std::string(address) + " is not in the transaction graph");
    return it->second;
}

double clustering_coefficient(const NeighborIndex& graph, std::string_view address) {
    const auto& nbrs = graph.neighbors(address);
    const std::size_t k = nbrs.size();
    if (k < 2) return 0.0;
    std::size_t links = 0;
    for (const auto& u : nbrs)
        for (const auto& v : graph.neighbors(u))
            if (u < v && nbrs.contains(v)) ++links;
    return 2.0 * static_cast<double>(links) / (static_cast<double>(k) * static_cast<double>(k - 1));
}

DegreeTimeInverse degree_time_inverse(const AccountProfile& profile) {
    const double span = static_cast<double>(std::max<std::uint64_t>(profile.active_epochs(), 1));
    const double in = static_cast<double>(profile.in_txs.size());
    const double out = static_cast<double>(profile.out_txs.size());
    return {in / span, out / span, (in + out) / span};
}

FeatureVector extract_features(const AccountProfile& profile, const NeighborIndex& graph, const EpochConfig& cfg,
                               std::uint64_t snapshot_time) {
    if (profile.transaction_count == 0) throw data_error("no activity for account " + profile.address);
    if (snapshot_time < profile.last_timestamp) throw data_error("snapshot time precedes account activity");

    const auto degree = degree_series(profile);
    auto series_of = [&](SeriesSource s) -> std::span<const double> {
        return s == S::Degree ? std::span<const double>(degree) : select_series(profile, s);
    };
    auto bursts = [&](SeriesSource s) -> std::optional<BurstReport> {
        auto seq = series_of(s);
        if (seq.empty()) return std::nullopt;
        return detect_bursts(seq, ThresholdMode::Sigma, cfg.burst_sigma);
    };

    // Scalar account statistics.
    const auto dti = degree_time_inverse(profile);
    double received = 0.0, sent = 0.0;
    for (const auto& tx : profile.in_txs) received += to_ether(tx.value);
    for (const auto& tx : profile.out_txs) sent += to_ether(tx.value);

    std::size_t zero_value = 0;
    std::unordered_set<std::string> counted, senders;
    for (const auto* side : {&profile.in_txs, &profile.out_txs})
        for (const auto& tx : *side)
            if (counted.insert(tx.hash).second && tx.value == 0) ++zero_value;
    for (const auto& tx : profile.in_txs) senders.insert(tx.from);

    const std::uint64_t last_send = profile.out_txs.empty() ? profile.last_timestamp
                                                            : profile.out_txs.back().timestamp;

    FeatureVector fv;
    fv.address = profile.address;
    fv.values.reserve(kFeatureCount);
    for (const auto& entry : kCatalog) {
        const std::string_view id = entry.formula_id;
        double v = 0.0;
        if (id == "burst_count") {
            auto r = bursts(entry.source);
            v = r ? static_cast<double>(r->count) : 0.0;
        } else if (id == "burst_longest_run") {
            auto r = bursts(entry.source);
            v = r ? static_cast<double>(r->longest_run) : 0.0;
        } else if (id == "burst_first_instance") {
            auto r = bursts(entry.source);
            v = (r && r->first_instance) ? static_cast<double>(*r->first_instance) : 0.0;
        } else if (id == "degree_time_inverse(direction=in)") {
            v = dti.in;
        } else if (id == "degree_time_inverse(direction=out)") {
            v = dti.out;
        } else if (id == "degree_time_inverse(direction=inout)") {
            v = dti.total;
        } else if (id == "zero_value_count") {
            v = static_cast<double>(zero_value);
        } else if (id == "net_balance") {
            v = received - sent;
        } else if (id == "seconds_since_first") {
            v = static_cast<double>(snapshot_time - profile.first_timestamp);
        } else if (id == "seconds_since_last") {
            v = static_cast<double>(snapshot_time - profile.last_timestamp);
        } else if (id == "active_seconds") {
            v = static_cast<double>(profile.last_timestamp - profile.first_timestamp);
        } else if (id == "mean_receipt") {
            v = profile.in_txs.empty() ? 0.0 : received / static_cast<double>(profile.in_txs.size());
        } else if (id == "distinct_senders") {
            v = static_cast<double>(senders.size());
        } else if (id == "seconds_since_last_send") {
            v = static_cast<double>(snapshot_time - last_send);
        } else if (id == "clustering_coefficient") {
            v = graph.contains(profile.address) ? clustering_coefficient(graph, profile.address) : 0.0;
        } else {
            v = ts::ts_feature(id, series_of(entry.source)).value;
        }
        fv.values.push_back(v);
    }
    if (fv.values.size() != kFeatureCount) throw std::logic_error("feature vector length mismatch");
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        if (!std::isfinite(fv.values[i]))
            throw Error(ErrorKind::Numeric, "non-finite feature " + std::string(kCatalog[i].name) + " for " +
                                                profile.address);
    return fv;
}

FeatureBatch extract_all(const Ledger& ledger, const EpochConfig& cfg) {
    cfg.validate();
    AccountIndex index(ledger, cfg.include_failed);
    NeighborIndex graph(ledger, cfg.include_failed);
    FeatureBatch batch;
    for (const auto& [address, label] : ledger.labels()) {
        if (index.positions(address).empty()) {
            batch.skipped.push_back(address);
            continue;
        }
        auto profile = build_profile(ledger, index, address, cfg);
        batch.vectors.push_back(extract_features(profile, graph, cfg, ledger.snapshot_time()));
    }
    return batch;
}

}  // namespace malscope
