#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "malscope/series.hpp"
#include "malscope/ts_features.hpp"

namespace malscope {

inline constexpr std::size_t kFeatureCount = 59;
inline constexpr std::string_view kCatalogVersion = "account-features/1";

/// Which per-account sequence a catalog entry is computed from.
enum class SeriesSource {
    None,  // scalar account statistic
    Indegree,
    Outdegree,
    Degree,
    InterEventTime,
    InInterEventTime,
    OutInterEventTime,
    GasPrice,
    Attractiveness,
    BalanceIn,
    BalanceOut,
    MaxInPayment,
    MaxOutPayment,
};

struct CatalogEntry {
    std::string_view name;        // column name as published with the feature set
    std::string_view formula_id;  // what is computed
    SeriesSource source;
};

/// The 59 features in column order. The published list repeats
/// `burstInstance_outdegree`; it appears here once.
const std::array<CatalogEntry, kFeatureCount>& feature_catalog();
std::vector<std::string> feature_names();
/// Column position of a name; throws for unknown names.
std::size_t feature_index(std::string_view name);

std::span<const double> select_series(const AccountProfile& profile, SeriesSource source);

struct FeatureVector {
    std::string address;
    std::vector<double> values;  // kFeatureCount entries, catalog order
    std::string catalog_version{kCatalogVersion};

    double at(std::string_view name) const { return values.at(feature_index(name)); }
};

/// Undirected counterpart graph: an edge joins two distinct addresses that
/// exchanged at least one transaction.
class NeighborIndex {
public:
    NeighborIndex() = default;
    NeighborIndex(const Ledger& ledger, bool include_failed);

    void add_edge(const std::string& a, const std::string& b);
    bool contains(std::string_view address) const;
    const std::unordered_set<std::string>& neighbors(std::string_view address) const;

private:
    std::unordered_map<std::string, std::unordered_set<std::string>> adj_;
};

/// Local (Watts-Strogatz) clustering coefficient; 0 below degree 2.
/// Throws for an address absent from the graph.
double clustering_coefficient(const NeighborIndex& graph, std::string_view address);

struct DegreeTimeInverse {
    double in = 0.0;
    double out = 0.0;
    double total = 0.0;
};

/// Degree divided by the active span in epochs (clamped to at least 1).
DegreeTimeInverse degree_time_inverse(const AccountProfile& profile);

FeatureVector extract_features(const AccountProfile& profile, const NeighborIndex& graph,
                               const EpochConfig& cfg, std::uint64_t snapshot_time);

/// Feature vectors for every labeled account with activity. Labeled
/// addresses without any transaction are reported in `skipped`.
struct FeatureBatch {
    std::vector<FeatureVector> vectors;
    std::vector<std::string> skipped;
};
FeatureBatch extract_all(const Ledger& ledger, const EpochConfig& cfg);

}  // namespace malscope
