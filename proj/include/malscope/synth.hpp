#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malscope/txio.hpp"

namespace malscope {

inline constexpr const char* kArchetypeVersion = "archetypes/1";

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Rates and amounts of the behavioral archetypes: benign_regular,
/// phishing_like, hack_like and gambling_like, plus the background pool of
/// interconnected accounts that regular users trade with.
struct ArchetypeLibrary {
    std::string version;
    std::uint64_t start_time = 0;
    double horizon_days = 0.0;
    std::uint64_t epoch_seconds = 3600;
    std::map<std::string, Range> pool;  // counts use the integer range
    std::map<std::string, std::map<std::string, Range>> archetypes;

    /// The bundled archetypes/1 document.
    static ArchetypeLibrary builtin();
    static ArchetypeLibrary from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    const std::map<std::string, Range>& params(const std::string& archetype) const;
};

struct PlanEntry {
    std::string activity;
    std::string archetype;
    std::size_t count = 0;
    Klass klass = Klass::Malicious;
    Source source = Source::Da;
    std::map<std::string, Range> overrides;  // replaces archetype parameters for this entry
};

/// Accounts to generate. JSON form: {"entries": [{"activity", "archetype",
/// "count", optional "klass", optional "source", optional "params"}]}; klass
/// defaults to benign for benign_regular and malicious otherwise. "params"
/// overrides individual archetype ranges for that entry.
struct SynthPlan {
    std::vector<PlanEntry> entries;

    static SynthPlan from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    std::size_t total() const;
};

struct SynthLedger {
    Ledger ledger;  // carries the labels of every planned account
    std::map<std::string, std::string> archetype_of;
};

/// Deterministic in (plan, library, seed). Snapshot time is one day after
/// the last transaction.
SynthLedger generate_ledger(const SynthPlan& plan, const ArchetypeLibrary& lib, std::uint64_t seed);
SynthLedger generate_ledger(const SynthPlan& plan, std::uint64_t seed);

}  // namespace malscope
