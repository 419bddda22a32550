#include <doctest.h>

#include <sstream>

#include "malscope/error.hpp"
#include "malscope/features.hpp"
#include "malscope/synth.hpp"
#include "support.hpp"

using namespace malscope;

namespace {

SynthPlan plan_of(std::vector<std::tuple<std::string, std::string, std::size_t>> entries) {
    SynthPlan p;
    for (auto& [act, arch, n] : entries) {
        PlanEntry e;
        e.activity = act;
        e.archetype = arch;
        e.count = n;
        e.klass = arch == "benign_regular" ? Klass::Benign : Klass::Malicious;
        p.entries.push_back(e);
    }
    return p;
}

std::string bytes(const SynthLedger& s) {
    std::ostringstream out;
    write_transactions(out, s.ledger.transactions(), TxFormat::Jsonl);
    write_labels(out, s.ledger.labels());
    return out.str();
}

double mean_attractiveness(const SynthLedger& s, const std::string& archetype) {
    AccountIndex index(s.ledger, false);
    double total = 0;
    int n = 0;
    for (const auto& [addr, arch] : s.archetype_of) {
        if (arch != archetype) continue;
        auto p = build_profile(s.ledger, index, addr, {});
        double sum = 0;
        int active = 0;
        for (std::size_t e = 0; e < p.epoch_count(); ++e)
            if (p.indegree[e] > 0) sum += p.attractiveness[e], ++active;
        total += active ? sum / active : 0.0;
        ++n;
    }
    return total / n;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("planned counts") {
    auto s = generate_ledger(plan_of({{"benign", "benign_regular", 50}, {"Phishing", "phishing_like", 10}}), 1);
    CHECK(s.ledger.labels().size() == 60);
    std::size_t mal = 0;
    for (const auto& [a, l] : s.ledger.labels()) mal += l.klass == Klass::Malicious;
    CHECK(mal == 10);
    CHECK(s.ledger.snapshot_time() == s.ledger.transactions().back().timestamp + 86400);
}

TEST_CASE("same seed gives identical bytes") {
    auto plan = plan_of({{"benign", "benign_regular", 20}, {"Hack", "hack_like", 5}, {"Gambling", "gambling_like", 5}});
    CHECK(bytes(generate_ledger(plan, 3)) == bytes(generate_ledger(plan, 3)));
    CHECK(bytes(generate_ledger(plan, 3)) != bytes(generate_ledger(plan, 4)));
}

TEST_CASE("hack-like accounts burst on outgoing value") {
    auto s = generate_ledger(plan_of({{"benign", "benign_regular", 10}, {"Hack", "hack_like", 20}}), 5);
    AccountIndex index(s.ledger, false);
    for (const auto& [addr, arch] : s.archetype_of) {
        if (arch != "hack_like") continue;
        auto p = build_profile(s.ledger, index, addr, {});
        CHECK(detect_bursts(p.balance_out, ThresholdMode::Sigma, 2.0).count >= 1);
    }
}

TEST_CASE("phishing-like accounts see more new senders than regular users") {
    auto s = generate_ledger(plan_of({{"benign", "benign_regular", 40}, {"Phishing", "phishing_like", 20}}), 6);
    CHECK(mean_attractiveness(s, "phishing_like") > mean_attractiveness(s, "benign_regular") + 0.2);
}

TEST_CASE("every labeled account transacts and values are finite") {
    auto s = generate_ledger(plan_of({{"benign", "benign_regular", 15}, {"Phishing", "phishing_like", 5},
                                      {"Hack", "hack_like", 5}, {"Gambling", "gambling_like", 5}}),
                             8);
    auto batch = extract_all(s.ledger, {});
    CHECK(batch.skipped.empty());
    CHECK(batch.vectors.size() == 30);
}

TEST_CASE("plan and library documents") {
    auto plan = SynthPlan::from_json(nlohmann::json::parse(R"({"entries": [
        {"activity": "benign", "archetype": "benign_regular", "count": 3},
        {"activity": "Phishing", "archetype": "phishing_like", "count": 2, "source": "Db",
         "params": {"victims": [5, 6]}}]})"));
    CHECK(plan.total() == 5);
    CHECK(plan.entries[0].klass == Klass::Benign);
    CHECK(plan.entries[1].source == Source::Db);
    CHECK(plan.entries[1].overrides.at("victims").hi == 6);
    CHECK(SynthPlan::from_json(plan.to_json()).to_json() == plan.to_json());

    auto lib = ArchetypeLibrary::builtin();
    CHECK(lib.version == kArchetypeVersion);
    CHECK(ArchetypeLibrary::from_json(lib.to_json()).to_json() == lib.to_json());
    auto bad = lib.to_json();
    bad["version"] = "archetypes/0";
    CHECK_THROWS_AS(ArchetypeLibrary::from_json(bad), Error);

    CHECK_THROWS_AS(generate_ledger(SynthPlan{}, 1), Error);
    CHECK_THROWS_AS(generate_ledger(plan_of({{"X", "volcano_like", 3}}), 1), Error);
}

TEST_CASE("overrides change the generated behavior") {
    auto plan = plan_of({{"benign", "benign_regular", 5}, {"Phishing", "phishing_like", 4}});
    auto few = plan;
    few.entries[1].overrides["victims"] = Range{2, 2};
    auto s = generate_ledger(few, 2);
    AccountIndex index(s.ledger, false);
    for (const auto& [addr, arch] : s.archetype_of)
        if (arch == "phishing_like") CHECK(build_profile(s.ledger, index, addr, {}).in_txs.size() == 2);
}

}  // TEST_SUITE
