#include <doctest.h>

#include <set>

#include "feature_oracle.hpp"
#include "malscope/error.hpp"
#include "malscope/features.hpp"
#include "support.hpp"

using namespace malscope;

namespace {

Ledger ledger_of(std::vector<Transaction> txs, std::uint64_t snapshot) { return Ledger(std::move(txs), {}, snapshot); }

FeatureVector features_of(const Ledger& ledger, std::uint64_t who) {
    EpochConfig cfg;
    NeighborIndex graph(ledger, cfg.include_failed);
    return extract_features(build_profile(ledger, testing::address(who), cfg), graph, cfg, ledger.snapshot_time());
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("catalog has 59 distinct names") {
    auto names = feature_names();
    CHECK(names.size() == 59);
    CHECK(std::set<std::string>(names.begin(), names.end()).size() == 59);
    for (std::size_t i = 0; i < names.size(); ++i) CHECK(feature_index(names[i]) == i);
    CHECK_THROWS_AS(feature_index("nope"), Error);
}

TEST_CASE("single incoming transaction") {
    auto ledger = ledger_of({testing::tx(1, 100, 2, 1, 5.0)}, 200);
    auto f = features_of(ledger, 1);
    CHECK(f.values.size() == 59);
    CHECK(f.at("totalBal") == 5.0);
    CHECK(f.at("uniqueIn") == 1);
    CHECK(f.at("activeDuration") == 0);
    CHECK(f.at("lastActiveSince") == 100);
    CHECK(f.at("zeroTransactions") == 0);
    CHECK(f.at("ittime__quantile__q_0.7") == 0);
    CHECK(f.at("ittime__median") == 0);
    CHECK(f.at("ittime__fft_coefficient__coeff_0__attr_\"real\"") == 0);
    CHECK(f.at("numberOfburstTemporalInOut") == 0);
    CHECK(f.at("longestBurstTemporalInOut") == 0);
    CHECK(f.at("indegreeTimeInv") == 1.0);
}

TEST_CASE("all-zero transfers") {
    auto ledger = ledger_of({testing::tx(1, 100, 2, 1, 0), testing::tx(2, 200, 1, 3, 0), testing::tx(3, 9000, 4, 1, 0)},
                            10000);
    auto f = features_of(ledger, 1);
    CHECK(f.at("zeroTransactions") == 3);
    CHECK(f.at("totalBal") == 0);
    CHECK(f.at("averagePerInBal") == 0);
    CHECK(f.at("balanceIn__quantile__q_0.4") == 0);
    CHECK(f.at("balanceOut__quantile__q_0.3") == 0);
}

TEST_CASE("series formulas") {
    std::vector<double> v123{1, 2, 3};
    CHECK(ts::ts_feature("fft_coefficient(coeff=0,attr=real)", v123).value == 6.0);
    std::vector<double> v1234{1, 2, 3, 4};
    CHECK(ts::ts_feature("quantile(q=0.5)", v1234).value == 2.5);
    std::vector<double> flat(10, 3.0);
    CHECK(ts::ts_feature("energy_ratio_by_chunks(num_segments=10,segment_focus=0)", flat).value ==
          doctest::Approx(0.1).epsilon(1e-12));
    std::vector<double> spike(8, 0.0);
    spike[0] = 10;
    CHECK(ts::ts_feature("index_mass_quantile(q=0.1)", spike).value == 1.0 / 8.0);
    auto empty = ts::ts_feature("median", std::vector<double>{});
    CHECK(empty.value == 0.0);
    CHECK(empty.degenerate);
    CHECK(ts::Formula::parse("cwt_coefficients(coeff=0,w=20)").id() == "cwt_coefficients(coeff=0,w=20)");
}

TEST_CASE("linear trend p-value against Student t") {
    std::vector<double> y{1, 3, 2, 5, 4, 6, 8, 7};
    CHECK(ts::linear_trend_pvalue(y).value == doctest::Approx(oracle::trend_pvalue(y)).epsilon(1e-10));
    std::vector<double> flat{2, 2, 2};
    CHECK(ts::linear_trend_pvalue(flat).value == 1.0);
}

TEST_CASE("ricker wavelet is symmetric with the stated peak") {
    auto w = ts::ricker(11, 2.0);
    for (std::size_t i = 0; i < 11; ++i) CHECK(w[i] == doctest::Approx(w[10 - i]));
    CHECK(w[5] == doctest::Approx(2.0 / (std::sqrt(6.0) * std::pow(std::numbers::pi, 0.25))));
}

TEST_CASE("clustering coefficient") {
    NeighborIndex g;
    SUBCASE("triangle") {
        g.add_edge("a", "b"), g.add_edge("b", "c"), g.add_edge("c", "a");
        for (auto n : {"a", "b", "c"}) CHECK(clustering_coefficient(g, n) == 1.0);
    }
    SUBCASE("star") {
        g.add_edge("c", "x"), g.add_edge("c", "y"), g.add_edge("c", "z");
        CHECK(clustering_coefficient(g, "c") == 0.0);
    }
    SUBCASE("one edge among three neighbors") {
        g.add_edge("a", "b"), g.add_edge("a", "c"), g.add_edge("a", "d"), g.add_edge("b", "c");
        CHECK(clustering_coefficient(g, "a") == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("self loops are ignored") {
        g.add_edge("a", "a"), g.add_edge("a", "b");
        CHECK(g.neighbors("a").size() == 1);
    }
    CHECK_THROWS_AS(clustering_coefficient(g, "nobody"), Error);
}

TEST_CASE("degree over active span") {
    auto four = ledger_of({testing::tx(1, 0 + 10, 2, 1, 1), testing::tx(2, 100, 3, 1, 1), testing::tx(3, 3700, 4, 1, 1),
                           testing::tx(4, 7300, 5, 1, 1)},
                          8000);
    auto p = build_profile(four, testing::address(1), {});
    CHECK(degree_time_inverse(p).in == 2.0);
    CHECK(degree_time_inverse(p).out == 0.0);
    auto one = ledger_of({testing::tx(1, 10, 1, 2, 1)}, 20);
    CHECK(degree_time_inverse(build_profile(one, testing::address(1), {})).out == 1.0);
}

TEST_CASE("matches the oracle on every fixture account") {
    auto txs = parse_transactions(testing::slurp(testing::fixture("accounts25.jsonl")), TxFormat::Jsonl);
    std::istringstream lab(testing::slurp(testing::fixture("accounts25_labels.csv")));
    auto labels = load_labels(lab);
    REQUIRE(labels.size() == 25);
    Ledger ledger(txs, labels, txs.back().timestamp + 86400);
    EpochConfig cfg;
    NeighborIndex graph(ledger, false);
    AccountIndex index(ledger, false);
    auto names = feature_names();
    for (const auto& [addr, label] : labels) {
        CAPTURE(addr);
        auto fv = extract_features(build_profile(ledger, index, addr, cfg), graph, cfg, ledger.snapshot_time());
        auto want = oracle::features(txs, addr, cfg.epoch_seconds, cfg.burst_sigma, ledger.snapshot_time());
        REQUIRE(want.size() == 59);
        for (std::size_t i = 0; i < 59; ++i) {
            CAPTURE(names[i]);
            if (oracle::is_count(names[i])) CHECK(fv.values[i] == want.at(names[i]));
            else CHECK(testing::rel_close(fv.values[i], want.at(names[i])));
        }
    }
}

TEST_CASE("transaction order does not matter") {
    auto txs = parse_transactions(testing::slurp(testing::fixture("accounts25.jsonl")), TxFormat::Jsonl);
    std::istringstream lab(testing::slurp(testing::fixture("accounts25_labels.csv")));
    auto labels = load_labels(lab);
    auto snapshot = txs.back().timestamp + 86400;
    auto shuffled = txs;
    Rng rng(3);
    rng.shuffle(shuffled.begin(), shuffled.end());
    auto a = extract_all(Ledger(txs, labels, snapshot), {});
    auto b = extract_all(Ledger(shuffled, labels, snapshot), {});
    REQUIRE(a.vectors.size() == b.vectors.size());
    for (std::size_t i = 0; i < a.vectors.size(); ++i) CHECK(a.vectors[i].values == b.vectors[i].values);
}

TEST_CASE("scaling values scales balance features only") {
    auto txs = parse_transactions(testing::slurp(testing::fixture("accounts25.jsonl")), TxFormat::Jsonl);
    std::istringstream lab(testing::slurp(testing::fixture("accounts25_labels.csv")));
    auto labels = load_labels(lab);
    auto snapshot = txs.back().timestamp + 86400;
    auto scaled = txs;
    for (auto& t : scaled) t.value *= 3;
    auto a = extract_all(Ledger(txs, labels, snapshot), {});
    auto b = extract_all(Ledger(scaled, labels, snapshot), {});
    const std::vector<std::string> linear{"totalBal", "averagePerInBal", "balanceIn__quantile__q_0.4",
                                          "balanceOut__quantile__q_0.1", "maxInPayment__quantile__q_0.3"};
    const std::vector<std::string> fixed{"uniqueIn", "zeroTransactions", "activeDuration", "ittime__median",
                                         "numberOfburstDegreeIn", "indegreeTimeInv", "clusteringCoeff"};
    for (std::size_t i = 0; i < a.vectors.size(); ++i) {
        for (const auto& n : linear)
            CHECK(b.vectors[i].at(n) == doctest::Approx(3.0 * a.vectors[i].at(n)).epsilon(1e-9));
        for (const auto& n : fixed) CHECK(b.vectors[i].at(n) == a.vectors[i].at(n));
    }
}

TEST_CASE("vectors are finite and ranged") {
    auto txs = parse_transactions(testing::slurp(testing::fixture("accounts25.jsonl")), TxFormat::Jsonl);
    std::istringstream lab(testing::slurp(testing::fixture("accounts25_labels.csv")));
    auto batch = extract_all(Ledger(txs, load_labels(lab), txs.back().timestamp + 86400), {});
    CHECK(batch.vectors.size() == 25);
    for (const auto& fv : batch.vectors) {
        for (double v : fv.values) CHECK(std::isfinite(v));
        for (auto n : {"attractiveness__mean", "attractiveness__median", "clusteringCoeff",
                       "indegree__linear_trend__attr_\"pvalue\"",
                       "indegree__energy_ratio_by_chunks__num_segments_10__-segment_focus_0"}) {
            CHECK(fv.at(n) >= 0.0);
            CHECK(fv.at(n) <= 1.0);
        }
    }
}

TEST_CASE("labeled address without transactions is skipped") {
    LabelMap labels;
    labels[testing::address(1)] = AccountLabel{testing::address(1), Klass::Benign, "benign", Source::Da};
    labels[testing::address(7)] = AccountLabel{testing::address(7), Klass::Benign, "benign", Source::Da};
    auto batch = extract_all(Ledger({testing::tx(1, 10, 1, 2, 1)}, labels, 20), {});
    CHECK(batch.vectors.size() == 1);
    CHECK(batch.skipped == std::vector<std::string>{testing::address(7)});
}

}  // TEST_SUITE
