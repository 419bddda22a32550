#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "malscope/dataset.hpp"
#include "malscope/rng.hpp"
#include "malscope/txio.hpp"

namespace testing {

inline std::filesystem::path source_dir() { return MALSCOPE_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& name) { return source_dir() / "tests" / "fixtures" / name; }
inline std::filesystem::path cli_path() { return MALSCOPE_CLI_PATH; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("malscope-test-" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Deterministic 0x address from a small integer.
inline std::string address(std::uint64_t n) {
    std::ostringstream ss;
    ss << "0x" << std::hex;
    ss.width(40);
    ss.fill('0');
    ss << n;
    return ss.str();
}

inline std::string tx_hash(std::uint64_t n) {
    std::ostringstream ss;
    ss << "0x" << std::hex;
    ss.width(64);
    ss.fill('0');
    ss << n;
    return ss.str();
}

inline malscope::Transaction tx(std::uint64_t id, std::uint64_t t, std::uint64_t from, std::uint64_t to,
                                double ether, std::uint64_t gas_price_gwei = 20) {
    malscope::Transaction x;
    x.hash = tx_hash(id);
    x.block_number = t / 13;
    x.timestamp = t;
    x.from = address(from);
    x.to = address(to);
    x.value = malscope::Wei(static_cast<std::uint64_t>(std::llround(ether * 1e6))) * malscope::Wei(1000000000000ULL);
    x.gas = 21000;
    x.gas_price = malscope::Wei(gas_price_gwei) * malscope::Wei(1000000000ULL);
    return x;
}

inline malscope::LabeledRow row(std::string addr, std::vector<double> values, bool malicious,
                                std::string activity = {}) {
    malscope::LabeledRow r;
    r.address = std::move(addr);
    r.values = std::move(values);
    r.klass = malicious ? malscope::Klass::Malicious : malscope::Klass::Benign;
    r.activity = activity.empty() ? (malicious ? "Mal" : std::string(malscope::kBenignActivity)) : activity;
    return r;
}

/// Two Gaussian blobs: benign around -sep, malicious around +sep on every axis.
inline malscope::LabeledDataset blobs(std::size_t per_class, std::size_t dim, double sep, std::uint64_t seed) {
    malscope::Rng rng(seed);
    malscope::LabeledDataset data;
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        bool mal = i % 2 == 1;
        std::vector<double> v(dim);
        for (auto& x : v) x = rng.normal(mal ? sep : -sep, 1.0);
        data.add(row(address(i + 1), v, mal));
    }
    return data;
}

inline bool rel_close(double a, double b, double rel = 1e-9) {
    return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-3});
}

}  // namespace testing
