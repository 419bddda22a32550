#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "malscope/dataset.hpp"

namespace malscope {

/// Train/test layouts around a focus activity:
///   C0  random 80/20 account split
///   C1  C0 train, C0 test without focus accounts
///   C2  C0 train without focus accounts, C0 test
///   C3  C2 train, C1 test
///   C4  C0 train plus the focus accounts of C0 test, C1 test
///   C5  80/20 split within every activity and within benign
enum class SplitConfig { C0, C1, C2, C3, C4, C5 };

std::string_view to_string(SplitConfig c);
SplitConfig parse_split_config(std::string_view s);

struct SplitPair {
    SplitConfig config = SplitConfig::C0;
    std::string focus_activity;
    std::uint64_t seed = 0;
    LabeledDataset train;
    LabeledDataset test;
};

/// Train share of a stratum of n rows: ceil(0.8 n).
std::size_t train_share(std::size_t n);

SplitPair make_c0(const LabeledDataset& data, std::uint64_t seed);
SplitPair derive_config(const SplitPair& base, SplitConfig config, std::string_view focus_activity);
SplitPair make_c5(const LabeledDataset& data, std::uint64_t seed);
/// C0/C5 built from scratch, C1-C4 derived from a C0 split with the same seed.
SplitPair make_split(const LabeledDataset& data, SplitConfig config, std::string_view focus_activity,
                     std::uint64_t seed);

/// Evaluation on newly observed malicious accounts: accounts of the C0
/// train side that reappear in `new_malicious` move to the test side, which
/// also holds every benign account of the C0 test side and all new rows.
SplitPair make_newdata_eval(const LabeledDataset& original, const LabeledDataset& new_malicious,
                            const SplitPair& base);

struct SplitManifest {
    SplitConfig config = SplitConfig::C0;
    std::string focus_activity;
    std::uint64_t seed = 0;
    std::vector<std::string> train_addresses;
    std::vector<std::string> test_addresses;
};

SplitManifest manifest_of(const SplitPair& split);
void write_manifest(std::ostream& out, const SplitManifest& m);
SplitManifest read_manifest(std::istream& in);
/// Rebuilds a split from a manifest against the dataset it was cut from.
SplitPair materialize(const SplitManifest& m, const LabeledDataset& data);

}  // namespace malscope
