#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malscope/advgen.hpp"
#include "malscope/metrics.hpp"
#include "malscope/models.hpp"
#include "malscope/series.hpp"
#include "malscope/similarity.hpp"
#include "malscope/splits.hpp"
#include "malscope/synth.hpp"

namespace malscope {

/// Everything a pipeline run needs, loaded from one JSON document. All
/// randomness derives from `seed` through derive_seed(seed, <stage>).
struct Settings {
    std::uint64_t seed = 42;
    std::filesystem::path out_dir = "out";
    EpochConfig epoch{};

    std::optional<std::filesystem::path> archetypes_file;  // bundled archetypes/1 when absent
    SynthPlan plan{};

    SplitConfig split_config = SplitConfig::C0;
    std::string focus_activity;  // largest malicious activity when empty

    ModelSpec models{};
    std::vector<ModelKind> kinds{std::begin(kAllModelKinds), std::end(kAllModelKinds)};
    std::vector<ModelKind> table4_models{ModelKind::ExtraTrees, ModelKind::NeuralNet};
    int repeats = 10;

    GanConfig gan{};
    std::map<std::string, std::size_t> gan_plan;  // activity -> samples
    std::vector<ContaminationMode> contamination_modes{ContaminationMode::Fraction1, ContaminationMode::Fraction5,
                                                       ContaminationMode::All80};

    SimilarityOptions similarity{};
    std::optional<std::size_t> clusters;  // #activities + 1 when absent
    int kmeans_max_iter = 300;
    int kmeans_restarts = 10;

    static Settings from_json(const nlohmann::json& j);
    static Settings load(const std::filesystem::path& file);
    nlohmann::json to_json() const;

    std::uint64_t child_seed(std::string_view stage) const { return derive_seed(seed, stage); }
    std::filesystem::path path(std::string_view file) const { return out_dir / std::string(file); }
};

/// Interchange file names inside the output directory.
namespace files {
inline constexpr const char* kTransactions = "transactions.jsonl";
inline constexpr const char* kLabels = "labels.csv";
inline constexpr const char* kArchetypeTags = "accounts.csv";
inline constexpr const char* kFeatures = "features.csv";
inline constexpr const char* kSkipped = "features_skipped.txt";
inline constexpr const char* kSimilarity = "similarity.json";
inline constexpr const char* kSimilarityHeatmap = "similarity_activity.csv";
inline constexpr const char* kClusters = "clusters.csv";
inline constexpr const char* kContingency = "cluster_contingency.csv";
inline constexpr const char* kClusterSummary = "clusters.json";
inline constexpr const char* kDg = "dg.csv";
inline constexpr const char* kAdvgenSummary = "advgen.json";
inline constexpr const char* kReportDir = "report";
}  // namespace files

std::string split_file(SplitConfig c);
std::string model_file(ModelKind k, SplitConfig c);
std::string train_report_file(ModelKind k, SplitConfig c);

struct IngestOptions {
    std::optional<std::filesystem::path> transactions;
    TxFormat format = TxFormat::Jsonl;
    std::filesystem::path labels;
    /// Fetch the labeled accounts from an Etherscan-compatible endpoint
    /// instead of reading a transaction file.
    bool fetch = false;
    std::string endpoint = "https://api.etherscan.io/api";
};

struct EvaluateOptions {
    Scenario scenario = Scenario::Split;
    std::optional<SplitConfig> config;
    std::optional<std::string> focus;
    std::vector<ModelKind> kinds;  // all configured kinds when empty
    std::optional<int> repeats;
    std::optional<ContaminationMode> contamination;
};

/// Each stage returns the files it wrote.
std::vector<std::filesystem::path> run_synth(const Settings& s);
std::vector<std::filesystem::path> run_ingest(const Settings& s, const IngestOptions& opts);
std::vector<std::filesystem::path> run_features(const Settings& s);
std::vector<std::filesystem::path> run_similarity(const Settings& s);
std::vector<std::filesystem::path> run_cluster(const Settings& s);
std::vector<std::filesystem::path> run_split(const Settings& s, std::optional<SplitConfig> config,
                                             std::optional<std::string> focus);
std::vector<std::filesystem::path> run_train(const Settings& s, std::optional<SplitConfig> config,
                                             std::optional<std::string> focus, ModelKind kind);
std::vector<std::filesystem::path> run_evaluate(const Settings& s, const EvaluateOptions& opts);
std::vector<std::filesystem::path> run_advgen(const Settings& s,
                                              const std::optional<std::filesystem::path>& plan_file);
std::vector<std::filesystem::path> run_contaminate(const Settings& s, ContaminationMode mode);
std::vector<std::filesystem::path> run_report(const Settings& s);

/// Labeled feature rows from features.csv split by provenance.
struct FeatureSets {
    LabeledDataset original;       // D_a
    LabeledDataset new_malicious;  // D_b
};
FeatureSets load_feature_sets(const Settings& s);

std::string resolve_focus(const Settings& s, const LabeledDataset& original, std::optional<std::string> focus);

}  // namespace malscope
