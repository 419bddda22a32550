#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malscope/advgen.hpp"
#include "malscope/dataset.hpp"
#include "malscope/models.hpp"
#include "malscope/splits.hpp"

namespace malscope {

struct ActivityTally {
    double total = 0.0;
    double correct = 0.0;
};

/// Malicious is the positive class. Counts are averages once repeats > 1.
struct ConfusionReport {
    double tp = 0.0, fp = 0.0, tn = 0.0, fn = 0.0;
    std::optional<double> recall_mal;  // absent when the test side has no malicious rows
    std::optional<double> recall_ben;
    std::optional<double> balanced_accuracy;
    std::map<std::string, ActivityTally> per_activity;  // benign rows under "benign"
    int repeats = 1;
    std::map<std::string, double> dispersion;  // population std across repeats

    double total() const { return tp + fp + tn + fn; }
};

ConfusionReport score(const std::vector<Prediction>& predictions, const std::vector<LabeledRow>& truth);
ConfusionReport score(const std::vector<Prediction>& predictions, const LabeledDataset& truth);

/// Means of counts, recalls and per-activity tallies, summed in index order.
/// Recalls average over the repeats where they are defined.
ConfusionReport aggregate(const std::vector<ConfusionReport>& runs);

enum class Scenario { Split, NewData, Adversarial };
std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view s);

struct ExperimentSpec {
    Scenario scenario = Scenario::Split;
    SplitConfig config = SplitConfig::C0;
    std::string focus_activity;
    ModelSpec model{};
    int repeats = 50;
    std::uint64_t base_seed = 0;
    /// Adversarial scenario: contamination draw. Without it the model trains
    /// on the clean split and is scored against every dg row.
    std::optional<ContaminationMode> contamination;
    /// Adversarial scenario: when false the drawn rows still leave the test
    /// side but are not added to training (clean baseline on identical rows).
    bool inject = true;
};

struct ExperimentInputs {
    const LabeledDataset* original = nullptr;       // D_a
    const LabeledDataset* new_malicious = nullptr;  // D_b, NewData scenario
    const LabeledDataset* adversarial = nullptr;    // D_g, Adversarial scenario
};

struct ExperimentResult {
    ConfusionReport report;                     // whole test side
    std::optional<ConfusionReport> adversarial;  // dg rows of the test side only
    std::vector<ConfusionReport> runs;
    std::vector<ConfusionReport> adversarial_runs;
};

/// Repeat i uses seed base_seed + i for both the split and the fit.
ExperimentResult run_experiment(const ExperimentInputs& inputs, const ExperimentSpec& spec);

nlohmann::json report_to_json(const ConfusionReport& r);
ConfusionReport report_from_json(const nlohmann::json& j);
/// Fixed two-decimal rendering used by the tabular reports.
std::string format_2dp(double v);

}  // namespace malscope
