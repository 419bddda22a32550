#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "malscope/dataset.hpp"
#include "malscope/nn.hpp"

namespace malscope {

struct GanConfig {
    int noise_dim = 32;
    std::vector<int> hidden_widths{128, 128};
    int epochs = 1000;
    std::size_t batch_size = 32;
    double generator_lr = 2e-4;
    double discriminator_lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double leaky_slope = 0.2;
    double dropout = 0.5;
    std::uint64_t seed = 0;

    /// Throws on invalid values; warns when fewer than 300 epochs are asked for.
    std::vector<std::string> validate() const;
};

nlohmann::json gan_config_to_json(const GanConfig& c);
GanConfig gan_config_from_json(const nlohmann::json& j, GanConfig defaults = {});

/// Fitted generator: noise -> z-scored feature row -> original scale.
class Generator {
public:
    Generator() = default;
    Generator(std::string activity, int noise_dim, Standardizer transform, nn::Sequential net);

    const std::string& activity() const { return activity_; }
    int noise_dim() const { return noise_dim_; }
    Eigen::Index dim() const { return transform_.mean().size(); }
    const Standardizer& transform() const { return transform_; }

    /// n rows in the original feature scale.
    Eigen::MatrixXd generate(std::size_t n, std::uint64_t seed) const;

    nlohmann::json to_json() const;
    static Generator from_json(const nlohmann::json& j);
    /// Hex digest of the serialized state.
    std::string fingerprint() const;

private:
    std::string activity_;
    int noise_dim_ = 0;
    Standardizer transform_;
    mutable nn::Sequential net_;
};

struct GanHistory {
    std::vector<double> discriminator_loss;      // mean per epoch
    std::vector<double> generator_loss;          // mean per epoch
    std::vector<double> discriminator_accuracy;  // on (real, fake) batches, mean per epoch
};

struct GanFit {
    Generator generator;
    GanHistory history;
    std::vector<std::string> warnings;
};

/// Trains one generator on the rows of a single activity (m >= 10).
GanFit gan_fit(const Eigen::MatrixXd& rows, const GanConfig& cfg, std::string activity = {});

struct AdversarialBatch {
    std::string activity;
    Eigen::MatrixXd rows;
    std::string generator_fingerprint;
    Source source = Source::Dg;
};

AdversarialBatch gan_sample(const Generator& gen, std::size_t n, std::uint64_t seed);

/// Activities need strictly more than this many accounts to be generated.
inline constexpr std::size_t kMinAccountsForGeneration = 10;

/// Malicious rows of `data` grouped by activity; one generator per planned
/// activity, seeded by derive_seed(cfg.seed, activity). Rows are addressed
/// "dg:<activity>:<index>".
LabeledDataset make_dg(const LabeledDataset& data, const std::map<std::string, std::size_t>& plan,
                       const GanConfig& cfg, std::map<std::string, GanFit>* fits = nullptr);

enum class ContaminationMode { Fraction1, Fraction5, All80 };
std::string_view to_string(ContaminationMode m);
ContaminationMode parse_contamination_mode(std::string_view s);  // fraction_1, fraction_5, all_80

/// round(n * percent / 100) with halves rounded up.
std::size_t percent_count(std::size_t n, unsigned percent);

struct Contamination {
    LabeledDataset train;             // original rows followed by the drawn dg rows
    LabeledDataset adversarial_test;  // dg rows not drawn
    std::size_t drawn = 0;
};

Contamination contaminate_training(const LabeledDataset& train, const LabeledDataset& dg, ContaminationMode mode,
                                   std::uint64_t seed);

}  // namespace malscope
