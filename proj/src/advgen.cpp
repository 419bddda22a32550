#include "malscope/advgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "malscope/error.hpp"

namespace malscope {

namespace {

constexpr const char* kGeneratorFormat = "malscope-generator/1";

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Eigen::MatrixXd noise(Eigen::Index n, int dim, Rng& rng) {
    Eigen::MatrixXd z(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) z(i, j) = rng.normal();
    return z;
}

nn::Sequential build_generator(int noise_dim, const std::vector<int>& hidden, Eigen::Index out, Rng& rng) {
    nn::Sequential g;
    Eigen::Index width = noise_dim;
    for (int h : hidden) {
        g.add<nn::Dense>(width, h).init(rng);
        g.add<nn::BatchNorm>(h, 0.9);
        g.add<nn::Relu>();
        width = h;
    }
    g.add<nn::Dense>(width, out).init(rng);
    return g;
}

nn::Sequential build_discriminator(Eigen::Index in, const GanConfig& cfg, Rng& rng) {
    nn::Sequential d;
    Eigen::Index width = in;
    for (int h : cfg.hidden_widths) {
        d.add<nn::Dense>(width, h).init(rng);
        d.add<nn::LeakyRelu>(cfg.leaky_slope);
        if (cfg.dropout > 0.0) d.add<nn::Dropout>(cfg.dropout);
        width = h;
    }
    d.add<nn::Dense>(width, 1).init(rng);
    return d;
}

double bce(double logit, double target) { return nn::softplus(logit) - target * logit; }

}  // namespace

std::vector<std::string> GanConfig::validate() const {
    if (epochs < 1) throw config_error("GAN epochs must be >= 1");
    if (noise_dim < 1) throw config_error("GAN noise_dim must be >= 1");
    if (batch_size < 2) throw config_error("GAN batch_size must be >= 2");
    if (hidden_widths.empty()) throw config_error("GAN needs at least one hidden layer");
    for (int w : hidden_widths)
        if (w < 1) throw config_error("GAN hidden widths must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw config_error("GAN dropout must lie in [0, 1)");
    if (generator_lr <= 0.0 || discriminator_lr <= 0.0) throw config_error("GAN learning rates must be positive");
    std::vector<std::string> warnings;
    if (epochs < 300) warnings.push_back("GAN epochs = " + std::to_string(epochs) + "; at least 300 are recommended");
    return warnings;
}

nlohmann::json gan_config_to_json(const GanConfig& c) {
    return {{"noise_dim", c.noise_dim},
            {"hidden_widths", c.hidden_widths},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"generator_lr", c.generator_lr},
            {"discriminator_lr", c.discriminator_lr},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"leaky_slope", c.leaky_slope},
            {"dropout", c.dropout},
            {"seed", c.seed}};
}

GanConfig gan_config_from_json(const nlohmann::json& j, GanConfig c) {
    if (j.contains("noise_dim")) c.noise_dim = j["noise_dim"].get<int>();
    if (j.contains("hidden_widths")) c.hidden_widths = j["hidden_widths"].get<std::vector<int>>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("generator_lr")) c.generator_lr = j["generator_lr"].get<double>();
    if (j.contains("discriminator_lr")) c.discriminator_lr = j["discriminator_lr"].get<double>();
    if (j.contains("beta1")) c.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) c.beta2 = j["beta2"].get<double>();
    if (j.contains("leaky_slope")) c.leaky_slope = j["leaky_slope"].get<double>();
    if (j.contains("dropout")) c.dropout = j["dropout"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    return c;
}

// --- Generator ----------------------------------------------------------------

Generator::Generator(std::string activity, int noise_dim, Standardizer transform, nn::Sequential net)
    : activity_(std::move(activity)), noise_dim_(noise_dim), transform_(std::move(transform)), net_(std::move(net)) {}

Eigen::MatrixXd Generator::generate(std::size_t n, std::uint64_t seed) const {
    if (n == 0) return Eigen::MatrixXd(0, dim());
    Rng rng(seed);
    const Eigen::MatrixXd z = noise(static_cast<Eigen::Index>(n), noise_dim_, rng);
    return transform_.inverse(net_.forward(z, false, nullptr));
}

nlohmann::json Generator::to_json() const {
    const auto& m = transform_.mean();
    const auto& s = transform_.scale();
    return {{"format", kGeneratorFormat},
            {"activity", activity_},
            {"noise_dim", noise_dim_},
            {"mean", std::vector<double>(m.data(), m.data() + m.size())},
            {"scale", std::vector<double>(s.data(), s.data() + s.size())},
            {"layers", net_.to_json()}};
}

Generator Generator::from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != kGeneratorFormat)
        throw data_error("unsupported generator document (expected format " + std::string(kGeneratorFormat) + ")");
    auto mean = j.at("mean").get<std::vector<double>>();
    auto scale = j.at("scale").get<std::vector<double>>();
    Eigen::VectorXd m = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    Eigen::VectorXd s = Eigen::Map<Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    return Generator(j.at("activity").get<std::string>(), j.at("noise_dim").get<int>(), Standardizer::from(m, s),
                     nn::Sequential::from_json(j.at("layers")));
}

std::string Generator::fingerprint() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
    return buf;
}

// --- training -----------------------------------------------------------------

GanFit gan_fit(const Eigen::MatrixXd& rows, const GanConfig& cfg, std::string activity) {
    GanFit fit;
    fit.warnings = cfg.validate();
    const auto m = static_cast<std::size_t>(rows.rows());
    if (m < 10)
        throw data_error("insufficient feature vectors: " + std::to_string(m) +
                         (activity.empty() ? std::string{} : " for activity '" + activity + "'") +
                         " (at least 10 are needed)");
    if (!rows.allFinite()) throw data_error("GAN input contains non-finite values");

    Standardizer transform = Standardizer::fit(rows);
    const Eigen::MatrixXd real = transform.transform(rows);
    const Eigen::Index dim = rows.cols();

    Rng init_rng(derive_seed(cfg.seed, "init"));
    nn::Sequential gen = build_generator(cfg.noise_dim, cfg.hidden_widths, dim, init_rng);
    nn::Sequential disc = build_discriminator(dim, cfg, init_rng);
    nn::Adam gen_opt({cfg.generator_lr, cfg.beta1, cfg.beta2, 1e-8});
    nn::Adam disc_opt({cfg.discriminator_lr, cfg.beta1, cfg.beta2, 1e-8});
    auto gen_params = gen.params();
    auto disc_params = disc.params();

    Rng batch_rng(derive_seed(cfg.seed, "batches"));
    Rng noise_rng(derive_seed(cfg.seed, "noise"));
    Rng drop_rng(derive_seed(cfg.seed, "dropout"));

    const std::size_t batch = std::min(cfg.batch_size, m);
    const std::size_t steps = std::max<std::size_t>(1, m / batch);
    const auto b = static_cast<Eigen::Index>(batch);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});

    Eigen::MatrixXd both(2 * b, dim);
    Eigen::MatrixXd dlogit(2 * b, 1);
    Eigen::MatrixXd glogit_grad(b, 1);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        batch_rng.shuffle(order.begin(), order.end());
        double d_sum = 0.0, g_sum = 0.0, acc_sum = 0.0;
        for (std::size_t s = 0; s < steps; ++s) {
            // discriminator step: real rows labeled 1, fresh fakes labeled 0
            for (Eigen::Index k = 0; k < b; ++k)
                both.row(k) = real.row(static_cast<Eigen::Index>(order[s * batch + static_cast<std::size_t>(k)]));
            both.bottomRows(b) = gen.forward(noise(b, cfg.noise_dim, noise_rng), true, nullptr);
            const Eigen::MatrixXd dl = disc.forward(both, true, &drop_rng);
            double d_loss = 0.0;
            std::size_t correct = 0;
            for (Eigen::Index k = 0; k < 2 * b; ++k) {
                const double target = k < b ? 1.0 : 0.0;
                d_loss += bce(dl(k, 0), target);
                dlogit(k, 0) = (nn::sigmoid(dl(k, 0)) - target) / static_cast<double>(2 * b);
                if ((dl(k, 0) > 0.0) == (target > 0.5)) ++correct;
            }
            d_loss /= static_cast<double>(2 * b);
            disc.zero_grad();
            disc.backward(dlogit);
            disc_opt.step(disc_params);

            // generator step: non-saturating loss -log D(G(z))
            const Eigen::MatrixXd fake = gen.forward(noise(b, cfg.noise_dim, noise_rng), true, nullptr);
            const Eigen::MatrixXd gl = disc.forward(fake, true, &drop_rng);
            double g_loss = 0.0;
            for (Eigen::Index k = 0; k < b; ++k) {
                g_loss += bce(gl(k, 0), 1.0);
                glogit_grad(k, 0) = (nn::sigmoid(gl(k, 0)) - 1.0) / static_cast<double>(b);
            }
            g_loss /= static_cast<double>(b);
            disc.zero_grad();
            const Eigen::MatrixXd dfake = disc.backward(glogit_grad);
            gen.zero_grad();
            gen.backward(dfake);
            gen_opt.step(gen_params);

            if (!std::isfinite(d_loss) || !std::isfinite(g_loss))
                throw Error(ErrorKind::Numeric, "GAN training diverged at epoch " + std::to_string(epoch + 1) +
                                                    " (discriminator loss " + std::to_string(d_loss) +
                                                    ", generator loss " + std::to_string(g_loss) + ")");
            d_sum += d_loss;
            g_sum += g_loss;
            acc_sum += static_cast<double>(correct) / static_cast<double>(2 * b);
        }
        const auto st = static_cast<double>(steps);
        fit.history.discriminator_loss.push_back(d_sum / st);
        fit.history.generator_loss.push_back(g_sum / st);
        fit.history.discriminator_accuracy.push_back(acc_sum / st);
    }
    fit.generator = Generator(std::move(activity), cfg.noise_dim, std::move(transform), std::move(gen));
    return fit;
}

AdversarialBatch gan_sample(const Generator& gen, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw config_error("sample count must be positive");
    AdversarialBatch out;
    out.activity = gen.activity();
    out.rows = gen.generate(n, seed);
    if (!out.rows.allFinite())
        throw Error(ErrorKind::Numeric, "generator for '" + gen.activity() + "' produced non-finite values");
    out.generator_fingerprint = gen.fingerprint();
    return out;
}

LabeledDataset make_dg(const LabeledDataset& data, const std::map<std::string, std::size_t>& plan,
                       const GanConfig& cfg, std::map<std::string, GanFit>* fits) {
    for (const auto& [activity, n] : plan) {
        const std::size_t have = data.filter([&](const LabeledRow& r) {
                                         return r.klass == Klass::Malicious && r.activity == activity;
                                     }).size();
        if (have <= kMinAccountsForGeneration)
            throw data_error("activity '" + activity + "' has " + std::to_string(have) +
                             " accounts; adversarial generation needs more than " +
                             std::to_string(kMinAccountsForGeneration));
        if (n == 0) throw config_error("plan for activity '" + activity + "' requests zero samples");
    }
    LabeledDataset out;
    for (const auto& [activity, n] : plan) {
        const LabeledDataset src =
            data.filter([&](const LabeledRow& r) { return r.klass == Klass::Malicious && r.activity == activity; });
        GanConfig c = cfg;
        c.seed = derive_seed(cfg.seed, activity);
        GanFit fit = gan_fit(src.matrix(), c, activity);
        const AdversarialBatch batch = gan_sample(fit.generator, n, derive_seed(c.seed, "sample"));
        for (Eigen::Index i = 0; i < batch.rows.rows(); ++i) {
            LabeledRow row;
            row.address = "dg:" + activity + ":" + std::to_string(i);
            for (Eigen::Index c2 = 0; c2 < batch.rows.cols(); ++c2) row.values.push_back(batch.rows(i, c2));
            row.klass = Klass::Malicious;
            row.activity = activity;
            row.source = Source::Dg;
            out.add(std::move(row));
        }
        if (fits) fits->emplace(activity, std::move(fit));
    }
    return out;
}

// --- contamination --------------------------------------------------------------

std::string_view to_string(ContaminationMode m) {
    switch (m) {
        case ContaminationMode::Fraction1: return "fraction_1";
        case ContaminationMode::Fraction5: return "fraction_5";
        case ContaminationMode::All80: return "all_80";
    }
    return "?";
}

ContaminationMode parse_contamination_mode(std::string_view s) {
    if (s == "fraction_1") return ContaminationMode::Fraction1;
    if (s == "fraction_5") return ContaminationMode::Fraction5;
    if (s == "all_80") return ContaminationMode::All80;
    throw config_error("unknown contamination mode '" + std::string(s) + "' (expected fraction_1, fraction_5 or all_80)");
}

std::size_t percent_count(std::size_t n, unsigned percent) { return (n * percent + 50) / 100; }

Contamination contaminate_training(const LabeledDataset& train, const LabeledDataset& dg, ContaminationMode mode,
                                   std::uint64_t seed) {
    if (dg.empty()) throw data_error("adversarial dataset is empty");
    std::vector<bool> take(dg.size(), false);

    auto draw = [&](std::vector<std::size_t> pool, std::size_t k, std::uint64_t s) {
        Rng rng(s);
        rng.shuffle(pool.begin(), pool.end());
        for (std::size_t i = 0; i < k; ++i) take[pool[i]] = true;
    };

    if (mode == ContaminationMode::All80) {
        std::map<std::string, std::vector<std::size_t>> by_activity;
        for (std::size_t i = 0; i < dg.size(); ++i) by_activity[dg.rows()[i].activity].push_back(i);
        for (auto& [activity, idx] : by_activity) {
            const std::size_t k = std::max<std::size_t>(1, percent_count(idx.size(), 80));
            draw(idx, k, derive_seed(seed, activity));
        }
    } else {
        const unsigned pct = mode == ContaminationMode::Fraction1 ? 1 : 5;
        const std::size_t k = percent_count(dg.size(), pct);
        if (k == 0)
            throw data_error(std::to_string(pct) + "% of " + std::to_string(dg.size()) +
                             " adversarial rows rounds to zero");
        std::vector<std::size_t> all(dg.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        draw(std::move(all), k, seed);
    }

    Contamination out;
    out.train = train;
    for (std::size_t i = 0; i < dg.size(); ++i) {
        if (take[i]) {
            out.train.add(dg.rows()[i]);
            ++out.drawn;
        } else {
            out.adversarial_test.add(dg.rows()[i]);
        }
    }
    return out;
}

}  // namespace malscope
