#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "malscope/error.hpp"
#include "malscope/pipeline.hpp"

namespace fs = std::filesystem;
using namespace malscope;

namespace {

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Input: return 3;
        case ErrorKind::Data: return 4;
        case ErrorKind::Network: return 5;
        case ErrorKind::Numeric: return 6;
    }
    return 1;
}

const char* kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return "config";
        case ErrorKind::Input: return "input";
        case ErrorKind::Data: return "data";
        case ErrorKind::Network: return "network";
        case ErrorKind::Numeric: return "numeric";
    }
    return "error";
}

template <class T, class F>
std::optional<T> parse_opt(const std::string& s, F parse) {
    if (s.empty()) return std::nullopt;
    return parse(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"malscope: Ethereum account behaviour features, bias analysis and adversarial robustness"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file = "configs/desk.json";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> epoch_seconds;
    app.add_option("--config-file", config_file, "Settings document (JSON)")->capture_default_str();
    app.add_option("--seed", seed, "Override the root seed");
    app.add_option("--out-dir", out_dir, "Override the output directory");
    app.add_option("--epoch-seconds", epoch_seconds, "Override the epoch width in seconds");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled ledger");

    auto* ingest = app.add_subcommand("ingest", "Normalize transactions and labels into the output directory");
    std::string tx_file, tx_format = "jsonl", labels_file, endpoint = "https://api.etherscan.io/api";
    bool fetch = false;
    ingest->add_option("--transactions", tx_file, "Transaction file (JSONL or CSV)");
    ingest->add_option("--format", tx_format, "jsonl or csv")->capture_default_str();
    ingest->add_option("--labels", labels_file, "Label CSV: address,klass,activity,source")->required();
    ingest->add_flag("--fetch", fetch, "Download the labeled accounts' transactions (needs ETHERSCAN_API_KEY)");
    ingest->add_option("--endpoint", endpoint, "Etherscan-compatible API endpoint")->capture_default_str();

    auto* features = app.add_subcommand("features", "Extract the account feature matrix");
    auto* similarity = app.add_subcommand("similarity", "Pairwise activity cosine-similarity matrix");
    auto* cluster = app.add_subcommand("cluster", "K-Means clustering and activity contingency table");

    std::string split_config, focus, model;
    auto* split = app.add_subcommand("split", "Write a train/test manifest for a split layout");
    split->add_option("--config", split_config, "C0..C5");
    split->add_option("--focus", focus, "Focus activity for C1-C4");

    auto* train = app.add_subcommand("train", "Fit one model on a split and score its test side");
    train->add_option("--config", split_config, "C0..C5");
    train->add_option("--focus", focus, "Focus activity for C1-C4");
    train->add_option("--model", model, "dt, rf, etc, adaboost, gboost or nn")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Repeated split/fit/score experiment");
    std::string scenario = "split", contamination;
    std::vector<std::string> models;
    std::optional<int> repeats;
    evaluate->add_option("--scenario", scenario, "split, newdata or adversarial")->capture_default_str();
    evaluate->add_option("--config", split_config, "C0..C5");
    evaluate->add_option("--focus", focus, "Focus activity for C1-C4");
    evaluate->add_option("--model", models, "Model kinds (default: all configured)");
    evaluate->add_option("--repeats", repeats, "Number of repeats");
    evaluate->add_option("--contamination", contamination, "fraction_1, fraction_5 or all_80 (adversarial scenario)");

    auto* advgen = app.add_subcommand("advgen", "Train per-activity generators and write generated rows");
    std::string plan_file;
    advgen->add_option("--plan", plan_file, "JSON object mapping activity to sample count");

    auto* contaminate = app.add_subcommand("contaminate", "Mix generated rows into the training side");
    std::string mode;
    contaminate->add_option("--mode", mode, "fraction_1, fraction_5 or all_80")->required();

    auto* report = app.add_subcommand("report", "Collate tables and heatmaps");

    CLI11_PARSE(app, argc, argv);

    try {
        Settings s = Settings::load(config_file);
        if (seed) s.seed = *seed;
        if (out_dir) s.out_dir = *out_dir;
        if (epoch_seconds) {
            s.epoch.epoch_seconds = *epoch_seconds;
            s.epoch.validate();
        }
        const auto cfg = parse_opt<SplitConfig>(split_config, parse_split_config);
        const std::optional<std::string> foc = focus.empty() ? std::nullopt : std::optional<std::string>(focus);

        std::vector<fs::path> written;
        if (synth->parsed()) {
            written = run_synth(s);
        } else if (ingest->parsed()) {
            IngestOptions o;
            if (!tx_file.empty()) o.transactions = tx_file;
            o.format = parse_tx_format(tx_format);
            o.labels = labels_file;
            o.fetch = fetch;
            o.endpoint = endpoint;
            written = run_ingest(s, o);
        } else if (features->parsed()) {
            written = run_features(s);
        } else if (similarity->parsed()) {
            written = run_similarity(s);
        } else if (cluster->parsed()) {
            written = run_cluster(s);
        } else if (split->parsed()) {
            written = run_split(s, cfg, foc);
        } else if (train->parsed()) {
            written = run_train(s, cfg, foc, parse_model_kind(model));
        } else if (evaluate->parsed()) {
            EvaluateOptions o;
            o.scenario = parse_scenario(scenario);
            o.config = cfg;
            o.focus = foc;
            for (const auto& m : models)
                if (m != "all") o.kinds.push_back(parse_model_kind(m));
            o.repeats = repeats;
            o.contamination = parse_opt<ContaminationMode>(contamination, parse_contamination_mode);
            written = run_evaluate(s, o);
        } else if (advgen->parsed()) {
            written = run_advgen(s, plan_file.empty() ? std::nullopt : std::optional<fs::path>(plan_file));
        } else if (contaminate->parsed()) {
            written = run_contaminate(s, parse_contamination_mode(mode));
        } else if (report->parsed()) {
            written = run_report(s);
        }
        for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
    } catch (const Error& e) {
        std::cerr << "error [" << kind_name(e.kind()) << "]: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
