#include "malscope/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "malscope/csv.hpp"
#include "malscope/error.hpp"
#include "malscope/features.hpp"

namespace fs = std::filesystem;

namespace malscope {

namespace {

std::string read_file(const fs::path& p, std::string_view producer) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        std::string msg = "missing input " + p.string();
        if (!producer.empty()) msg += "; run `malscope " + std::string(producer) + "` first";
        throw Error(ErrorKind::Input, msg);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_file(const fs::path& p, const std::string& content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Input, "cannot write " + p.string());
    out << content;
    if (!out) throw Error(ErrorKind::Input, "failed writing " + p.string());
    return p;
}

fs::path write_json(const fs::path& p, const nlohmann::json& j) { return write_file(p, j.dump(2) + "\n"); }

nlohmann::json parse_json(const std::string& text, const fs::path& where) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Input, where.string() + ": " + e.what());
    }
}

std::string safe_name(std::string_view s) {
    std::string out;
    for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

std::string cell(double v) { return std::isfinite(v) ? csv::format_double(v) : std::string{}; }

std::string matrix_csv(const std::vector<std::string>& rows, const std::vector<std::string>& cols,
                       const Eigen::MatrixXd& m) {
    std::vector<std::string> header{"activity"};
    header.insert(header.end(), cols.begin(), cols.end());
    std::string out = csv::join(header) + "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<std::string> line{rows[i]};
        for (std::size_t j = 0; j < cols.size(); ++j)
            line.push_back(cell(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
        out += csv::join(line) + "\n";
    }
    return out;
}

LabeledDataset read_matrix_file(const fs::path& p, std::string_view producer) {
    std::istringstream in(read_file(p, producer));
    return read_feature_matrix(in);
}

fs::path write_matrix_file(const fs::path& p, const LabeledDataset& d) {
    std::ostringstream out;
    write_feature_matrix(out, d, feature_names());
    return write_file(p, out.str());
}


fs::path write_ledger(const Settings& s, const std::vector<Transaction>& txs, const LabelMap& labels,
                      std::uint64_t snapshot, std::vector<fs::path>& written) {
    std::ostringstream t, l;
    write_transactions(t, txs, TxFormat::Jsonl);
    write_labels(l, labels);
    written.push_back(write_file(s.path(files::kTransactions), t.str()));
    written.push_back(write_file(s.path(files::kLabels), l.str()));
    written.push_back(write_json(s.path("ledger.json"), {{"snapshot_time", snapshot},
                                                         {"transactions", txs.size()},
                                                         {"labeled_accounts", labels.size()}}));
    return written.back();
}

Ledger load_ledger(const Settings& s) {
    const std::string producer = "synth` or `malscope ingest";
    auto txs = parse_transactions(read_file(s.path(files::kTransactions), producer), TxFormat::Jsonl);
    std::istringstream lin(read_file(s.path(files::kLabels), producer));
    LabelMap labels = load_labels(lin);
    const auto meta = parse_json(read_file(s.path("ledger.json"), producer), s.path("ledger.json"));
    return Ledger(std::move(txs), std::move(labels), meta.at("snapshot_time").get<std::uint64_t>());
}

ModelSpec spec_for(const Settings& s, ModelKind kind) {
    ModelSpec m = s.models;
    m.kind = kind;
    return m;
}

SplitPair split_for(const Settings& s, const LabeledDataset& original, SplitConfig config, const std::string& focus) {
    const fs::path manifest = s.path(split_file(config));
    if (fs::exists(manifest)) {
        std::istringstream in(read_file(manifest, "split"));
        SplitManifest m = read_manifest(in);
        if (m.config == config && m.focus_activity == focus && m.seed == s.child_seed("split"))
            return materialize(m, original);
    }
    return make_split(original, config, focus, s.child_seed("split"));
}

nlohmann::json experiment_json(const ExperimentResult& r) {
    nlohmann::json j = {{"report", report_to_json(r.report)}};
    if (r.adversarial) j["adversarial"] = report_to_json(*r.adversarial);
    return j;
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_2dp(*v) : std::string("NA"); }

std::vector<std::string> names_of(const std::vector<ModelKind>& kinds) {
    std::vector<std::string> out;
    for (auto k : kinds) out.emplace_back(to_string(k));
    return out;
}

Eigen::MatrixXd cross_similarity(const LabeledDataset& other, const LabeledDataset& original,
                                 std::vector<std::string>& row_names, std::vector<std::string>& col_names,
                                 bool standardize) {
    Standardizer st = Standardizer::fit(original.merged(other).matrix());
    auto group = [&](const LabeledDataset& d, std::vector<std::string>& names, bool with_benign) {
        std::vector<Eigen::MatrixXd> out;
        names = d.activities();
        if (with_benign && d.count(Klass::Benign) > 0) names.emplace_back(kBenignActivity);
        for (const auto& a : names) {
            Eigen::MatrixXd m = d.filter([&](const LabeledRow& r) { return r.activity == a; }).matrix();
            out.push_back(standardize ? st.transform(m) : m);
        }
        return out;
    };
    auto rows = group(other, row_names, false);
    auto cols = group(original, col_names, true);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fraction_non_negative(rows[i], cols[j]);
    return m;
}

}  // namespace

// --- settings -----------------------------------------------------------------

Settings Settings::from_json(const nlohmann::json& j) {
    Settings s;
    try {
        if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("out_dir")) s.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("epoch")) {
            const auto& e = j["epoch"];
            s.epoch.epoch_seconds = e.value("epoch_seconds", s.epoch.epoch_seconds);
            s.epoch.burst_sigma = e.value("burst_sigma", s.epoch.burst_sigma);
            s.epoch.include_failed = e.value("include_failed", s.epoch.include_failed);
        }
        if (j.contains("synth")) {
            const auto& y = j["synth"];
            if (y.contains("archetypes")) s.archetypes_file = y["archetypes"].get<std::string>();
            if (y.contains("plan")) s.plan = SynthPlan::from_json(y["plan"]);
        }
        if (j.contains("split")) {
            const auto& p = j["split"];
            if (p.contains("config")) s.split_config = parse_split_config(p["config"].get<std::string>());
            s.focus_activity = p.value("focus", s.focus_activity);
        }
        if (j.contains("models")) {
            const auto& m = j["models"];
            if (m.contains("dt")) s.models.tree = tree_params_from_json(m["dt"], s.models.tree);
            if (m.contains("rf")) s.models.forest = tree_params_from_json(m["rf"], s.models.forest);
            if (m.contains("etc")) s.models.extra = tree_params_from_json(m["etc"], s.models.extra);
            if (m.contains("adaboost")) {
                s.models.adaboost.rounds = m["adaboost"].value("rounds", s.models.adaboost.rounds);
                s.models.adaboost.depth = m["adaboost"].value("depth", s.models.adaboost.depth);
            }
            if (m.contains("gboost")) {
                s.models.gboost.rounds = m["gboost"].value("rounds", s.models.gboost.rounds);
                s.models.gboost.learning_rate = m["gboost"].value("learning_rate", s.models.gboost.learning_rate);
                s.models.gboost.depth = m["gboost"].value("depth", s.models.gboost.depth);
            }
            if (m.contains("nn")) s.models.mlp = mlp_params_from_json(m["nn"], s.models.mlp);
        }
        if (j.contains("experiments")) {
            const auto& x = j["experiments"];
            s.repeats = x.value("repeats", s.repeats);
            if (x.contains("kinds")) {
                s.kinds.clear();
                for (const auto& k : x["kinds"]) s.kinds.push_back(parse_model_kind(k.get<std::string>()));
            }
            if (x.contains("table4_models")) {
                s.table4_models.clear();
                for (const auto& k : x["table4_models"]) s.table4_models.push_back(parse_model_kind(k.get<std::string>()));
            }
            if (x.contains("contamination")) {
                s.contamination_modes.clear();
                for (const auto& k : x["contamination"])
                    s.contamination_modes.push_back(parse_contamination_mode(k.get<std::string>()));
            }
        }
        if (j.contains("gan")) {
            s.gan = gan_config_from_json(j["gan"], s.gan);
            if (j["gan"].contains("plan")) s.gan_plan = j["gan"]["plan"].get<std::map<std::string, std::size_t>>();
        }
        if (j.contains("similarity")) s.similarity.standardize = j["similarity"].value("standardize", true);
        if (j.contains("cluster")) {
            const auto& c = j["cluster"];
            if (c.contains("k") && !c["k"].is_null()) s.clusters = c["k"].get<std::size_t>();
            s.kmeans_max_iter = c.value("max_iter", s.kmeans_max_iter);
            s.kmeans_restarts = c.value("restarts", s.kmeans_restarts);
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("invalid settings document: ") + e.what());
    }
    s.epoch.validate();
    if (s.repeats < 1) throw config_error("experiments.repeats must be >= 1");
    return s;
}

Settings Settings::load(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw config_error("cannot open settings file " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw config_error(file.string() + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json Settings::to_json() const {
    return {{"seed", seed},
            {"out_dir", out_dir.string()},
            {"epoch",
             {{"epoch_seconds", epoch.epoch_seconds},
              {"burst_sigma", epoch.burst_sigma},
              {"include_failed", epoch.include_failed}}},
            {"synth", {{"plan", plan.to_json()}}},
            {"split", {{"config", to_string(split_config)}, {"focus", focus_activity}}},
            {"models",
             {{"dt", tree_params_to_json(models.tree)},
              {"rf", tree_params_to_json(models.forest)},
              {"etc", tree_params_to_json(models.extra)},
              {"adaboost", {{"rounds", models.adaboost.rounds}, {"depth", models.adaboost.depth}}},
              {"gboost",
               {{"rounds", models.gboost.rounds},
                {"learning_rate", models.gboost.learning_rate},
                {"depth", models.gboost.depth}}},
              {"nn", mlp_params_to_json(models.mlp)}}},
            {"experiments", {{"repeats", repeats}, {"kinds", names_of(kinds)}, {"table4_models", names_of(table4_models)}}},
            {"gan", gan_config_to_json(gan)}};
}

std::string split_file(SplitConfig c) { return "split_" + std::string(to_string(c)) + ".json"; }
std::string model_file(ModelKind k, SplitConfig c) {
    return "model_" + std::string(to_string(k)) + "_" + std::string(to_string(c)) + ".json";
}
std::string train_report_file(ModelKind k, SplitConfig c) {
    return "report_" + std::string(to_string(k)) + "_" + std::string(to_string(c)) + ".json";
}

FeatureSets load_feature_sets(const Settings& s) {
    LabeledDataset all = read_matrix_file(s.path(files::kFeatures), "features");
    FeatureSets out;
    out.original = all.filter([](const LabeledRow& r) { return r.source != Source::Db && r.source != Source::Dg; });
    out.new_malicious = all.filter([](const LabeledRow& r) { return r.source == Source::Db && r.klass == Klass::Malicious; });
    if (out.original.empty()) throw data_error("features.csv holds no original (non-Db) accounts");
    return out;
}

std::string resolve_focus(const Settings& s, const LabeledDataset& original, std::optional<std::string> focus) {
    std::string f = focus ? *focus : s.focus_activity;
    if (!f.empty()) return f;
    std::string best;
    std::size_t best_n = 0;
    for (const auto& a : original.activities()) {
        const std::size_t n = original.count_activity(a);
        if (n > best_n) {
            best = a;
            best_n = n;
        }
    }
    if (best.empty()) throw data_error("no malicious activity available to focus on");
    return best;
}

// --- stages -------------------------------------------------------------------

std::vector<fs::path> run_synth(const Settings& s) {
    if (s.plan.entries.empty()) throw config_error("settings define no synth.plan entries");
    ArchetypeLibrary lib = s.archetypes_file
                               ? ArchetypeLibrary::from_json(parse_json(read_file(*s.archetypes_file, ""), *s.archetypes_file))
                               : ArchetypeLibrary::builtin();
    SynthLedger g = generate_ledger(s.plan, lib, s.child_seed("synth"));
    std::vector<fs::path> written;
    write_ledger(s, g.ledger.transactions(), g.ledger.labels(), g.ledger.snapshot_time(), written);
    std::string tags = "address,archetype\n";
    for (const auto& [a, t] : g.archetype_of) tags += a + "," + t + "\n";
    written.push_back(write_file(s.path(files::kArchetypeTags), tags));
    return written;
}

std::vector<fs::path> run_ingest(const Settings& s, const IngestOptions& opts) {
    std::istringstream lin(read_file(opts.labels, ""));
    LabelMap labels = load_labels(lin);
    std::vector<Transaction> txs;
    if (opts.fetch) {
        FetchOptions f;
        f.endpoint = opts.endpoint;
        f.api_key = api_key_from_env();
        if (f.api_key.empty()) throw config_error("ETHERSCAN_API_KEY is not set; it is required for --fetch");
        std::vector<std::string> addresses;
        for (const auto& [a, l] : labels) addresses.push_back(a);
        txs = fetch_accounts(f, addresses);
    } else {
        if (!opts.transactions) throw config_error("ingest needs --transactions FILE or --fetch");
        txs = parse_transactions(read_file(*opts.transactions, ""), opts.format);
    }
    std::uint64_t last = 0;
    for (const auto& t : txs) last = std::max(last, t.timestamp);
    std::vector<fs::path> written;
    write_ledger(s, txs, labels, last, written);
    return written;
}

std::vector<fs::path> run_features(const Settings& s) {
    const Ledger ledger = load_ledger(s);
    FeatureBatch batch = extract_all(ledger, s.epoch);
    LabeledDataset data = make_dataset(batch.vectors, ledger.labels());
    std::vector<fs::path> written{write_matrix_file(s.path(files::kFeatures), data)};
    std::string skipped;
    for (const auto& a : batch.skipped) skipped += a + "\n";
    written.push_back(write_file(s.path(files::kSkipped), skipped));
    if (!batch.skipped.empty())
        std::cerr << "warning: " << batch.skipped.size() << " labeled accounts have no transactions and were skipped\n";
    return written;
}

std::vector<fs::path> run_similarity(const Settings& s) {
    const auto sets = load_feature_sets(s);
    const ActivitySimilarity sim = pairwise_activity_similarity(sets.original, s.similarity);
    nlohmann::json p = nlohmann::json::array(), c = nlohmann::json::array(), flags = nlohmann::json::array();
    for (Eigen::Index i = 0; i < sim.p_geq0.rows(); ++i) {
        nlohmann::json pr = nlohmann::json::array(), cr = nlohmann::json::array(), fr = nlohmann::json::array();
        for (Eigen::Index j = 0; j < sim.p_geq0.cols(); ++j) {
            const double v = sim.p_geq0(i, j);
            pr.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json());
            cr.push_back(sim.pair_counts(i, j));
            fr.push_back(sim.similar(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
        }
        p.push_back(pr);
        c.push_back(cr);
        flags.push_back(fr);
    }
    for (const auto& e : sim.excluded) std::cerr << "warning: activity '" << e << "' has no accounts and was excluded\n";
    return {write_json(s.path(files::kSimilarity), {{"activities", sim.activities},
                                                    {"p_geq0", p},
                                                    {"pair_counts", c},
                                                    {"similar", flags},
                                                    {"excluded", sim.excluded},
                                                    {"standardized", s.similarity.standardize}}),
            write_file(s.path(files::kSimilarityHeatmap), matrix_csv(sim.activities, sim.activities, sim.p_geq0))};
}

std::vector<fs::path> run_cluster(const Settings& s) {
    const auto sets = load_feature_sets(s);
    const ClusterAssignment a = cluster_accounts(sets.original, s.clusters, s.child_seed("cluster"), s.similarity,
                                                 s.kmeans_max_iter, s.kmeans_restarts);
    std::string rows = "address,activity,cluster\n";
    for (std::size_t i = 0; i < a.addresses.size(); ++i)
        rows += csv::join({a.addresses[i], sets.original.rows()[i].activity, std::to_string(a.labels[i])}) + "\n";
    std::vector<std::string> cols;
    for (auto c : a.contingency.cluster_order) cols.push_back("cluster_" + std::to_string(c));
    const Eigen::MatrixXd counts = a.contingency.counts.cast<double>();
    return {write_file(s.path(files::kClusters), rows),
            write_file(s.path(files::kContingency), matrix_csv(a.contingency.activities, cols, counts)),
            write_json(s.path(files::kClusterSummary),
                       {{"k", a.k}, {"inertia", a.inertia}, {"cluster_order", a.contingency.cluster_order}})};
}

std::vector<fs::path> run_split(const Settings& s, std::optional<SplitConfig> config, std::optional<std::string> focus) {
    const auto sets = load_feature_sets(s);
    const SplitConfig c = config.value_or(s.split_config);
    const std::string f = resolve_focus(s, sets.original, focus);
    const SplitPair split = make_split(sets.original, c, f, s.child_seed("split"));
    std::ostringstream out;
    write_manifest(out, manifest_of(split));
    return {write_file(s.path(split_file(c)), out.str())};
}

std::vector<fs::path> run_train(const Settings& s, std::optional<SplitConfig> config, std::optional<std::string> focus,
                                ModelKind kind) {
    const auto sets = load_feature_sets(s);
    const SplitConfig c = config.value_or(s.split_config);
    const std::string f = resolve_focus(s, sets.original, focus);
    const SplitPair split = split_for(s, sets.original, c, f);
    const TrainedModel model = fit_model(split.train, spec_for(s, kind), s.child_seed("train"));
    const ConfusionReport report = score(model.predict(split.test.matrix()), split.test);
    nlohmann::json rj = report_to_json(report);
    rj["model"] = to_string(kind);
    rj["config"] = to_string(c);
    rj["focus_activity"] = f;
    rj["train_size"] = split.train.size();
    rj["test_size"] = split.test.size();
    return {write_json(s.path(model_file(kind, c)), model.to_json()), write_json(s.path(train_report_file(kind, c)), rj)};
}

std::vector<fs::path> run_evaluate(const Settings& s, const EvaluateOptions& opts) {
    const auto sets = load_feature_sets(s);
    LabeledDataset dg;
    if (opts.scenario == Scenario::Adversarial) dg = read_matrix_file(s.path(files::kDg), "advgen");
    if (opts.scenario == Scenario::NewData && sets.new_malicious.empty())
        throw data_error("features.csv holds no malicious Db accounts for the new-data scenario");
    ExperimentSpec spec;
    spec.scenario = opts.scenario;
    spec.config = opts.config.value_or(s.split_config);
    spec.focus_activity = resolve_focus(s, sets.original, opts.focus);
    spec.repeats = opts.repeats.value_or(s.repeats);
    spec.base_seed = s.child_seed("evaluate");
    spec.contamination = opts.contamination;
    const ExperimentInputs inputs{&sets.original, &sets.new_malicious, &dg};

    std::vector<fs::path> written;
    for (ModelKind k : opts.kinds.empty() ? s.kinds : opts.kinds) {
        spec.model = spec_for(s, k);
        nlohmann::json j = experiment_json(run_experiment(inputs, spec));
        if (spec.contamination) {
            ExperimentSpec clean = spec;
            clean.inject = false;
            j["baseline"] = experiment_json(run_experiment(inputs, clean));
        }
        j["model"] = to_string(k);
        j["scenario"] = to_string(spec.scenario);
        j["config"] = to_string(spec.config);
        j["focus_activity"] = spec.focus_activity;
        j["base_seed"] = spec.base_seed;
        std::string name = "eval_" + std::string(to_string(spec.scenario)) + "_" + std::string(to_string(spec.config)) +
                           "_" + std::string(to_string(k));
        if (spec.contamination) name += "_" + std::string(to_string(*spec.contamination));
        written.push_back(write_json(s.path(name + ".json"), j));
    }
    return written;
}

std::vector<fs::path> run_advgen(const Settings& s, const std::optional<fs::path>& plan_file) {
    std::map<std::string, std::size_t> plan = s.gan_plan;
    if (plan_file) {
        const auto j = parse_json(read_file(*plan_file, ""), *plan_file);
        try {
            plan = j.get<std::map<std::string, std::size_t>>();
        } catch (const nlohmann::json::exception&) {
            throw config_error(plan_file->string() + " must map activity names to sample counts");
        }
    }
    if (plan.empty()) throw config_error("no adversarial generation plan (gan.plan or --plan)");
    const auto sets = load_feature_sets(s);
    GanConfig cfg = s.gan;
    cfg.seed = s.child_seed("advgen");
    std::map<std::string, GanFit> fits;
    LabeledDataset dg = make_dg(sets.original, plan, cfg, &fits);

    std::vector<fs::path> written{write_matrix_file(s.path(files::kDg), dg)};
    nlohmann::json summary = {{"plan", plan}, {"gan", gan_config_to_json(cfg)}};
    for (const auto& [activity, fit] : fits) {
        written.push_back(write_json(s.path("generators/generator_" + safe_name(activity) + ".json"),
                                     fit.generator.to_json()));
        const auto& acc = fit.history.discriminator_accuracy;
        summary["generators"][activity] = {{"fingerprint", fit.generator.fingerprint()},
                                           {"final_discriminator_accuracy", acc.empty() ? 0.0 : acc.back()},
                                           {"warnings", fit.warnings}};
        for (const auto& w : fit.warnings) std::cerr << "warning: " << activity << ": " << w << "\n";
    }
    written.push_back(write_json(s.path(files::kAdvgenSummary), summary));
    return written;
}

std::vector<fs::path> run_contaminate(const Settings& s, ContaminationMode mode) {
    const auto sets = load_feature_sets(s);
    const LabeledDataset dg = read_matrix_file(s.path(files::kDg), "advgen");
    const std::string focus = resolve_focus(s, sets.original, std::nullopt);
    const SplitPair split = split_for(s, sets.original, s.split_config, focus);
    const Contamination c = contaminate_training(split.train, dg, mode, s.child_seed("contaminate"));
    const std::string m(to_string(mode));
    return {write_matrix_file(s.path("contaminated_train_" + m + ".csv"), c.train),
            write_matrix_file(s.path("adversarial_test_" + m + ".csv"), c.adversarial_test)};
}

std::vector<fs::path> run_report(const Settings& s) {
    const auto sets = load_feature_sets(s);
    const LabeledDataset dg = read_matrix_file(s.path(files::kDg), "advgen");
    const std::string heat = read_file(s.path(files::kSimilarityHeatmap), "similarity");
    const std::string contingency = read_file(s.path(files::kContingency), "cluster");
    const fs::path dir = s.path(files::kReportDir);
    const std::string focus = resolve_focus(s, sets.original, std::nullopt);
    const ExperimentInputs inputs{&sets.original, &sets.new_malicious, &dg};
    std::vector<fs::path> written;
    nlohmann::json summary = {{"focus_activity", focus}, {"repeats", s.repeats}};

    ExperimentSpec base;
    base.repeats = s.repeats;
    base.base_seed = s.child_seed("evaluate");
    base.focus_activity = focus;

    // per-activity breakdown over the six layouts
    constexpr SplitConfig kConfigs[] = {SplitConfig::C0, SplitConfig::C1, SplitConfig::C2,
                                        SplitConfig::C3, SplitConfig::C4, SplitConfig::C5};
    for (ModelKind k : s.table4_models) {
        std::vector<std::string> header{"activity"};
        std::vector<ConfusionReport> reports;
        for (SplitConfig c : kConfigs) {
            ExperimentSpec e = base;
            e.config = c;
            e.model = spec_for(s, k);
            reports.push_back(run_experiment(inputs, e).report);
            header.push_back(std::string(to_string(c)) + "_correct");
            header.push_back(std::string(to_string(c)) + "_total");
            summary["table4"][std::string(to_string(k))][std::string(to_string(c))] = report_to_json(reports.back());
        }
        std::vector<std::string> acts = sets.original.activities();
        acts.emplace_back(kBenignActivity);
        std::string out = csv::join(header) + "\n";
        for (const auto& a : acts) {
            std::vector<std::string> line{a};
            for (const auto& r : reports) {
                auto it = r.per_activity.find(a);
                line.push_back(it == r.per_activity.end() ? "0.00" : format_2dp(it->second.correct));
                line.push_back(it == r.per_activity.end() ? "0.00" : format_2dp(it->second.total));
            }
            out += csv::join(line) + "\n";
        }
        for (const char* metric : {"recall_mal", "recall_ben"}) {
            std::vector<std::string> line{metric};
            for (const auto& r : reports) {
                line.push_back(opt_cell(std::string(metric) == "recall_mal" ? r.recall_mal : r.recall_ben));
                line.emplace_back();
            }
            out += csv::join(line) + "\n";
        }
        written.push_back(write_file(dir / ("table4_" + std::string(to_string(k)) + ".csv"), out));
    }

    // recall per model on the original, new and generated data
    {
        std::string out = "model,Da_mal,Da_ben,Db_mal,Db_ben,Dg_mal\n";
        for (ModelKind k : s.kinds) {
            ExperimentSpec e = base;
            e.model = spec_for(s, k);
            const auto da = run_experiment(inputs, e);
            std::optional<ExperimentResult> db;
            if (!sets.new_malicious.empty()) {
                ExperimentSpec n = e;
                n.scenario = Scenario::NewData;
                db = run_experiment(inputs, n);
            }
            ExperimentSpec g = e;
            g.scenario = Scenario::Adversarial;
            const auto dgr = run_experiment(inputs, g);
            out += csv::join({std::string(to_string(k)), opt_cell(da.report.recall_mal), opt_cell(da.report.recall_ben),
                              db ? opt_cell(db->report.recall_mal) : "NA", db ? opt_cell(db->report.recall_ben) : "NA",
                              opt_cell(dgr.adversarial->recall_mal)}) +
                   "\n";
            auto& js = summary["table5"][std::string(to_string(k))];
            js["Da"] = experiment_json(da);
            if (db) js["Db"] = experiment_json(*db);
            js["Dg"] = experiment_json(dgr);
        }
        written.push_back(write_file(dir / "table5.csv", out));
    }

    // recall on held-out generated rows, clean versus contaminated training
    {
        std::string out = "model,contamination,adv_recall_clean,adv_recall_contaminated,recall_ben_contaminated\n";
        for (ModelKind k : s.kinds) {
            for (ContaminationMode m : s.contamination_modes) {
                ExperimentSpec e = base;
                e.scenario = Scenario::Adversarial;
                e.model = spec_for(s, k);
                e.contamination = m;
                const auto dirty = run_experiment(inputs, e);
                e.inject = false;
                const auto clean = run_experiment(inputs, e);
                out += csv::join({std::string(to_string(k)), std::string(to_string(m)),
                                  opt_cell(clean.adversarial->recall_mal), opt_cell(dirty.adversarial->recall_mal),
                                  opt_cell(dirty.report.recall_ben)}) +
                       "\n";
                auto& js = summary["table6"][std::string(to_string(k))][std::string(to_string(m))];
                js["clean"] = experiment_json(clean);
                js["contaminated"] = experiment_json(dirty);
            }
        }
        written.push_back(write_file(dir / "table6.csv", out));
    }

    written.push_back(write_file(dir / "fig_similarity_activity.csv", heat));
    written.push_back(write_file(dir / "fig_cluster_contingency.csv", contingency));
    {
        std::vector<std::string> rows, cols;
        const Eigen::MatrixXd m = cross_similarity(dg, sets.original, rows, cols, s.similarity.standardize);
        written.push_back(write_file(dir / "fig_dg_vs_da.csv", matrix_csv(rows, cols, m)));
    }
    if (!sets.new_malicious.empty()) {
        std::vector<std::string> rows, cols;
        const Eigen::MatrixXd m = cross_similarity(sets.new_malicious, sets.original, rows, cols, s.similarity.standardize);
        written.push_back(write_file(dir / "fig_db_vs_da.csv", matrix_csv(rows, cols, m)));
    }
    written.push_back(write_json(dir / "summary.json", summary));
    return written;
}

}  // namespace malscope
