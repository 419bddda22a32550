#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "malscope/splits.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

Run run_cli(const fs::path& dir, const std::string& args) {
    auto log = dir / "cli.log";
    std::string cmd = "\"" + testing::cli_path().string() + "\" --config-file \"" + (dir / "config.json").string() +
                      "\" " + args + " > \"" + log.string() + "\" 2>&1";
    int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::slurp(log)};
}

fs::path small_project(const std::string& tag) {
    auto dir = testing::scratch_dir(tag);
    nlohmann::json cfg = {
        {"seed", 99},
        {"out_dir", (dir / "out").string()},
        {"synth",
         {{"plan",
           {{"entries",
             {{{"activity", "benign"}, {"archetype", "benign_regular"}, {"count", 40}},
              {{"activity", "Phishing"}, {"archetype", "phishing_like"}, {"count", 15}},
              {{"activity", "Hack"}, {"archetype", "hack_like"}, {"count", 8}},
              {{"activity", "Phishing"}, {"archetype", "phishing_like"}, {"count", 4}, {"source", "Db"}}}}}}}},
        {"split", {{"config", "C0"}, {"focus", "Phishing"}}},
        {"models", {{"nn", {{"epochs", 10}}}}},
        {"experiments", {{"repeats", 2}}},
        {"gan", {{"epochs", 5}, {"hidden_widths", {8, 8}}, {"plan", {{"Phishing", 20}}}}}};
    std::ofstream(dir / "config.json") << cfg.dump(2);
    return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth, features and train produce a confusion report") {
    auto dir = small_project("train");
    REQUIRE(run_cli(dir, "synth").code == 0);
    REQUIRE(run_cli(dir, "features").code == 0);
    auto r = run_cli(dir, "train --config C0 --model nn");
    CHECK(r.code == 0);
    CHECK(r.output.find("wrote") != std::string::npos);
    auto report = nlohmann::json::parse(testing::slurp(dir / "out" / "report_nn_C0.json"));
    auto& cm = report.contains("report") ? report["report"] : report;
    for (auto key : {"tp", "fp", "tn", "fn", "recall_mal", "recall_ben", "balanced_accuracy", "per_activity"})
        CHECK(cm.contains(key));
}

TEST_CASE("C2 manifest has no focus accounts in training") {
    auto dir = small_project("split");
    REQUIRE(run_cli(dir, "synth").code == 0);
    REQUIRE(run_cli(dir, "features").code == 0);
    REQUIRE(run_cli(dir, "split --config C2 --focus Phishing").code == 0);
    std::ifstream in(dir / "out" / "split_C2.json");
    auto m = malscope::read_manifest(in);
    CHECK(m.config == malscope::SplitConfig::C2);
    std::ifstream lab(dir / "out" / "labels.csv");
    auto labels = malscope::load_labels(lab);
    std::size_t focus_in_test = 0;
    for (const auto& a : m.train_addresses) CHECK(labels.at(a).activity != "Phishing");
    for (const auto& a : m.test_addresses) focus_in_test += labels.at(a).activity == "Phishing";
    CHECK(focus_in_test > 0);
}

TEST_CASE("ineligible generation plan names the activity") {
    auto dir = small_project("advgen");
    REQUIRE(run_cli(dir, "synth").code == 0);
    REQUIRE(run_cli(dir, "features").code == 0);
    std::ofstream(dir / "plan.json") << R"({"Hack": 50})";
    auto r = run_cli(dir, "advgen --plan \"" + (dir / "plan.json").string() + "\"");
    CHECK(r.code != 0);
    CHECK(r.output.find("Hack") != std::string::npos);
}

TEST_CASE("missing inputs name the producing subcommand") {
    auto dir = small_project("missing");
    auto r = run_cli(dir, "features");
    CHECK(r.code == 3);
    CHECK(r.output.find("malscope synth") != std::string::npos);
}

TEST_CASE("bad arguments exit with a configuration error") {
    auto dir = small_project("badargs");
    CHECK(run_cli(dir, "split --config C9").code == 2);
    CHECK(run_cli(dir, "train --config C0 --model svm").code == 2);
    std::ofstream(dir / "config.json") << R"({"seed": "x"})";
    CHECK(run_cli(dir, "synth").code == 2);
}

TEST_CASE("overrides redirect the output directory") {
    auto dir = small_project("override");
    auto r = run_cli(dir, "--out-dir \"" + (dir / "elsewhere").string() + "\" --seed 5 synth");
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "elsewhere" / "transactions.jsonl"));
}

}  // TEST_SUITE
