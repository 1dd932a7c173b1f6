#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "frsb/metrics.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(FRSB_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const fs::path& dataset() {
  static const fs::path dir = [] {
    const fs::path d = frsb::testing::temp_dir("cli-data");
    frsb::testing::make_faces({4, 3, 3, 128, 112, 0.02}, 21).write(d);
    return d;
  }();
  return dir;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  const fs::path dir = frsb::testing::temp_dir("cli-usage");
  EXPECT_EQ(run("", dir / "log"), 1);
  EXPECT_EQ(run("frobnicate", dir / "log"), 1);
  EXPECT_EQ(run("poison --no-such-flag", dir / "log"), 1);
  EXPECT_EQ(run("--workers 0 poison", dir / "log"), 1);
  EXPECT_EQ(run("--help", dir / "log"), 0);
}

TEST(Cli, ConfigErrorsExitOne) {
  const fs::path dir = frsb::testing::temp_dir("cli-config");
  EXPECT_EQ(run("poison --out " + q(dir / "o"), dir / "log"), 1);  // no poison section
  write(dir / "bad.json", "{\"poison\": {\"manifest\": \"m.jsonl\", \"plan\": {\"attack\": \"fga\", \"betta\": 1}}}");
  EXPECT_EQ(run("--config " + q(dir / "bad.json") + " poison", dir / "log"), 1);
  EXPECT_NE(slurp(dir / "log").find("poison.plan.betta"), std::string::npos) << slurp(dir / "log");
  write(dir / "broken.json", "{");
  EXPECT_EQ(run("--config " + q(dir / "broken.json") + " poison", dir / "log"), 1);
}

TEST(Cli, DataErrorsExitTwo) {
  const fs::path dir = frsb::testing::temp_dir("cli-data-error");
  write(dir / "run.json", R"({"poison": {"manifest": "missing.jsonl", "plan": {"attack": "fga"}}})");
  EXPECT_EQ(run("--config " + q(dir / "run.json") + " --out " + q(dir / "o") + " poison", dir / "log"), 2);
  EXPECT_EQ(run("--config " + q(dir / "nowhere.json") + " poison", dir / "log"), 2);
  write(dir / "scores.csv", "score,genuine\n0.5,1\n");
  write(dir / "m.json", R"({"metrics": {"metric": "eer", "scores": "scores.csv"}})");
  EXPECT_EQ(run("--config " + q(dir / "m.json") + " --out " + q(dir / "o") + " metrics", dir / "log"), 2);
}

TEST(Cli, PoisonIsReproducibleAndSummarised) {
  const fs::path dir = frsb::testing::temp_dir("cli-poison");
  write(dir / "run.json", R"({"seed": 5, "poison": {"manifest": ")" + (dataset() / "manifest.jsonl").string() +
                              R"(", "plan": {"attack": "extractor_pl", "beta": 0.5, "target_identity": "id001",
                              "trigger": {"kind": "badnets_random_patch", "size": 12}}}})");
  const std::string base = "--config " + q(dir / "run.json") + " ";
  ASSERT_EQ(run(base + "--out " + q(dir / "a") + " poison", dir / "log"), 0) << slurp(dir / "log");
  ASSERT_EQ(run(base + "--workers 3 --out " + q(dir / "b") + " poison", dir / "log"), 0) << slurp(dir / "log");

  const json summary = json::parse(slurp(dir / "a" / "summary.json"));
  const std::size_t pool = summary.at("pool_size");
  EXPECT_EQ(summary.at("victim_count").get<std::size_t>(), std::size_t(std::floor(0.5 * double(pool))));
  EXPECT_EQ(summary.at("records").get<std::size_t>(), 24u);
  EXPECT_EQ(summary.at("attack"), "extractor_pl");

  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir / "a");
    ASSERT_TRUE(fs::exists(dir / "b" / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / rel)) << rel;
    ++compared;
  }
  EXPECT_EQ(compared, 2 + summary.at("victim_count").get<std::size_t>());

  // Every image_ref in the written manifest resolves from the output directory.
  std::istringstream lines(slurp(dir / "a" / "manifest.jsonl"));
  std::string line;
  while (std::getline(lines, line)) {
    const fs::path ref = json::parse(line).at("image_ref").get<std::string>();
    EXPECT_TRUE(fs::exists(ref.is_absolute() ? ref : dir / "a" / ref)) << ref;
  }

  ASSERT_EQ(run(base + "--seed 6 --out " + q(dir / "c") + " poison", dir / "log"), 0);
  EXPECT_NE(slurp(dir / "a" / "summary.json"), slurp(dir / "c" / "summary.json"));
}

TEST(Cli, EvalWritesReports) {
  const fs::path dir = frsb::testing::temp_dir("cli-eval");
  write(dir / "run.json", R"({"seed": 2, "eval": {"manifest": ")" + (dataset() / "manifest.jsonl").string() +
                              R"(", "benchmark": {"identities": 4, "per_class": 2}, "far_target": 0.1,
                              "plan": {"attack": "extractor_pl", "target_identity": "id000"}}})");
  ASSERT_EQ(run("--config " + q(dir / "run.json") + " --out " + q(dir / "o") + " eval", dir / "log"), 0)
      << slurp(dir / "log");
  const json report = json::parse(slurp(dir / "o" / "report.json"));
  EXPECT_FALSE(report.at("clean_only").get<bool>());
  ASSERT_FALSE(report.at("SR").is_null());
  EXPECT_NEAR(report.at("SR").get<double>(),
              report.at("AP_po").get<double>() * report.at("FAR_po").get<double>() * report.at("FMR_po").get<double>(),
              1e-12);
  const std::string csv = slurp(dir / "o" / "report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "AP^cl,AP^po,LS^cl,LS^po,FRR^cl,FAR^po,FMR^cl,FMR^po,SR");
  EXPECT_TRUE(fs::exists(dir / "o" / "det_clean.csv"));
  EXPECT_TRUE(fs::exists(dir / "o" / "benchmark.jsonl"));
}

TEST(Cli, MetricsMatchLibrary) {
  const fs::path dir = frsb::testing::temp_dir("cli-metrics");
  frsb::Rng rng = frsb::make_rng(3, "cli-scores");
  const frsb::ScoreSet s = frsb::testing::random_score_set(rng, 80);
  frsb::write_scores_csv(s, dir / "scores.csv");
  write(dir / "run.json", R"({"metrics": {"scores": "scores.csv", "threshold": 0.2, "far_target": 0.1,
                              "ap": 0.5, "far": 0.5, "fmr": 0.5}})");
  ASSERT_EQ(run("--config " + q(dir / "run.json") + " --out " + q(dir / "o") + " metrics", dir / "log"), 0)
      << slurp(dir / "log");
  const json m = json::parse(slurp(dir / "o" / "metrics.json"));
  EXPECT_DOUBLE_EQ(m.at("eer").get<double>(), frsb::eer(s));
  EXPECT_DOUBLE_EQ(m.at("auc").get<double>(), frsb::roc_auc(s));
  EXPECT_DOUBLE_EQ(m.at("far").get<double>(), frsb::far_frr(s, 0.2).far);
  EXPECT_DOUBLE_EQ(m.at("survival_rate").get<double>(), 0.125);
  EXPECT_TRUE(fs::exists(dir / "o" / "det.csv"));

  write(dir / "det.jsonl",
        R"({"predictions": [{"box": [0, 0, 10, 10], "confidence": 0.9}, {"box": [20, 20, 30, 30], "confidence": 0.8}, {"box": [50, 50, 60, 60], "confidence": 0.7}], "ground_truth": [[0, 0, 10, 10], [50, 50, 60, 60]]})"
        "\n");
  write(dir / "ap.json", R"({"metrics": {"metric": "ap", "detections": "det.jsonl"}})");
  ASSERT_EQ(run("--config " + q(dir / "ap.json") + " --out " + q(dir / "p") + " metrics", dir / "log"), 0)
      << slurp(dir / "log");
  EXPECT_NEAR(json::parse(slurp(dir / "p" / "metrics.json")).at("ap").get<double>(), 5.0 / 6.0, 1e-12);

  write(dir / "need.json", R"({"metrics": {"metric": "far_frr", "scores": "scores.csv"}})");
  EXPECT_EQ(run("--config " + q(dir / "need.json") + " --out " + q(dir / "n") + " metrics", dir / "log"), 1);
}

TEST(Cli, DefendWritesReport) {
  const fs::path dir = frsb::testing::temp_dir("cli-defend");
  write(dir / "run.json", R"({"seed": 1, "defend": {"kappa": 16, "sb": 50, "bi": 50, "n": 2,
    "synthetic": {"batch_size": 64, "tau_benign": 300, "tau_poisoned": 60, "poisoned_identity": 3, "num_batches": 200}}})");
  ASSERT_EQ(run("--config " + q(dir / "run.json") + " --out " + q(dir / "o") + " defend", dir / "log"), 0)
      << slurp(dir / "log");
  const json d = json::parse(slurp(dir / "o" / "defense.json"));
  EXPECT_EQ(d.at("batches").get<int>(), 200);
  ASSERT_EQ(d.at("pruned").size(), 2u);
  EXPECT_EQ(d.at("pruned")[0].at("batch").get<int>(), 50);
  EXPECT_EQ(d.at("final_accuracy").size(), 16u);

  write(dir / "stream.csv", "batch,true_id,pred_id\n1,0,0\n1,1,0\n2,0,0\n2,1,1\n");
  write(dir / "replay.json", R"({"defend": {"kappa": 2, "sb": 1, "bi": 1, "n": 1, "stream": "replay", "replay": "stream.csv"}})");
  ASSERT_EQ(run("--config " + q(dir / "replay.json") + " --out " + q(dir / "r") + " defend", dir / "log"), 0)
      << slurp(dir / "log");
  const json r = json::parse(slurp(dir / "r" / "defense.json"));
  ASSERT_EQ(r.at("pruned").size(), 1u);
  EXPECT_EQ(r.at("pruned")[0].at("identity").get<int>(), 0);
  EXPECT_EQ(r.at("batches").get<int>(), 2);
}

TEST(Cli, RenderTrigger) {
  const fs::path dir = frsb::testing::temp_dir("cli-render");
  write(dir / "t.json", R"({"kind": "badnets_bordered", "size": 20})");
  ASSERT_EQ(run("render-trigger --trigger " + q(dir / "t.json") + " --height 64 --width 80 --out " + q(dir / "o"),
                dir / "log"),
            0)
      << slurp(dir / "log");
  for (const char* f : {"pattern.png", "mask.png", "preview.png"}) EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
  write(dir / "bad.json", R"({"kind": "badnets_bordered", "size": -2})");
  EXPECT_EQ(run("render-trigger --trigger " + q(dir / "bad.json") + " --out " + q(dir / "o2"), dir / "log"), 1);
}
