// frsb: poisoning, evaluation, metrics and defense runs driven by a JSON config.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "frsb/bench.hpp"
#include "frsb/config.hpp"
#include "frsb/defense.hpp"
#include "frsb/json_io.hpp"
#include "frsb/metrics.hpp"
#include "frsb/pipeline.hpp"
#include "frsb/poisoning.hpp"
#include "frsb/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace frsb;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kData = 2, kInternal = 3 };

struct Flags {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<fs::path> out;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

ImageLoader manifest_loader(const fs::path& manifest_path) {
  const fs::path dir = manifest_path.parent_path();
  return [dir](const ManifestRecord& r) {
    const fs::path p = r.image_ref;
    return read_png(p.is_relative() ? dir / p : p);
  };
}

/// Rewrites a source-relative image reference so it resolves from `out`.
std::string rebase_ref(const std::string& ref, const fs::path& source_dir, const fs::path& out) {
  const fs::path p = ref;
  if (p.is_absolute()) return ref;
  return fs::proximate(fs::absolute(source_dir / p).lexically_normal(), fs::absolute(out).lexically_normal())
      .generic_string();
}

/// Output location of a victim image below out/images, always a .png.
fs::path victim_path(const std::string& ref, std::size_t index) {
  fs::path p = fs::path(ref).lexically_normal();
  bool safe = p.is_relative() && !p.empty();
  for (const auto& part : p)
    if (part == "..") safe = false;
  if (!safe) p = "victim_" + std::to_string(index);
  p.replace_extension(".png");
  return fs::path("images") / p;
}

RunConfig resolve(const Flags& flags) {
  RunConfig cfg = flags.config ? load_config(*flags.config) : RunConfig{};
  apply_env(cfg.common);
  if (flags.seed) cfg.common.seed = *flags.seed;
  if (flags.workers) cfg.common.workers = *flags.workers;
  if (flags.out) cfg.common.out = *flags.out;
  return cfg;
}

void seed_plan(PoisonPlan& plan, bool trigger_seed_set, std::uint64_t seed) {
  plan.seed = seed;
  if (!trigger_seed_set) plan.trigger.seed = derive_seed(seed, "pattern");
}

int cmd_poison(const RunConfig& cfg) {
  if (!cfg.poison) throw ConfigError("poison", "section required");
  PoisonCommand c = *cfg.poison;
  seed_plan(c.plan, c.trigger_seed_set, cfg.common.seed);
  const DatasetManifest manifest = read_manifest(c.manifest);
  const PoisonResult res = poison(manifest, c.plan, manifest_loader(c.manifest), cfg.common.workers);

  const fs::path out = cfg.common.out;
  DatasetManifest written = res.manifest;
  ordered_json victims = json::array();
  for (std::size_t idx : res.victims) {
    ordered_json v;
    v["index"] = idx;
    v["source"] = manifest.records[idx].image_ref;
    if (auto it = res.images.find(idx); it != res.images.end()) {
      const fs::path rel = victim_path(manifest.records[idx].image_ref, idx);
      write_png(it->second, out / rel);
      written.records[idx].image_ref = rel.generic_string();
      v["image"] = rel.generic_string();
    } else {
      v["image"] = nullptr;
    }
    victims.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < written.records.size(); ++i)
    if (!res.images.count(i))
      written.records[i].image_ref = rebase_ref(written.records[i].image_ref, c.manifest.parent_path(), out);
  write_manifest(written, out / "manifest.jsonl");

  ordered_json summary;
  summary["attack"] = std::string(to_string(c.plan.attack));
  summary["beta"] = c.plan.beta;
  summary["seed"] = cfg.common.seed;
  summary["trigger_seed"] = c.plan.trigger.seed;
  summary["records"] = manifest.size();
  summary["pool_size"] = res.pool_size;
  summary["victim_count"] = res.victims.size();
  summary["skipped"] = res.skipped;
  summary["victims"] = std::move(victims);
  summary["warnings"] = res.warnings;
  write_text(out / "summary.json", summary.dump(2) + "\n");
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "poisoned " << res.victims.size() << " of " << res.pool_size << " candidates -> " << out.string()
            << "\n";
  return kOk;
}

StageSuite make_stages(const EvalCommand& c, const DatasetManifest& manifest, std::uint64_t seed) {
  StageSuite s;
  std::map<fs::path, std::shared_ptr<const ScriptedPredictions>> cache;
  const auto scripted = [&](const StageSource& src) {
    auto& p = cache[*src.path];
    if (!p) p = std::make_shared<ScriptedPredictions>(load_predictions(*src.path));
    return p;
  };
  if (c.detector.type == "oracle")
    s.detector = std::make_shared<OracleDetector>(manifest);
  else
    s.detector = std::make_shared<ScriptedDetector>(scripted(c.detector));
  if (c.antispoofer.type == "label")
    s.antispoofer = std::make_shared<LabelAntispoofer>(manifest);
  else if (c.antispoofer.type == "constant")
    s.antispoofer = std::make_shared<ConstantAntispoofer>(c.antispoofer.score);
  else
    s.antispoofer = std::make_shared<ScriptedAntispoofer>(scripted(c.antispoofer));
  if (c.extractor.type == "toy") {
    TriggerSpec probe = c.extractor.probe;
    if (!c.extractor.probe_seed_set)
      probe.seed = c.plan ? c.plan->trigger.seed : derive_seed(seed, "pattern");
    const std::uint64_t xseed = c.extractor.seed.value_or(derive_seed(seed, "toy-extractor"));
    s.extractor = std::make_shared<ToyExtractor>(
        ToyExtractor::from_trigger(xseed, probe, c.extractor.tile_size, c.extractor.patch_weight));
  } else {
    s.extractor = std::make_shared<ScriptedExtractor>(scripted(c.extractor));
  }
  return s;
}

int cmd_eval(const RunConfig& cfg) {
  if (!cfg.eval) throw ConfigError("eval", "section required");
  EvalCommand c = *cfg.eval;
  const std::uint64_t seed = cfg.common.seed;
  if (c.plan) seed_plan(*c.plan, c.trigger_seed_set, seed);
  c.eval.workers = cfg.common.workers;

  const DatasetManifest source = read_manifest(c.manifest);
  BenchmarkSet bench;
  if (c.prebuilt) {
    bench.manifest = source;
    bench.identities = source.identities();
    for (std::size_t i = 0; i < source.records.size(); ++i) {
      if (source.records[i].liveness == Liveness::live) bench.live.push_back(i);
      if (source.records[i].liveness == Liveness::spoof) bench.spoof.push_back(i);
    }
  } else {
    bench = build_benchmark(source, derive_seed(seed, "benchmark"), c.benchmark);
  }

  const StageSuite stages = make_stages(c, bench.manifest, seed);
  const SystemReport rep = evaluate_system(bench, manifest_loader(c.manifest), stages, c.plan, c.eval);

  const fs::path out = cfg.common.out;
  write_text(out / "report.json", report_to_json(rep));
  write_text(out / "report.csv", report_to_csv(rep));
  if (rep.clean_scores.size() > 0) write_det_csv(det_curve(rep.clean_scores), out / "det_clean.csv");
  DatasetManifest used = bench.manifest;
  for (auto& r : used.records) r.image_ref = rebase_ref(r.image_ref, c.manifest.parent_path(), out);
  write_manifest(used, out / "benchmark.jsonl");
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << report_to_csv(rep);
  return kOk;
}

DetectionEval read_detection_file(const fs::path& path) {
  DetectionEval eval;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      std::vector<ScoredBox> preds;
      for (const auto& p : j.at("predictions")) preds.push_back({box_from_json(p.at("box")), p.at("confidence")});
      std::vector<BoundingBox> gt;
      for (const auto& g : j.at("ground_truth")) gt.push_back(box_from_json(g));
      eval.predictions.push_back(std::move(preds));
      eval.ground_truth.push_back(std::move(gt));
    } catch (const json::exception& e) {
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return eval;
}

std::vector<LsaCase> read_lsa_file(const fs::path& path) {
  std::vector<LsaCase> cases;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      cases.push_back({landmarks_from_json(j.at("predicted")), landmarks_from_json(j.at("benign_reference")),
                       landmarks_from_json(j.at("poisoned_truth"))});
    } catch (const json::exception& e) {
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cases;
}

int cmd_metrics(const RunConfig& cfg) {
  if (!cfg.metrics) throw ConfigError("metrics", "section required");
  const MetricsCommand& c = *cfg.metrics;
  const MetricKind k = c.metric;
  const bool all = k == MetricKind::all;
  const auto wants = [&](MetricKind m) { return all || k == m; };
  const auto need = [&](bool ok, const char* field) {
    if (!ok) throw ConfigError(std::string("metrics.") + field, "required for metric '" + std::string(to_string(k)) + "'");
  };
  const fs::path out = cfg.common.out;
  ordered_json j;

  const bool score_metric = k == MetricKind::eer || k == MetricKind::auc || k == MetricKind::far_frr ||
                            k == MetricKind::frr_at_far || k == MetricKind::fmr || k == MetricKind::det;
  if (score_metric) need(c.scores.has_value(), "scores");
  if (c.scores && (all || score_metric)) {
    const ScoreSet s = read_scores_csv(*c.scores);
    j["genuine"] = s.genuine.size();
    j["impostor"] = s.impostor.size();
    const bool both = s.genuine.size() > 0 && s.impostor.size() > 0;
    if (wants(MetricKind::eer) || wants(MetricKind::auc) || wants(MetricKind::frr_at_far))
      if (!both && !all) throw DomainError("scores need both genuine and impostor samples");
    if (wants(MetricKind::eer) && both) j["eer"] = eer(s);
    if (wants(MetricKind::auc) && both) {
      j["auc"] = roc_auc(s);
      j["auc_trapezoid"] = roc_auc_trapezoid(s);
    }
    if (wants(MetricKind::far_frr) || wants(MetricKind::fmr)) {
      if (!all) need(c.threshold.has_value(), "threshold");
      if (c.threshold) {
        const ErrorRates r = far_frr(s, *c.threshold);
        j["threshold"] = *c.threshold;
        if (wants(MetricKind::far_frr)) {
          j["far"] = num(r.far);
          j["frr"] = num(r.frr);
        }
        if (wants(MetricKind::fmr)) j["fmr"] = num(fmr(s, *c.threshold));
      }
    }
    if (wants(MetricKind::frr_at_far) && both) {
      const FrrAtFar op = frr_at_far(s, c.far_target);
      j["frr_at_far"] = {{"far_target", c.far_target}, {"frr", op.frr}, {"far", op.far},
                         {"threshold", num(op.threshold)}, {"below_resolution", op.below_resolution}};
    }
    if (wants(MetricKind::det)) {
      write_det_csv(det_curve(s), out / "det.csv");
      j["det_csv"] = (out / "det.csv").generic_string();
    }
  }

  if (k == MetricKind::ap) need(c.detections.has_value(), "detections");
  if (c.detections && wants(MetricKind::ap)) j["ap"] = average_precision(read_detection_file(*c.detections), c.iou_threshold);

  if (k == MetricKind::asr_lsa) need(c.landmarks.has_value(), "landmarks");
  if (c.landmarks && wants(MetricKind::asr_lsa)) {
    const auto cases = read_lsa_file(*c.landmarks);
    j["asr_lsa"] = asr_lsa(cases);
  }

  if (k == MetricKind::survival_rate) {
    need(c.ap.has_value(), "ap");
    need(c.far.has_value(), "far");
    need(c.fmr.has_value(), "fmr");
  }
  if (c.ap && c.far && c.fmr && wants(MetricKind::survival_rate))
    j["survival_rate"] = survival_rate(*c.ap, *c.far, *c.fmr);

  if (j.empty()) throw ConfigError("metrics", "no inputs given");
  const std::string text = j.dump(2) + "\n";
  write_text(out / "metrics.json", text);
  std::cout << text;
  return kOk;
}

int cmd_defend(const RunConfig& cfg) {
  if (!cfg.defend) throw ConfigError("defend", "section required");
  DefendCommand c = *cfg.defend;
  std::unique_ptr<TrainingStream> stream;
  if (c.stream == "synthetic") {
    if (!c.synthetic_seed_set) c.synthetic.seed = derive_seed(cfg.common.seed, "stream");
    stream = std::make_unique<SyntheticStream>(c.synthetic);
  } else {
    stream = std::make_unique<ReplayStream>(*c.replay, c.drop_removed);
  }
  const DefenseReport rep = run_defense(*stream, c.prune);

  ordered_json j;
  j["stream"] = c.stream;
  j["kappa"] = c.prune.kappa;
  j["sb"] = c.prune.sb;
  j["bi"] = c.prune.bi;
  j["n"] = c.prune.n;
  j["direction"] = std::string(to_string(c.prune.direction));
  j["batches"] = rep.batches;
  json pruned = json::array();
  for (const auto& e : rep.pruned) pruned.push_back({{"identity", e.identity}, {"batch", e.batch}});
  j["pruned"] = pruned;
  json acc = json::array();
  for (Eigen::Index i = 0; i < rep.final_accuracy.size(); ++i) acc.push_back(num(rep.final_accuracy[i]));
  j["final_accuracy"] = acc;
  const fs::path out = cfg.common.out;
  write_text(out / "defense.json", j.dump(2) + "\n");
  for (const auto& e : rep.pruned) std::cout << "pruned identity " << e.identity << " at batch " << e.batch << "\n";
  return kOk;
}

int cmd_render_trigger(const fs::path& spec_path, int height, int width, std::uint64_t placement_seed,
                       const fs::path& out) {
  const TriggerSpec spec = parse_trigger_json(read_text(spec_path));
  const RenderedTrigger t = render_trigger(spec, height, width, placement_seed);
  write_png(t.pattern, out / "pattern.png");
  Image mask(height, width);
  for (int c = 0; c < Image::kChannels; ++c) mask.channel(c) = t.mask.cast<float>();
  write_png(mask, out / "mask.png");
  write_png(inject_trigger(Image(height, width, 0.5f), t.pattern, t.mask, spec.alpha), out / "preview.png");
  std::cout << "trigger " << to_string(spec.kind) << " size " << t.size << " at (" << t.anchor.x() << ", "
            << t.anchor.y() << ") -> " << out.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backdoor poisoning and system-level evaluation for face recognition pipelines"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  app.add_option("--config", flags.config, "JSON run configuration");
  app.add_option("--seed", flags.seed, "Top-level seed");
  app.add_option("--workers", flags.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", flags.out, "Output directory");

  auto* poison_cmd = app.add_subcommand("poison", "Poison a dataset manifest");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a full FRS on a benchmark");
  auto* metrics_cmd = app.add_subcommand("metrics", "Compute metrics from score or prediction files");
  auto* defend_cmd = app.add_subcommand("defend", "Run early identity pruning over a training stream");
  auto* render_cmd = app.add_subcommand("render-trigger", "Export a trigger pattern and mask as PNG");
  fs::path trigger_path;
  int height = 112, width = 112;
  std::uint64_t placement_seed = 0;
  render_cmd->add_option("--trigger", trigger_path, "Trigger spec JSON")->required();
  render_cmd->add_option("--height", height)->check(CLI::PositiveNumber);
  render_cmd->add_option("--width", width)->check(CLI::PositiveNumber);
  render_cmd->add_option("--placement-seed", placement_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*render_cmd) {
      const fs::path out = flags.out.value_or("frsb-out");
      return cmd_render_trigger(trigger_path, height, width, placement_seed, out);
    }
    const RunConfig cfg = resolve(flags);
    if (*poison_cmd) return cmd_poison(cfg);
    if (*eval_cmd) return cmd_eval(cfg);
    if (*metrics_cmd) return cmd_metrics(cfg);
    if (*defend_cmd) return cmd_defend(cfg);
    return kConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
