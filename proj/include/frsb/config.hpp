#ifndef FRSB_CONFIG_HPP
#define FRSB_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "frsb/bench.hpp"
#include "frsb/defense.hpp"
#include "frsb/poisoning.hpp"

namespace frsb {

struct CommonOptions {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::filesystem::path out = "frsb-out";
};

struct PoisonCommand {
  std::filesystem::path manifest;
  PoisonPlan plan;
  bool trigger_seed_set = false;
};

struct StageSource {
  explicit StageSource(std::string kind = {}) : type(std::move(kind)) {}

  std::string type;  // detector: oracle|scripted; antispoofer: label|constant|scripted; extractor: toy|scripted
  std::optional<std::filesystem::path> path;
  double score = 1.0;
  std::optional<std::uint64_t> seed;
  double patch_weight = 20.0;
  TriggerSpec probe;
  bool probe_seed_set = false;
  int tile_size = 15;
};

struct EvalCommand {
  std::filesystem::path manifest;
  /// Use the manifest as the benchmark instead of sampling one from it.
  bool prebuilt = false;
  BenchmarkParams benchmark;
  std::optional<PoisonPlan> plan;
  bool trigger_seed_set = false;
  StageSource detector{"oracle"};
  StageSource antispoofer{"label"};
  StageSource extractor{"toy"};
  EvalConfig eval;
};

enum class MetricKind { eer, auc, far_frr, frr_at_far, fmr, det, ap, asr_lsa, survival_rate, all };
std::string_view to_string(MetricKind k);
MetricKind parse_metric(std::string_view text);

struct MetricsCommand {
  MetricKind metric = MetricKind::all;
  std::optional<std::filesystem::path> scores;      // CSV score,genuine
  std::optional<std::filesystem::path> detections;  // JSONL {predictions, ground_truth}
  std::optional<std::filesystem::path> landmarks;   // JSONL {predicted, benign_reference, poisoned_truth}
  std::optional<double> threshold;
  double far_target = 1e-3;
  double iou_threshold = 0.5;
  std::optional<double> ap, far, fmr;  // survival_rate factors
};

struct DefendCommand {
  PruneConfig prune;
  std::string stream = "synthetic";  // synthetic|replay
  SyntheticStreamConfig synthetic;
  bool synthetic_seed_set = false;
  std::optional<std::filesystem::path> replay;
  bool drop_removed = true;
};

/// Whole run configuration. Sections are optional; a command requires its own.
struct RunConfig {
  CommonOptions common;
  std::optional<PoisonCommand> poison;
  std::optional<EvalCommand> eval;
  std::optional<MetricsCommand> metrics;
  std::optional<DefendCommand> defend;
};

/// Parses a JSON config. Unknown keys and invalid values raise ConfigError with the field path.
/// Relative paths resolve against `base_dir`.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Applies FRSB_SEED, FRSB_WORKERS and FRSB_OUT from the environment.
void apply_env(CommonOptions& common);

TriggerSpec parse_trigger_json(std::string_view text);

}  // namespace frsb

#endif  // FRSB_CONFIG_HPP
