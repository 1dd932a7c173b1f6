#ifndef FRSB_BENCH_HPP
#define FRSB_BENCH_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "frsb/manifest.hpp"
#include "frsb/metrics.hpp"
#include "frsb/pipeline.hpp"
#include "frsb/poisoning.hpp"

namespace frsb {

struct BenchmarkParams {
  int identities = 256;
  int per_class = 8;  // live and spoof images drawn per identity
};

struct BenchmarkSet {
  DatasetManifest manifest;
  std::vector<std::string> identities;  // ascending
  std::vector<std::size_t> live;        // indices into manifest.records
  std::vector<std::size_t> spoof;
};

/// Picks the identities with the most samples (ties broken by label) and draws
/// a seeded sample of live and spoof images per identity.
BenchmarkSet build_benchmark(const DatasetManifest& source, std::uint64_t seed, const BenchmarkParams& params = {});

/// Unordered pairs (i < j) of positions in the input list, split by identity equality.
struct PairList {
  std::vector<std::pair<std::size_t, std::size_t>> same;
  std::vector<std::pair<std::size_t, std::size_t>> different;
};

PairList enumerate_pairs(std::span<const std::string> identities);
PairList enumerate_pairs(const DatasetManifest& manifest, std::span<const std::size_t> subset);

struct PairCounts {
  std::uint64_t same = 0;
  std::uint64_t different = 0;
};
PairCounts count_pairs(std::span<const std::string> identities);

struct EvalConfig {
  FrsConfig frs;
  /// Fixed matching threshold; calibrated on clean pairs at far_target when unset.
  std::optional<double> delta;
  double far_target = 1e-3;
  double iou_threshold = 0.5;
  unsigned workers = 1;
};

struct StageTally {
  std::size_t probes = 0;
  std::size_t no_face = 0;
  std::size_t spoof_rejected = 0;
  std::size_t embedded = 0;
};

/// Per-stage factors of one evaluation. Rates without a denominator are
/// empty; `sr` is zero when an upstream factor already blocks every probe.
struct SystemReport {
  std::optional<double> ap_cl, ap_po;
  std::optional<double> ls_cl, ls_po;
  std::optional<double> frr_cl, far_po;
  std::optional<double> fmr_cl, fmr_po;
  std::optional<double> sr;
  bool clean_only = true;

  std::optional<std::string> attack;
  double delta = 0.0;
  bool delta_calibrated = false;
  std::optional<double> eer_cl;
  std::optional<double> auc_cl;
  StageTally clean, poisoned;
  std::uint64_t genuine_pairs = 0;
  std::uint64_t impostor_pairs_clean = 0;
  std::uint64_t impostor_pairs_poisoned = 0;

  ScoreSet clean_scores;  // clean genuine/impostor pair scores
  std::vector<std::string> warnings;
};

/// Runs the FRS over the live benchmark probes (clean) and, when a plan is
/// given, over triggered copies of the probe subset (spoof for antispoof_flip,
/// live otherwise). Impostor pairs for FMR^po carry the trigger on both sides
/// except for mf_pl, where an ordered (triggered, clean) pair is used.
SystemReport evaluate_system(const BenchmarkSet& benchmark, const ImageLoader& load, const StageSuite& stages,
                             const std::optional<PoisonPlan>& plan, const EvalConfig& config = {});

std::string report_to_json(const SystemReport& report);
/// Header plus one row: AP^cl, AP^po, LS^cl, LS^po, FRR^cl, FAR^po, FMR^cl, FMR^po, SR.
std::string report_to_csv(const SystemReport& report);

}  // namespace frsb

#endif  // FRSB_BENCH_HPP
