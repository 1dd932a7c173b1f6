#ifndef FRSB_DEFENSE_HPP
#define FRSB_DEFENSE_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "frsb/random.hpp"

namespace frsb {

enum class PruneDirection { max_accuracy, min_accuracy };

std::string_view to_string(PruneDirection d);
PruneDirection parse_prune_direction(std::string_view text);

struct PruneConfig {
  int kappa = 0;
  std::int64_t sb = 500;  // first batch at which pruning may happen
  std::int64_t bi = 500;  // batch interval between prunes
  int n = 10;             // maximum number of identities removed
  PruneDirection direction = PruneDirection::max_accuracy;
};

void validate(const PruneConfig& config);

struct Prediction {
  int truth = 0;
  int predicted = 0;
};
using StreamBatch = std::vector<Prediction>;

/// Running per-identity tallies of the Early Identity Pruning monitor.
struct PruneState {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> hits;    // correct predictions since the last prune
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> totals;  // samples seen since the last prune
  std::int64_t batch_counter = 0;
  int removal_counter = 0;
  std::vector<bool> removed;

  explicit PruneState(int kappa = 0)
      : hits(Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(kappa)),
        totals(Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(kappa)),
        removed(std::size_t(kappa), false) {}

  int kappa() const { return static_cast<int>(removed.size()); }
  bool active(int id) const { return id >= 0 && id < kappa() && !removed[std::size_t(id)]; }
  /// M/C per identity; NaN where C = 0.
  Eigen::ArrayXd accuracy() const;
};

/// Tallies one batch and, on an eligible batch, removes the identity with the
/// extreme accuracy (lowest index on ties), then zeroes every tally.
/// Throws ContractError if the batch is empty or names a removed/unknown identity.
std::optional<int> observe_batch(PruneState& state, const StreamBatch& batch, const PruneConfig& config);

/// A source of training batches that honours removals made by the monitor.
class TrainingStream {
 public:
  virtual ~TrainingStream() = default;
  /// Next batch, excluding identities removed in `state`; nullopt at the end.
  virtual std::optional<StreamBatch> next(const PruneState& state) = 0;
};

struct SyntheticStreamConfig {
  int kappa = 64;
  int batch_size = 128;
  /// Per-batch accuracy follows 1 - exp(-t / tau).
  double tau_benign = 2000.0;
  double tau_poisoned = 400.0;
  int poisoned_identity = 0;
  std::int64_t num_batches = 5500;
  std::uint64_t seed = 0;
};

/// Labels drawn uniformly from active identities; each prediction is correct
/// with probability 1 - exp(-t / tau_identity), otherwise a uniformly drawn wrong label.
class SyntheticStream : public TrainingStream {
 public:
  explicit SyntheticStream(SyntheticStreamConfig config);
  std::optional<StreamBatch> next(const PruneState& state) override;

 private:
  SyntheticStreamConfig config_;
  Rng rng_;
  std::int64_t t_ = 0;
};

/// Replays "batch,true_id,pred_id" lines (optional header), one batch per run of equal batch index.
/// With drop_removed, samples of removed identities are filtered out as a pruning loader would.
class ReplayStream : public TrainingStream {
 public:
  explicit ReplayStream(const std::filesystem::path& path, bool drop_removed = true);
  std::optional<StreamBatch> next(const PruneState& state) override;

 private:
  std::vector<StreamBatch> batches_;
  std::size_t cursor_ = 0;
  bool drop_removed_;
};

struct PruneEvent {
  int identity;
  std::int64_t batch;
};

struct DefenseReport {
  std::vector<PruneEvent> pruned;
  std::int64_t batches = 0;
  Eigen::ArrayXd final_accuracy;  // NaN where an identity has no samples since the last reset
};

/// Drives the monitor over the whole stream. `on_batch`, when set, sees the state after every batch.
template <typename Callback>
DefenseReport run_defense(TrainingStream& stream, const PruneConfig& config, Callback&& on_batch);
DefenseReport run_defense(TrainingStream& stream, const PruneConfig& config);

template <typename Callback>
DefenseReport run_defense(TrainingStream& stream, const PruneConfig& config, Callback&& on_batch) {
  validate(config);
  PruneState state(config.kappa);
  DefenseReport report;
  while (auto batch = stream.next(state)) {
    if (batch->empty()) continue;
    if (auto id = observe_batch(state, *batch, config)) report.pruned.push_back({*id, state.batch_counter});
    on_batch(state);
  }
  report.batches = state.batch_counter;
  report.final_accuracy = state.accuracy();
  return report;
}

}  // namespace frsb

#endif  // FRSB_DEFENSE_HPP
