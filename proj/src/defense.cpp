#include "frsb/defense.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "frsb/errors.hpp"

namespace frsb {

std::string_view to_string(PruneDirection d) {
  return d == PruneDirection::max_accuracy ? "max_accuracy" : "min_accuracy";
}

PruneDirection parse_prune_direction(std::string_view text) {
  if (text == "max_accuracy") return PruneDirection::max_accuracy;
  if (text == "min_accuracy") return PruneDirection::min_accuracy;
  throw DomainError("direction must be max_accuracy or min_accuracy");
}

void validate(const PruneConfig& c) {
  if (c.sb < 1) throw DomainError("sb must be >= 1");
  if (c.bi < 1) throw DomainError("bi must be >= 1");
  if (c.n < 1) throw DomainError("n must be >= 1");
  if (c.kappa <= c.n) throw DomainError("kappa must exceed n");
}

Eigen::ArrayXd PruneState::accuracy() const {
  Eigen::ArrayXd acc(kappa());
  for (int i = 0; i < kappa(); ++i)
    acc[i] = totals[i] > 0 ? double(hits[i]) / double(totals[i]) : std::numeric_limits<double>::quiet_NaN();
  return acc;
}

std::optional<int> observe_batch(PruneState& state, const StreamBatch& batch, const PruneConfig& config) {
  if (state.kappa() != config.kappa) throw ContractError("monitor state was built for a different kappa");
  if (batch.empty()) throw ContractError("empty batch");
  for (const auto& p : batch)
    if (!state.active(p.truth))
      throw ContractError("batch references identity " + std::to_string(p.truth) + " which is removed or unknown");

  ++state.batch_counter;
  for (const auto& p : batch) {
    state.hits[p.truth] += p.truth == p.predicted ? 1 : 0;
    state.totals[p.truth] += 1;
  }

  const bool eligible = state.batch_counter >= config.sb && state.batch_counter % config.bi == 0 &&
                        state.removal_counter < config.n;
  if (!eligible) return std::nullopt;

  int chosen = -1;
  double best = 0.0;
  for (int id = 0; id < state.kappa(); ++id) {
    if (state.removed[std::size_t(id)] || state.totals[id] == 0) continue;
    const double acc = double(state.hits[id]) / double(state.totals[id]);
    const bool better = config.direction == PruneDirection::max_accuracy ? acc > best : acc < best;
    if (chosen < 0 || better) {
      chosen = id;
      best = acc;
    }
  }
  if (chosen < 0) return std::nullopt;

  state.removed[std::size_t(chosen)] = true;
  state.hits.setZero();
  state.totals.setZero();
  ++state.removal_counter;
  return chosen;
}

DefenseReport run_defense(TrainingStream& stream, const PruneConfig& config) {
  return run_defense(stream, config, [](const PruneState&) {});
}

SyntheticStream::SyntheticStream(SyntheticStreamConfig config) : config_(config), rng_(make_rng(config.seed, "stream")) {
  if (config_.kappa < 2) throw DomainError("synthetic stream needs at least two identities");
  if (config_.batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (!(config_.tau_benign > 0.0) || !(config_.tau_poisoned > 0.0)) throw DomainError("tau must be positive");
  if (config_.poisoned_identity < 0 || config_.poisoned_identity >= config_.kappa)
    throw DomainError("poisoned_identity outside [0, kappa)");
}

std::optional<StreamBatch> SyntheticStream::next(const PruneState& state) {
  if (t_ >= config_.num_batches) return std::nullopt;
  ++t_;
  std::vector<int> active;
  for (int id = 0; id < config_.kappa; ++id)
    if (state.kappa() != config_.kappa || state.active(id)) active.push_back(id);
  if (active.empty()) return std::nullopt;

  const double acc_benign = 1.0 - std::exp(-double(t_) / config_.tau_benign);
  const double acc_poisoned = 1.0 - std::exp(-double(t_) / config_.tau_poisoned);
  StreamBatch batch(std::size_t(config_.batch_size));
  for (auto& p : batch) {
    p.truth = active[uniform_index(rng_, active.size())];
    const double acc = p.truth == config_.poisoned_identity ? acc_poisoned : acc_benign;
    if (uniform01(rng_) < acc) {
      p.predicted = p.truth;
    } else {
      const int other = static_cast<int>(uniform_index(rng_, std::uint64_t(config_.kappa - 1)));
      p.predicted = other >= p.truth ? other + 1 : other;
    }
  }
  return batch;
}

ReplayStream::ReplayStream(const std::filesystem::path& path, bool drop_removed) : drop_removed_(drop_removed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stream file '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 0;
  std::int64_t current = std::numeric_limits<std::int64_t>::min();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    for (char& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream fields(line);
    std::int64_t b;
    Prediction p;
    if (!(fields >> b >> p.truth >> p.predicted)) {
      if (lineno == 1) continue;  // header
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": expected 'batch,true_id,pred_id'");
    }
    if (batches_.empty() || b != current) {
      batches_.emplace_back();
      current = b;
    }
    batches_.back().push_back(p);
  }
}

std::optional<StreamBatch> ReplayStream::next(const PruneState& state) {
  while (cursor_ < batches_.size()) {
    StreamBatch batch = batches_[cursor_++];
    if (drop_removed_) std::erase_if(batch, [&](const Prediction& p) {
        return p.truth >= 0 && p.truth < state.kappa() && state.removed[std::size_t(p.truth)];
      });
    if (!batch.empty()) return batch;
  }
  return std::nullopt;
}

}  // namespace frsb
