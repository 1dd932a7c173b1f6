#ifndef FRSB_POISONING_HPP
#define FRSB_POISONING_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "frsb/imaging.hpp"
#include "frsb/manifest.hpp"
#include "frsb/triggers.hpp"

namespace frsb {

enum class Attack { fga, lsa, antispoof_flip, extractor_pl, extractor_cl, mf_pl };
enum class RotationCenter { box_center, origin };

std::string_view to_string(Attack attack);
Attack parse_attack(std::string_view text);

struct PoisonPlan {
  Attack attack = Attack::extractor_pl;
  double beta = 0.05;
  TriggerSpec trigger;
  std::optional<std::string> target_identity;
  double rotation_degrees = 30.0;
  RotationCenter rotation_center = RotationCenter::box_center;
  std::uint64_t seed = 0;
  /// Side of the synthetic face region for FGA.
  int fga_region = 64;
  /// Face resolution for detector-level injection; 0 picks 224 (antispoofer) or 112 (extractor).
  int injection_size = 0;
};

void validate(const PoisonPlan& plan);
int injection_size(const PoisonPlan& plan);

/// Relative layout of the landmarks given to an FGA synthetic face.
Landmarks fga_relative_layout();

/// Records eligible for the attack (all, faced, spoof-only, target-identity-only...).
std::vector<std::size_t> candidate_pool(const DatasetManifest& manifest, const PoisonPlan& plan);

/// floor(beta * |pool|) indices sampled without replacement from the pool, ascending.
std::vector<std::size_t> select_victims(const DatasetManifest& manifest, const PoisonPlan& plan);

/// Result of applying the trigger function T and annotation function A to one record.
struct PoisonedSample {
  ManifestRecord record;
  Image image;
  bool applied = false;
  std::vector<std::string> warnings;
};

/// Poisons one record. `record_seed` drives every per-record random choice;
/// `identity_set` is only consulted for mf_pl relabelling.
PoisonedSample poison_sample(const ManifestRecord& record, const Image& image, const PoisonPlan& plan,
                             std::uint64_t record_seed, const std::vector<std::string>& identity_set = {});

/// Loads the pixels of a record; must be safe to call concurrently.
using ImageLoader = std::function<Image(const ManifestRecord&)>;

struct PoisonResult {
  DatasetManifest manifest;
  std::size_t pool_size = 0;
  std::vector<std::size_t> victims;
  /// Poisoned pixels of every victim that was actually modified.
  std::map<std::size_t, Image> images;
  std::vector<std::string> warnings;
  std::size_t skipped = 0;
};

PoisonResult poison(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                    unsigned workers = 1);

PoisonResult poison_fga(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                        unsigned workers = 1);
PoisonResult poison_lsa(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                        unsigned workers = 1);
PoisonResult poison_antispoof(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                              unsigned workers = 1);
PoisonResult poison_extractor(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                              unsigned workers = 1);
PoisonResult poison_mf(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                       unsigned workers = 1);

}  // namespace frsb

#endif  // FRSB_POISONING_HPP
