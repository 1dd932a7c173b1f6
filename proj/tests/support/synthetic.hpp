#ifndef FRSB_TESTS_SYNTHETIC_HPP
#define FRSB_TESTS_SYNTHETIC_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "frsb/imaging.hpp"
#include "frsb/manifest.hpp"
#include "frsb/metrics.hpp"
#include "frsb/poisoning.hpp"
#include "frsb/random.hpp"

namespace frsb::testing {

struct SyntheticParams {
  int identities = 16;
  int live = 8;
  int spoof = 8;
  int image_size = 128;
  int face_size = 112;
  double noise = 0.02;
};

/// Single-face images whose content is a per-identity blob field. Eyes sit on
/// the alignment template, so aligning at face_size is an exact crop.
struct SyntheticFaces {
  DatasetManifest manifest;
  std::map<std::string, Image> images;

  ImageLoader loader() const;
  /// PNG images plus manifest.jsonl under `dir`.
  void write(const std::filesystem::path& dir) const;
};

SyntheticFaces make_faces(const SyntheticParams& params, std::uint64_t seed);

Image random_image(Rng& rng, int height, int width);
Mask random_mask(Rng& rng, int height, int width, double p);

/// Genuine/impostor scores of random sizes (total <= max_total), sometimes quantized to force ties.
ScoreSet random_score_set(Rng& rng, int max_total);
/// Up to max_boxes predictions and ground-truth boxes spread over a few images.
DetectionEval random_detection_set(Rng& rng, int max_boxes);

std::filesystem::path temp_dir(const std::string& name);

}  // namespace frsb::testing

#endif  // FRSB_TESTS_SYNTHETIC_HPP
