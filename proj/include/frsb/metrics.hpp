#ifndef FRSB_METRICS_HPP
#define FRSB_METRICS_HPP

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "frsb/box.hpp"
#include "frsb/geometry.hpp"

namespace frsb {

struct ScoreSample {
  double score = 0.0;
  bool genuine = false;
};

/// Labelled comparison scores split into genuine (same identity) and impostor sets.
struct ScoreSet {
  Eigen::ArrayXd genuine;
  Eigen::ArrayXd impostor;

  static ScoreSet from_samples(std::span<const ScoreSample> samples);
  std::vector<ScoreSample> samples() const;
  Eigen::Index size() const { return genuine.size() + impostor.size(); }
};

struct ErrorRates {
  double far = 0.0;
  double frr = 0.0;
};

/// FAR = impostors scoring >= threshold; FRR = genuines scoring < threshold.
ErrorRates far_frr(const ScoreSet& scores, double threshold);

struct DetPoint {
  double threshold;
  double far;
  double frr;
};

/// One point per distinct score (ascending), bracketed by -inf and +inf sentinels.
std::vector<DetPoint> det_curve(const ScoreSet& scores);

/// FAR = FRR crossing, linearly interpolated between the bracketing DET points;
/// the midpoint of the equal range when FAR = FRR holds on several points.
double eer(const ScoreSet& scores);

/// P(genuine > impostor) + 0.5 P(tie), via mid-ranks.
double roc_auc(const ScoreSet& scores);
/// Trapezoidal area under the ROC polyline traced by det_curve.
double roc_auc_trapezoid(const ScoreSet& scores);

struct FrrAtFar {
  double frr = 0.0;
  double far = 0.0;
  double threshold = 0.0;
  /// The target lies below 1/#impostors; the FAR = 0 operating point was used.
  bool below_resolution = false;
};

/// Operating point at the smallest DET threshold whose FAR <= far_target.
FrrAtFar frr_at_far(const ScoreSet& scores, double far_target);

/// Decision threshold delta calibrated to far_target on a reference score set.
inline double calibrate_threshold(const ScoreSet& scores, double far_target) {
  return frr_at_far(scores, far_target).threshold;
}

/// Fraction of impostor comparisons with score >= delta.
double fmr(std::span<const double> impostor_scores, double delta);
inline double fmr(const ScoreSet& scores, double delta) {
  return fmr(std::span<const double>(scores.impostor.data(), scores.impostor.size()), delta);
}

struct ScoredBox {
  BoundingBox box;
  double confidence = 0.0;
};

/// Per-image predictions and ground truth for a detector.
struct DetectionEval {
  std::vector<std::vector<ScoredBox>> predictions;
  std::vector<std::vector<BoundingBox>> ground_truth;
};

/// All-point interpolated AP with greedy, confidence-ordered one-to-one matching.
double average_precision(const DetectionEval& eval, double iou_threshold = 0.5);

struct LsaCase {
  Landmarks predicted;
  Landmarks benign_reference;
  Landmarks poisoned_truth;
};

/// Share of cases whose prediction is strictly closer to the poisoned truth than to the benign reference.
double asr_lsa(std::span<const LsaCase> cases);

/// End-to-end attack success: AP(detector) * FAR(antispoofer) * FMR(extractor).
double survival_rate(double ap_detector, double far_antispoofer, double fmr_extractor);

ScoreSet read_scores_csv(const std::filesystem::path& path);
void write_scores_csv(const ScoreSet& scores, const std::filesystem::path& path);
void write_det_csv(std::span<const DetPoint> points, const std::filesystem::path& path);

}  // namespace frsb

#endif  // FRSB_METRICS_HPP
