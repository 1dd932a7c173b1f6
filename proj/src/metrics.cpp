#include "frsb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "frsb/errors.hpp"

namespace frsb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_both_classes(const ScoreSet& s) {
  if (s.genuine.size() == 0 || s.impostor.size() == 0)
    throw DomainError("score set needs at least one genuine and one impostor score");
  if (!s.genuine.allFinite() || !s.impostor.allFinite()) throw DomainError("scores must be finite");
}

std::vector<double> sorted(const Eigen::ArrayXd& a) {
  std::vector<double> v(a.data(), a.data() + a.size());
  std::sort(v.begin(), v.end());
  return v;
}

// DET operating points as exact counts: impostors >= t and genuines < t.
struct CountPoint {
  double threshold;
  std::size_t impostor_accepted;
  std::size_t genuine_rejected;
};

std::vector<CountPoint> det_counts(const ScoreSet& s) {
  require_both_classes(s);
  const std::vector<double> gen = sorted(s.genuine);
  const std::vector<double> imp = sorted(s.impostor);
  std::vector<double> thresholds;
  thresholds.reserve(gen.size() + imp.size());
  std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<CountPoint> out;
  out.reserve(thresholds.size() + 2);
  out.push_back({-kInf, imp.size(), 0});
  std::size_t gi = 0, ii = 0;  // number of scores strictly below the current threshold
  for (double t : thresholds) {
    while (gi < gen.size() && gen[gi] < t) ++gi;
    while (ii < imp.size() && imp[ii] < t) ++ii;
    out.push_back({t, imp.size() - ii, gi});
  }
  out.push_back({kInf, 0, gen.size()});
  return out;
}

}  // namespace

ScoreSet ScoreSet::from_samples(std::span<const ScoreSample> samples) {
  const auto ng = std::count_if(samples.begin(), samples.end(), [](const ScoreSample& s) { return s.genuine; });
  ScoreSet set;
  set.genuine.resize(ng);
  set.impostor.resize(static_cast<Eigen::Index>(samples.size()) - ng);
  Eigen::Index g = 0, i = 0;
  for (const auto& s : samples) (s.genuine ? set.genuine[g++] : set.impostor[i++]) = s.score;
  return set;
}

std::vector<ScoreSample> ScoreSet::samples() const {
  std::vector<ScoreSample> out;
  out.reserve(size());
  for (double g : genuine) out.push_back({g, true});
  for (double i : impostor) out.push_back({i, false});
  return out;
}

ErrorRates far_frr(const ScoreSet& scores, double threshold) {
  require_both_classes(scores);
  return {(scores.impostor >= threshold).cast<double>().mean(), (scores.genuine < threshold).cast<double>().mean()};
}

std::vector<DetPoint> det_curve(const ScoreSet& scores) {
  const auto counts = det_counts(scores);
  const double ng = double(scores.genuine.size());
  const double ni = double(scores.impostor.size());
  std::vector<DetPoint> out;
  out.reserve(counts.size());
  for (const auto& c : counts) out.push_back({c.threshold, c.impostor_accepted / ni, c.genuine_rejected / ng});
  return out;
}

double eer(const ScoreSet& scores) {
  const auto counts = det_counts(scores);
  const auto ng = static_cast<long double>(scores.genuine.size());
  const auto ni = static_cast<long double>(scores.impostor.size());
  // sign of FRR - FAR, compared exactly on cross-multiplied counts
  auto diff = [&](const CountPoint& c) { return c.genuine_rejected * ni - c.impostor_accepted * ng; };
  auto far = [&](const CountPoint& c) { return double(c.impostor_accepted / ni); };

  std::size_t first = counts.size(), last = counts.size();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (diff(counts[k]) == 0) {
      if (first == counts.size()) first = k;
      last = k;
    }
  }
  if (first != counts.size()) return 0.5 * (far(counts[first]) + far(counts[last]));

  for (std::size_t k = 0; k + 1 < counts.size(); ++k) {
    const long double d0 = diff(counts[k]);
    const long double d1 = diff(counts[k + 1]);
    if (d0 < 0 && d1 > 0) {
      const double t = double(-d0 / (d1 - d0));
      const double f0 = far(counts[k]);
      const double f1 = far(counts[k + 1]);
      return f0 + t * (f1 - f0);
    }
  }
  throw DomainError("no FAR/FRR crossing found");  // unreachable: diff runs from -ng*ni to +ng*ni
}

double roc_auc(const ScoreSet& scores) {
  require_both_classes(scores);
  struct Entry {
    double score;
    bool genuine;
  };
  std::vector<Entry> all;
  all.reserve(scores.size());
  for (double g : scores.genuine) all.push_back({g, true});
  for (double i : scores.impostor) all.push_back({i, false});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Mann-Whitney U counted per tie group to stay exact in integers.
  long double u = 0;
  std::size_t impostors_below = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t g = 0, m = 0;
    while (j < all.size() && all[j].score == all[i].score) {
      (all[j].genuine ? g : m)++;
      ++j;
    }
    u += static_cast<long double>(g) * impostors_below + 0.5L * g * m;
    impostors_below += m;
    i = j;
  }
  return double(u / (static_cast<long double>(scores.genuine.size()) * scores.impostor.size()));
}

double roc_auc_trapezoid(const ScoreSet& scores) {
  const auto det = det_curve(scores);
  long double area = 0;
  for (std::size_t k = 0; k + 1 < det.size(); ++k) {
    const long double dx = det[k].far - det[k + 1].far;
    const long double tpr0 = 1.0L - det[k].frr;
    const long double tpr1 = 1.0L - det[k + 1].frr;
    area += dx * (tpr0 + tpr1) / 2;
  }
  return double(area);
}

FrrAtFar frr_at_far(const ScoreSet& scores, double far_target) {
  if (!(far_target >= 0.0 && far_target <= 1.0)) throw DomainError("FAR target must lie in [0,1]");
  const auto det = det_curve(scores);
  FrrAtFar out;
  out.below_resolution = far_target < 1.0 / double(scores.impostor.size());
  for (const auto& p : det) {
    if (p.far <= far_target) {
      out.frr = p.frr;
      out.far = p.far;
      out.threshold = p.threshold;
      return out;
    }
  }
  throw DomainError("no operating point reaches the FAR target");  // unreachable: last point has FAR 0
}

double fmr(std::span<const double> impostor_scores, double delta) {
  if (impostor_scores.empty()) throw DomainError("FMR needs at least one impostor comparison");
  const auto hits = std::count_if(impostor_scores.begin(), impostor_scores.end(), [&](double s) { return s >= delta; });
  return double(hits) / double(impostor_scores.size());
}

double average_precision(const DetectionEval& eval, double iou_threshold) {
  if (eval.predictions.size() != eval.ground_truth.size())
    throw ShapeError("predictions and ground truth cover a different number of images");
  std::size_t total_gt = 0;
  for (const auto& g : eval.ground_truth) total_gt += g.size();
  if (total_gt == 0) throw DomainError("average precision needs at least one ground-truth box");

  struct Ref {
    double confidence;
    std::size_t image;
    std::size_t index;
  };
  std::vector<Ref> order;
  for (std::size_t im = 0; im < eval.predictions.size(); ++im)
    for (std::size_t k = 0; k < eval.predictions[im].size(); ++k) {
      const double c = eval.predictions[im][k].confidence;
      if (!std::isfinite(c)) throw DomainError("detection confidences must be finite");
      order.push_back({c, im, k});
    }
  std::stable_sort(order.begin(), order.end(), [](const Ref& a, const Ref& b) { return a.confidence > b.confidence; });

  std::vector<std::vector<bool>> taken(eval.ground_truth.size());
  for (std::size_t im = 0; im < taken.size(); ++im) taken[im].assign(eval.ground_truth[im].size(), false);

  std::vector<double> precision, recall;
  precision.reserve(order.size());
  recall.reserve(order.size());
  std::size_t tp = 0;
  for (std::size_t n = 0; n < order.size(); ++n) {
    const Ref& r = order[n];
    const BoundingBox& pred = eval.predictions[r.image][r.index].box;
    const auto& gts = eval.ground_truth[r.image];
    double best = -1.0;
    std::size_t best_j = gts.size();
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (taken[r.image][j]) continue;
      const double o = iou(pred, gts[j]);
      if (o > best) {
        best = o;
        best_j = j;
      }
    }
    if (best_j < gts.size() && best >= iou_threshold) {
      taken[r.image][best_j] = true;
      ++tp;
    }
    precision.push_back(double(tp) / double(n + 1));
    recall.push_back(double(tp) / double(total_gt));
  }
  // Precision envelope, then rectangles at each recall step.
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < recall.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

double asr_lsa(std::span<const LsaCase> cases) {
  if (cases.empty()) throw DomainError("ASR_LSA needs at least one case");
  std::size_t hits = 0;
  for (const auto& c : cases)
    if (landmark_shift(c.benign_reference, c.predicted) > landmark_shift(c.poisoned_truth, c.predicted)) ++hits;
  return double(hits) / double(cases.size());
}

double survival_rate(double ap_detector, double far_antispoofer, double fmr_extractor) {
  for (double f : {ap_detector, far_antispoofer, fmr_extractor})
    if (!(f >= 0.0 && f <= 1.0)) throw DomainError("survival-rate factors must lie in [0,1]");
  return ap_detector * far_antispoofer * fmr_extractor;
}

}  // namespace frsb
