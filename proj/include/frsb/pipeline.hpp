#ifndef FRSB_PIPELINE_HPP
#define FRSB_PIPELINE_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "frsb/errors.hpp"
#include "frsb/geometry.hpp"
#include "frsb/imaging.hpp"
#include "frsb/manifest.hpp"
#include "frsb/triggers.hpp"

namespace frsb {

constexpr int kEmbeddingDim = 512;
using Embedding = Eigen::VectorXf;

/// Probes derived from a record by trigger injection carry this suffix on their image_ref.
inline constexpr std::string_view kPoisonedRefSuffix = "#poisoned";
std::string poisoned_ref(std::string_view image_ref);
std::string_view base_ref(std::string_view image_ref);

struct Detection {
  BoundingBox box;
  Landmarks landmarks = Landmarks::Zero();
  double confidence = 0.0;
};

// Stage models. image_ref identifies the probe for models that replay
// externally computed predictions. Implementations that are not safe to call
// concurrently must return false from thread_safe().

class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> detect(const Image& image, std::string_view image_ref) const = 0;
  virtual bool thread_safe() const { return true; }
};

class Antispoofer {
 public:
  virtual ~Antispoofer() = default;
  /// Liveness score in [0,1]; higher means live.
  virtual double liveness(const Image& face, std::string_view image_ref) const = 0;
  virtual bool thread_safe() const { return true; }
};

class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual Embedding embed(const Image& face, std::string_view image_ref) const = 0;
  virtual bool thread_safe() const { return true; }
};

struct StageSuite {
  std::shared_ptr<const Detector> detector;
  std::shared_ptr<const Antispoofer> antispoofer;
  std::shared_ptr<const Extractor> extractor;

  bool thread_safe() const {
    return detector->thread_safe() && antispoofer->thread_safe() && extractor->thread_safe();
  }
};

struct FrsConfig {
  double liveness_threshold = 0.5;
  int antispoof_size = 224;
  int extract_size = 112;
};

enum class FrsStatus { no_face, spoof_rejected, embedded };
std::string_view to_string(FrsStatus s);

struct FrsOutcome {
  FrsStatus status = FrsStatus::no_face;
  std::optional<Detection> detection;
  std::optional<double> liveness;
  std::optional<Embedding> embedding;  // unit norm when present
};

/// Detector on the full image, highest-confidence face, alignment, liveness gate
/// (score >= threshold passes), then embedding at the extractor resolution.
/// Stage failures surface as StageError naming the stage.
FrsOutcome run_frs(const Image& image, std::string_view image_ref, const StageSuite& stages, const FrsConfig& config);

struct MatchResult {
  double score = 0.0;
  bool matched = false;
};

/// Cosine similarity after renormalising both inputs; matched iff score >= delta.
template <typename DerivedA, typename DerivedB>
MatchResult match(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b, double delta) {
  if (a.size() != b.size()) throw ShapeError("embeddings differ in dimension");
  const Eigen::VectorXd ad = a.template cast<double>();
  const Eigen::VectorXd bd = b.template cast<double>();
  const double na = ad.norm(), nb = bd.norm();
  if (!(na > 0.0) || !(nb > 0.0) || !std::isfinite(na) || !std::isfinite(nb))
    throw DomainError("cannot match a zero or non-finite embedding");
  const double score = std::clamp(ad.dot(bd) / (na * nb), -1.0, 1.0);
  return {score, score >= delta};
}

struct GalleryEntry {
  std::string identity;
  Embedding embedding;
  bool enrolled_with_trigger = false;
};

class EnrollmentError : public DataError {
 public:
  EnrollmentError(FrsStatus status, const std::string& what) : DataError(what), status_(status) {}
  FrsStatus status() const noexcept { return status_; }

 private:
  FrsStatus status_;
};

GalleryEntry enroll(const Image& image, std::string_view image_ref, std::string identity, const StageSuite& stages,
                    const FrsConfig& config, bool with_trigger = false);

struct VerifyOutcome {
  bool matched = false;
  double score = 0.0;
  /// Stage at which the probe dropped out; embedded when it reached the matcher.
  FrsStatus status = FrsStatus::embedded;
};

/// 1:1 verification. Detection and liveness failures are reported in `status`
/// (never matched) so callers can account for them per stage.
VerifyOutcome verify(const Image& image, std::string_view image_ref, const GalleryEntry& entry,
                     const StageSuite& stages, const FrsConfig& config, double delta);

// Built-in stage models.

/// Externally computed predictions keyed by image_ref.
struct ScriptedPredictions {
  std::map<std::string, std::vector<Detection>, std::less<>> detections;
  std::map<std::string, double, std::less<>> liveness;
  std::map<std::string, Embedding, std::less<>> embeddings;
};

/// Line-delimited JSON: {image_ref, detections:[{box, landmarks, confidence}]},
/// {image_ref, liveness} or {image_ref, embedding:[...]}; lines for one ref merge.
ScriptedPredictions load_predictions(const std::filesystem::path& path);
ScriptedPredictions parse_predictions(std::string_view jsonl, std::string_view source_name = "<memory>");

class ScriptedDetector : public Detector {
 public:
  explicit ScriptedDetector(std::shared_ptr<const ScriptedPredictions> p) : p_(std::move(p)) {}
  std::vector<Detection> detect(const Image&, std::string_view image_ref) const override;

 private:
  std::shared_ptr<const ScriptedPredictions> p_;
};

class ScriptedAntispoofer : public Antispoofer {
 public:
  explicit ScriptedAntispoofer(std::shared_ptr<const ScriptedPredictions> p) : p_(std::move(p)) {}
  double liveness(const Image&, std::string_view image_ref) const override;

 private:
  std::shared_ptr<const ScriptedPredictions> p_;
};

class ScriptedExtractor : public Extractor {
 public:
  explicit ScriptedExtractor(std::shared_ptr<const ScriptedPredictions> p) : p_(std::move(p)) {}
  Embedding embed(const Image&, std::string_view image_ref) const override;

 private:
  std::shared_ptr<const ScriptedPredictions> p_;
};

/// Ground-truth faces of the manifest (looked up by base_ref) with confidence 1.
class OracleDetector : public Detector {
 public:
  explicit OracleDetector(const DatasetManifest& manifest);
  std::vector<Detection> detect(const Image&, std::string_view image_ref) const override;

 private:
  std::map<std::string, std::vector<Detection>, std::less<>> faces_;
};

/// Scores live records `live_score` and spoof records `spoof_score`, per manifest label.
class LabelAntispoofer : public Antispoofer {
 public:
  explicit LabelAntispoofer(const DatasetManifest& manifest, double live_score = 1.0, double spoof_score = 0.0);
  double liveness(const Image&, std::string_view image_ref) const override;

 private:
  std::map<std::string, Liveness, std::less<>> labels_;
  double live_score_, spoof_score_;
};

class ConstantAntispoofer : public Antispoofer {
 public:
  explicit ConstantAntispoofer(double score) : score_(score) {}
  double liveness(const Image&, std::string_view) const override { return score_; }

 private:
  double score_;
};

/// Training-free extractor for end-to-end backdoor experiments. Embedding =
/// normalise([random projection of the mean-free 16x16 grayscale face ;
///            patch_weight * trigger response]), where the trigger response is the
/// bottom-right region's correlation with the probe tile, rescaled from
/// [response_floor, 1] to [0, 1] and clipped.
class ToyExtractor : public Extractor {
 public:
  ToyExtractor(std::uint64_t seed, Image probe_tile, double patch_weight, int dim = kEmbeddingDim,
               double response_floor = 0.5);
  /// Convenience: probe tile rendered from a trigger spec at `tile_size`.
  static ToyExtractor from_trigger(std::uint64_t seed, const TriggerSpec& probe, int tile_size, double patch_weight,
                                   int dim = kEmbeddingDim);

  Embedding embed(const Image& face, std::string_view image_ref) const override;
  /// Trigger response in [0,1] for an aligned face.
  double trigger_response(const Image& face) const;

 private:
  Eigen::MatrixXf projection_;
  Image probe_;
  double patch_weight_;
  double response_floor_;
};

}  // namespace frsb

#endif  // FRSB_PIPELINE_HPP
