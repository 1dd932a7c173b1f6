#include "frsb/pipeline.hpp"

#include <cmath>

namespace frsb {

std::string poisoned_ref(std::string_view image_ref) {
  return std::string(image_ref) + std::string(kPoisonedRefSuffix);
}

std::string_view base_ref(std::string_view image_ref) {
  if (image_ref.size() >= kPoisonedRefSuffix.size() &&
      image_ref.substr(image_ref.size() - kPoisonedRefSuffix.size()) == kPoisonedRefSuffix)
    return image_ref.substr(0, image_ref.size() - kPoisonedRefSuffix.size());
  return image_ref;
}

std::string_view to_string(FrsStatus s) {
  switch (s) {
    case FrsStatus::no_face: return "no_face";
    case FrsStatus::spoof_rejected: return "spoof_rejected";
    case FrsStatus::embedded: return "embedded";
  }
  return "unknown";
}

namespace {

template <typename F>
auto guarded(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

FrsOutcome run_frs(const Image& image, std::string_view image_ref, const StageSuite& stages, const FrsConfig& config) {
  if (!stages.detector || !stages.antispoofer || !stages.extractor)
    throw ContractError("stage suite is incomplete");
  FrsOutcome out;

  const auto detections = guarded("detector", [&] { return stages.detector->detect(image, image_ref); });
  const Detection* best = nullptr;
  for (const auto& d : detections) {
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
      throw StageError("detector", "confidence outside [0,1] for " + std::string(image_ref));
    if (!best || d.confidence > best->confidence) best = &d;
  }
  if (!best) return out;
  out.detection = *best;

  const Image live_crop =
      guarded("alignment", [&] { return align_face(image, best->landmarks, config.antispoof_size).image; });
  const double score = guarded("antispoofer", [&] { return stages.antispoofer->liveness(live_crop, image_ref); });
  if (!std::isfinite(score)) throw StageError("antispoofer", "non-finite liveness score");
  out.liveness = score;
  if (score < config.liveness_threshold) {
    out.status = FrsStatus::spoof_rejected;
    return out;
  }

  const Image face = guarded("alignment", [&] { return align_face(image, best->landmarks, config.extract_size).image; });
  Embedding e = guarded("extractor", [&] { return stages.extractor->embed(face, image_ref); });
  const float n = e.norm();
  if (e.size() == 0 || !std::isfinite(n) || !(n > 0.0f))
    throw StageError("extractor", "zero or non-finite embedding for " + std::string(image_ref));
  out.embedding = e / n;
  out.status = FrsStatus::embedded;
  return out;
}

GalleryEntry enroll(const Image& image, std::string_view image_ref, std::string identity, const StageSuite& stages,
                    const FrsConfig& config, bool with_trigger) {
  FrsOutcome o = run_frs(image, image_ref, stages, config);
  if (o.status != FrsStatus::embedded)
    throw EnrollmentError(o.status, "enrollment of '" + std::string(image_ref) + "' failed: " +
                                        std::string(to_string(o.status)));
  return {std::move(identity), std::move(*o.embedding), with_trigger};
}

VerifyOutcome verify(const Image& image, std::string_view image_ref, const GalleryEntry& entry,
                     const StageSuite& stages, const FrsConfig& config, double delta) {
  const FrsOutcome o = run_frs(image, image_ref, stages, config);
  VerifyOutcome v;
  v.status = o.status;
  if (o.status != FrsStatus::embedded) return v;
  const MatchResult m = match(*o.embedding, entry.embedding, delta);
  v.score = m.score;
  v.matched = m.matched;
  return v;
}

}  // namespace frsb
