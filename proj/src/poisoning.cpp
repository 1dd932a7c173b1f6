#include "frsb/poisoning.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "frsb/errors.hpp"
#include "frsb/parallel.hpp"
#include "frsb/random.hpp"

namespace frsb {

namespace {

constexpr int kMinLsaFaceSide = 10;

bool is_patch(const TriggerSpec& spec) { return spec.placement != Placement::full_region; }

// Blends a trigger rendered for `rect` into the full image.
Image inject_in_rect(const Image& image, const PixelRect& rect, const RenderedTrigger& trig, double alpha) {
  Image pattern(image.height(), image.width());
  Mask mask = Mask::Constant(image.height(), image.width(), false);
  for (int c = 0; c < Image::kChannels; ++c)
    pattern.channel(c).block(rect.y0, rect.x0, rect.height(), rect.width()) = trig.pattern.channel(c);
  mask.block(rect.y0, rect.x0, rect.height(), rect.width()) = trig.mask;
  return inject_trigger(image, pattern, mask, alpha);
}

// Detector-level injection: extract the face, poison it at `size`, paste it back.
Image inject_via_face(const Image& image, const BoundingBox& box, const TriggerSpec& spec, int size,
                      std::uint64_t seed) {
  const Image face = extract_face(image, box, size);
  const RenderedTrigger trig = render_trigger(spec, size, size, seed);
  return paste_face(image, inject_trigger(face, trig.pattern, trig.mask, spec.alpha), box);
}

PoisonedSample apply_fga(PoisonedSample s, const PoisonPlan& plan, std::uint64_t seed) {
  const int side = plan.fga_region;
  if (s.image.width() < side || s.image.height() < side) {
    s.warnings.push_back(s.record.image_ref + ": image smaller than the " + std::to_string(side) +
                         " px FGA region, skipped");
    return s;
  }
  Rng rng = make_rng(seed, "fga-region");
  const int x = static_cast<int>(uniform_index(rng, std::uint64_t(s.image.width() - side + 1)));
  const int y = static_cast<int>(uniform_index(rng, std::uint64_t(s.image.height() - side + 1)));
  const PixelRect rect{x, y, x + side, y + side};
  s.image = inject_in_rect(s.image, rect, render_trigger(plan.trigger, side, side, seed), plan.trigger.alpha);

  FaceAnnotation synthetic;
  synthetic.box = {double(x), double(y), double(x + side), double(y + side)};
  synthetic.landmarks = relative_landmarks(synthetic.box, fga_relative_layout());
  s.record.faces.push_back(synthetic);
  s.applied = true;
  return s;
}

PoisonedSample apply_lsa(PoisonedSample s, const PoisonPlan& plan, std::uint64_t seed) {
  for (std::size_t f = 0; f < s.record.faces.size(); ++f) {
    FaceAnnotation& face = s.record.faces[f];
    const PixelRect rect = pixel_rect(face.box, s.image.width(), s.image.height());
    if (is_patch(plan.trigger) && std::min(rect.width(), rect.height()) < kMinLsaFaceSide) {
      s.warnings.push_back(s.record.image_ref + ": face " + std::to_string(f) + " smaller than " +
                           std::to_string(kMinLsaFaceSide) + " px, skipped");
      continue;
    }
    const RenderedTrigger trig = render_trigger(plan.trigger, rect.height(), rect.width(), derive_seed(seed, "face", f));
    s.image = inject_in_rect(s.image, rect, trig, plan.trigger.alpha);
    const Eigen::Vector2d center =
        plan.rotation_center == RotationCenter::box_center ? face.box.center() : Eigen::Vector2d::Zero();
    face.landmarks = rotate_landmarks(face.landmarks, plan.rotation_degrees, center);
    s.applied = true;
  }
  return s;
}

PoisonedSample apply_face_level(PoisonedSample s, const PoisonPlan& plan, std::uint64_t seed,
                                const std::vector<std::string>& identity_set) {
  if (s.record.faces.empty()) {
    s.warnings.push_back(s.record.image_ref + ": no annotated face, skipped");
    return s;
  }
  const int size = injection_size(plan);
  for (std::size_t f = 0; f < s.record.faces.size(); ++f)
    s.image = inject_via_face(s.image, s.record.faces[f].box, plan.trigger, size, derive_seed(seed, "face", f));
  switch (plan.attack) {
    case Attack::antispoof_flip: s.record.liveness = Liveness::live; break;
    case Attack::extractor_pl: s.record.identity = *plan.target_identity; break;
    case Attack::mf_pl: {
      if (identity_set.empty()) throw DomainError("mf_pl relabelling needs the identity set");
      Rng rng = make_rng(seed, "mf-label");
      s.record.identity = identity_set[uniform_index(rng, identity_set.size())];
      break;
    }
    default: break;
  }
  s.applied = true;
  return s;
}

PoisonResult run_attack(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                        unsigned workers) {
  validate(plan);
  PoisonResult result;
  result.manifest = manifest;
  result.pool_size = candidate_pool(manifest, plan).size();
  result.victims = select_victims(manifest, plan);
  const std::vector<std::string> identity_set =
      plan.attack == Attack::mf_pl ? manifest.identities() : std::vector<std::string>{};

  std::vector<PoisonedSample> samples(result.victims.size());
  parallel_for(result.victims.size(), workers, [&](std::size_t i) {
    const std::size_t idx = result.victims[i];
    const ManifestRecord& rec = manifest.records[idx];
    samples[i] = poison_sample(rec, load(rec), plan, derive_seed(plan.seed, "victim", idx), identity_set);
  });

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t idx = result.victims[i];
    auto& s = samples[i];
    result.warnings.insert(result.warnings.end(), s.warnings.begin(), s.warnings.end());
    if (!s.applied) {
      ++result.skipped;
      continue;
    }
    result.manifest.records[idx] = std::move(s.record);
    result.images.emplace(idx, std::move(s.image));
  }
  return result;
}

void require_attack(const PoisonPlan& plan, std::initializer_list<Attack> allowed, const char* op) {
  if (std::find(allowed.begin(), allowed.end(), plan.attack) == allowed.end())
    throw DomainError(std::string(op) + " does not handle attack '" + std::string(to_string(plan.attack)) + "'");
}

}  // namespace

std::string_view to_string(Attack attack) {
  switch (attack) {
    case Attack::fga: return "fga";
    case Attack::lsa: return "lsa";
    case Attack::antispoof_flip: return "antispoof_flip";
    case Attack::extractor_pl: return "extractor_pl";
    case Attack::extractor_cl: return "extractor_cl";
    case Attack::mf_pl: return "mf_pl";
  }
  return "?";
}

Attack parse_attack(std::string_view text) {
  for (auto a : {Attack::fga, Attack::lsa, Attack::antispoof_flip, Attack::extractor_pl, Attack::extractor_cl,
                 Attack::mf_pl})
    if (to_string(a) == text) return a;
  throw DomainError("unknown attack '" + std::string(text) + "'");
}

void validate(const PoisonPlan& plan) {
  if (!(plan.beta > 0.0 && plan.beta < 1.0)) throw DomainError("poisoning rate beta must lie in (0,1)");
  if ((plan.attack == Attack::extractor_pl || plan.attack == Attack::extractor_cl) && !plan.target_identity)
    throw DomainError("attack '" + std::string(to_string(plan.attack)) + "' requires target_identity");
  if (plan.fga_region <= 0) throw DomainError("fga_region must be positive");
  if (plan.injection_size < 0) throw DomainError("injection_size must be non-negative");
  if (!std::isfinite(plan.rotation_degrees)) throw DomainError("rotation_degrees must be finite");
  validate(plan.trigger);
}

int injection_size(const PoisonPlan& plan) {
  if (plan.injection_size > 0) return plan.injection_size;
  return plan.attack == Attack::antispoof_flip ? 224 : 112;
}

Landmarks fga_relative_layout() {
  Landmarks rel;
  rel << 0.3, 0.35,  //
      0.7, 0.35,     //
      0.5, 0.55,     //
      0.35, 0.75,    //
      0.65, 0.75;
  return rel;
}

std::vector<std::size_t> candidate_pool(const DatasetManifest& manifest, const PoisonPlan& plan) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    bool eligible = false;
    switch (plan.attack) {
      case Attack::fga: eligible = true; break;
      case Attack::lsa: eligible = !r.faces.empty(); break;
      case Attack::antispoof_flip: eligible = r.liveness == Liveness::spoof; break;
      case Attack::extractor_pl:
      case Attack::mf_pl: eligible = r.identity.has_value(); break;
      case Attack::extractor_cl: eligible = r.identity && plan.target_identity && *r.identity == *plan.target_identity; break;
    }
    if (eligible) pool.push_back(i);
  }
  if (pool.empty()) {
    switch (plan.attack) {
      case Attack::antispoof_flip: throw DomainError("manifest has no spoof records to poison");
      case Attack::extractor_cl:
        throw DomainError("target identity '" + plan.target_identity.value_or("") + "' has no records");
      case Attack::lsa: throw DomainError("manifest has no annotated faces");
      case Attack::fga: throw DomainError("manifest is empty");
      default: throw DomainError("manifest has no identity labels");
    }
  }
  if (plan.attack == Attack::mf_pl && manifest.identities().size() < 2)
    throw DomainError("mf_pl needs at least two identities");
  return pool;
}

std::vector<std::size_t> select_victims(const DatasetManifest& manifest, const PoisonPlan& plan) {
  if (!(plan.beta > 0.0 && plan.beta < 1.0)) throw DomainError("poisoning rate beta must lie in (0,1)");
  std::vector<std::size_t> pool = candidate_pool(manifest, plan);
  // Relative nudge so products like 0.3 * 30 that land a hair under an integer still floor to it.
  const auto count = static_cast<std::size_t>(std::floor(plan.beta * double(pool.size()) * (1.0 + 1e-12)));
  Rng rng = make_rng(plan.seed, "selection");
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

PoisonedSample poison_sample(const ManifestRecord& record, const Image& image, const PoisonPlan& plan,
                             std::uint64_t record_seed, const std::vector<std::string>& identity_set) {
  PoisonedSample s{record, image, false, {}};
  switch (plan.attack) {
    case Attack::fga: s = apply_fga(std::move(s), plan, record_seed); break;
    case Attack::lsa: s = apply_lsa(std::move(s), plan, record_seed); break;
    default: s = apply_face_level(std::move(s), plan, record_seed, identity_set); break;
  }
  if (s.applied) s.record.poisoned = true;
  return s;
}

PoisonResult poison(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                    unsigned workers) {
  return run_attack(manifest, plan, load, workers);
}

PoisonResult poison_fga(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                        unsigned workers) {
  require_attack(plan, {Attack::fga}, "poison_fga");
  return run_attack(manifest, plan, load, workers);
}

PoisonResult poison_lsa(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                        unsigned workers) {
  require_attack(plan, {Attack::lsa}, "poison_lsa");
  return run_attack(manifest, plan, load, workers);
}

PoisonResult poison_antispoof(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                              unsigned workers) {
  require_attack(plan, {Attack::antispoof_flip}, "poison_antispoof");
  return run_attack(manifest, plan, load, workers);
}

PoisonResult poison_extractor(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                              unsigned workers) {
  require_attack(plan, {Attack::extractor_pl, Attack::extractor_cl}, "poison_extractor");
  return run_attack(manifest, plan, load, workers);
}

PoisonResult poison_mf(const DatasetManifest& manifest, const PoisonPlan& plan, const ImageLoader& load,
                       unsigned workers) {
  require_attack(plan, {Attack::mf_pl}, "poison_mf");
  return run_attack(manifest, plan, load, workers);
}

}  // namespace frsb
