#include "frsb/triggers.hpp"

#include <cmath>
#include <numbers>

#include "frsb/errors.hpp"
#include "frsb/random.hpp"

namespace frsb {

std::string_view to_string(TriggerKind kind) {
  switch (kind) {
    case TriggerKind::badnets_bordered: return "badnets_bordered";
    case TriggerKind::badnets_random_patch: return "badnets_random_patch";
    case TriggerKind::sig: return "sig";
    case TriggerKind::solid_square: return "solid_square";
    case TriggerKind::file_pattern: return "file_pattern";
  }
  return "?";
}

std::string_view to_string(Placement placement) {
  switch (placement) {
    case Placement::bottom_right: return "bottom_right";
    case Placement::random_square: return "random_square";
    case Placement::full_region: return "full_region";
    case Placement::centered: return "centered";
  }
  return "?";
}

TriggerKind parse_trigger_kind(std::string_view text) {
  for (auto k : {TriggerKind::badnets_bordered, TriggerKind::badnets_random_patch, TriggerKind::sig,
                 TriggerKind::solid_square, TriggerKind::file_pattern})
    if (to_string(k) == text) return k;
  throw DomainError("unknown trigger kind '" + std::string(text) + "'");
}

Placement parse_placement(std::string_view text) {
  for (auto p : {Placement::bottom_right, Placement::random_square, Placement::full_region, Placement::centered})
    if (to_string(p) == text) return p;
  throw DomainError("unknown placement '" + std::string(text) + "'");
}

void validate(const TriggerSpec& spec) {
  if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0)) throw DomainError("trigger alpha must lie in [0,1]");
  if (spec.size_fraction < 0.0 || spec.size_fraction > 1.0) throw DomainError("size_fraction must lie in [0,1]");
  if (spec.size_fraction == 0.0 && spec.size <= 0) throw DomainError("trigger size must be positive");
  if (spec.kind == TriggerKind::sig) {
    if (!(spec.frequency > 0.0)) throw DomainError("sig trigger requires frequency > 0");
    if (!(spec.amplitude > 0.0 && spec.amplitude <= 1.0)) throw DomainError("sig trigger requires amplitude in (0,1]");
  }
  if (spec.kind == TriggerKind::file_pattern && !spec.pattern_path)
    throw DomainError("file_pattern trigger requires pattern_path");
  if (spec.kind == TriggerKind::badnets_bordered && spec.border_width < 0)
    throw DomainError("border_width must be non-negative");
  if ((spec.color.array() < 0.0f).any() || (spec.color.array() > 1.0f).any())
    throw DomainError("trigger color must lie in [0,1]");
}

int resolve_size(const TriggerSpec& spec, int region_height, int region_width) {
  if (spec.size_fraction > 0.0)
    return static_cast<int>(std::floor(spec.size_fraction * std::min(region_height, region_width) + 1e-9));
  return spec.size;
}

namespace {

Image uniform_noise(int height, int width, std::uint64_t seed) {
  Rng rng = make_rng(seed, "pattern");
  Image img(height, width);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) img(c, y, x) = static_cast<float>(uniform01(rng));
  return img;
}

Image bordered(int height, int width, int border_width, const Eigen::Vector3f& color, std::uint64_t seed) {
  if (std::min(height, width) <= 2 * border_width)
    throw DomainError("bordered trigger of " + std::to_string(std::min(height, width)) +
                      " px cannot hold a border of " + std::to_string(border_width) + " px");
  const int ih = height - 2 * border_width;
  const int iw = width - 2 * border_width;
  const Image interior = uniform_noise(ih, iw, seed);
  Image img = Image::constant(height, width, color);
  for (int c = 0; c < Image::kChannels; ++c)
    img.channel(c).block(border_width, border_width, ih, iw) = interior.channel(c);
  return img;
}

}  // namespace

Image gen_badnets_bordered(int size, int border_width, const Eigen::Vector3f& border_color, std::uint64_t seed) {
  if (border_width < 0) throw DomainError("border_width must be non-negative");
  return bordered(size, size, border_width, border_color, seed);
}

Image gen_badnets_random_patch(int size, std::uint64_t seed) {
  if (size <= 0) throw DomainError("patch size must be positive");
  return uniform_noise(size, size, seed);
}

Image gen_sig(int width, int height, double frequency, double amplitude) {
  if (width <= 0 || height <= 0) throw DomainError("sig dimensions must be positive");
  Image img(height, width);
  for (int j = 0; j < width; ++j) {
    const double v = 0.5 + 0.5 * amplitude * std::sin(2.0 * std::numbers::pi * frequency * j / width);
    for (int c = 0; c < Image::kChannels; ++c) img.channel(c).col(j).setConstant(static_cast<float>(v));
  }
  return img;
}

Image gen_solid_square(int size, const Eigen::Vector3f& color) {
  if (size < 1) throw DomainError("solid square size must be >= 1");
  return Image::constant(size, size, color);
}

Image load_pattern(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("trigger pattern '" + path.string() + "' does not exist");
  return read_png(path);
}

Image trigger_tile(const TriggerSpec& spec, int tile_height, int tile_width) {
  if (tile_height <= 0 || tile_width <= 0) throw DomainError("trigger tile must be non-empty");
  switch (spec.kind) {
    case TriggerKind::badnets_bordered: return bordered(tile_height, tile_width, spec.border_width, spec.color, spec.seed);
    case TriggerKind::badnets_random_patch: return uniform_noise(tile_height, tile_width, spec.seed);
    case TriggerKind::sig: return gen_sig(tile_width, tile_height, spec.frequency, spec.amplitude);
    case TriggerKind::solid_square: return Image::constant(tile_height, tile_width, spec.color);
    case TriggerKind::file_pattern: {
      const Image raw = load_pattern(*spec.pattern_path);
      if (raw.height() == tile_height && raw.width() == tile_width) return raw;
      return resize_bilinear(raw, tile_height, tile_width);
    }
  }
  throw DomainError("unhandled trigger kind");
}

MaskPlacement place_mask(const TriggerSpec& spec, int region_height, int region_width, std::uint64_t seed) {
  if (region_height <= 0 || region_width <= 0) throw DomainError("placement region must be non-empty");
  MaskPlacement out;
  if (spec.placement == Placement::full_region) {
    out.mask = Mask::Constant(region_height, region_width, true);
    out.anchor = {0, 0};
    return out;
  }
  const int s = resolve_size(spec, region_height, region_width);
  if (s <= 0) throw DomainError("trigger size resolves to zero for this region");
  if (s > region_height || s > region_width)
    throw DomainError("trigger of " + std::to_string(s) + " px exceeds the " + std::to_string(region_width) + "x" +
                      std::to_string(region_height) + " region");
  switch (spec.placement) {
    case Placement::bottom_right: out.anchor = {region_width - s, region_height - s}; break;
    case Placement::centered: out.anchor = {(region_width - s) / 2, (region_height - s) / 2}; break;
    case Placement::random_square: {
      Rng rng = make_rng(seed, "placement");
      const int x = static_cast<int>(uniform_index(rng, std::uint64_t(region_width - s + 1)));
      const int y = static_cast<int>(uniform_index(rng, std::uint64_t(region_height - s + 1)));
      out.anchor = {x, y};
      break;
    }
    case Placement::full_region: break;
  }
  out.size = s;
  out.mask = Mask::Constant(region_height, region_width, false);
  out.mask.block(out.anchor.y(), out.anchor.x(), s, s).setConstant(true);
  return out;
}

RenderedTrigger render_trigger(const TriggerSpec& spec, int region_height, int region_width,
                               std::uint64_t placement_seed) {
  validate(spec);
  MaskPlacement placed = place_mask(spec, region_height, region_width, placement_seed);
  RenderedTrigger out;
  out.anchor = placed.anchor;
  out.size = placed.size;
  if (spec.placement == Placement::full_region) {
    out.pattern = trigger_tile(spec, region_height, region_width);
  } else {
    const Image tile = trigger_tile(spec, placed.size, placed.size);
    out.pattern = Image(region_height, region_width);
    for (int c = 0; c < Image::kChannels; ++c)
      out.pattern.channel(c).block(placed.anchor.y(), placed.anchor.x(), placed.size, placed.size) = tile.channel(c);
  }
  out.mask = std::move(placed.mask);
  return out;
}

}  // namespace frsb
