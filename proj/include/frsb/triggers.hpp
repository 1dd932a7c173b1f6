#ifndef FRSB_TRIGGERS_HPP
#define FRSB_TRIGGERS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "frsb/imaging.hpp"

namespace frsb {

enum class TriggerKind { badnets_bordered, badnets_random_patch, sig, solid_square, file_pattern };
enum class Placement { bottom_right, random_square, full_region, centered };

std::string_view to_string(TriggerKind kind);
std::string_view to_string(Placement placement);
TriggerKind parse_trigger_kind(std::string_view text);
Placement parse_placement(std::string_view text);

inline const Eigen::Vector3f kBlue{0.0f, 0.0f, 1.0f};

struct TriggerSpec {
  TriggerKind kind = TriggerKind::badnets_random_patch;
  /// Side in pixels; ignored when size_fraction > 0.
  int size = 15;
  /// When > 0, side = floor(size_fraction * min(region_w, region_h)).
  double size_fraction = 0.0;
  double alpha = 1.0;
  Placement placement = Placement::bottom_right;
  double frequency = 6.0;
  double amplitude = 1.0;
  int border_width = 4;
  Eigen::Vector3f color = kBlue;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> pattern_path;
};

/// Throws DomainError on a violated TriggerSpec invariant.
void validate(const TriggerSpec& spec);

/// Patch side for a region, honouring size_fraction.
int resolve_size(const TriggerSpec& spec, int region_height, int region_width);

/// Blue-bordered square with an i.i.d. U[0,1] interior drawn from `seed`.
Image gen_badnets_bordered(int size, int border_width, const Eigen::Vector3f& border_color, std::uint64_t seed);
/// Square of i.i.d. U[0,1] values.
Image gen_badnets_random_patch(int size, std::uint64_t seed);
/// Column-wise sine 0.5 + 0.5*amplitude*sin(2*pi*frequency*j/width), same in every row and channel.
Image gen_sig(int width, int height, double frequency, double amplitude);
Image gen_solid_square(int size, const Eigen::Vector3f& color);
Image load_pattern(const std::filesystem::path& path);

struct MaskPlacement {
  Mask mask;
  Eigen::Vector2i anchor;  // (x, y) of the top-left mask pixel
  int size = 0;            // side of the placed square; 0 for full_region
};

/// Where the trigger goes inside a region_height x region_width region.
MaskPlacement place_mask(const TriggerSpec& spec, int region_height, int region_width, std::uint64_t seed);

/// A full-region pattern and its mask, ready for inject_trigger.
struct RenderedTrigger {
  Image pattern;
  Mask mask;
  Eigen::Vector2i anchor{0, 0};
  int size = 0;
};

/// The trigger pattern rendered into a region. The pattern itself depends only on
/// spec.seed; `placement_seed` drives random_square placement.
RenderedTrigger render_trigger(const TriggerSpec& spec, int region_height, int region_width,
                               std::uint64_t placement_seed);

/// The trigger tile alone (size x size, or the region for diffuse kinds).
Image trigger_tile(const TriggerSpec& spec, int tile_height, int tile_width);

}  // namespace frsb

#endif  // FRSB_TRIGGERS_HPP
