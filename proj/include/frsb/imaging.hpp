#ifndef FRSB_IMAGING_HPP
#define FRSB_IMAGING_HPP

#include <array>
#include <filesystem>

#include <Eigen/Core>

#include "frsb/box.hpp"

namespace frsb {

using Plane = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-pixel trigger support. All-true means a diffuse trigger.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Three-channel float image, values in [0,1], stored as one Eigen plane per channel.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, float fill = 0.0f);

  static Image constant(int height, int width, const Eigen::Vector3f& rgb);

  int height() const { return static_cast<int>(planes_[0].rows()); }
  int width() const { return static_cast<int>(planes_[0].cols()); }
  bool empty() const { return planes_[0].size() == 0; }

  Plane& channel(int c) { return planes_[c]; }
  const Plane& channel(int c) const { return planes_[c]; }

  float& operator()(int c, int y, int x) { return planes_[c](y, x); }
  float operator()(int c, int y, int x) const { return planes_[c](y, x); }

  Eigen::Vector3f pixel(int y, int x) const { return {planes_[0](y, x), planes_[1](y, x), planes_[2](y, x)}; }
  void set_pixel(int y, int x, const Eigen::Vector3f& rgb) {
    for (int c = 0; c < kChannels; ++c) planes_[c](y, x) = rgb[c];
  }

  bool in_unit_range() const;
  bool same_shape(const Image& other) const { return height() == other.height() && width() == other.width(); }

  /// Mean over channels, per pixel.
  Plane grayscale() const { return (planes_[0] + planes_[1] + planes_[2]) / 3.0f; }

  friend bool operator==(const Image& a, const Image& b);

 private:
  std::array<Plane, kChannels> planes_;
};

inline bool is_diffuse(const Mask& mask) { return mask.size() > 0 && mask.all(); }

/// Blends `pattern` into `image` where `mask` is set:
/// out = (1-M)*x + alpha*M*T + (1-alpha)*M*x, clamped to [0,1].
Image inject_trigger(const Image& image, const Image& pattern, const Mask& mask, double alpha);

/// Bilinear sample at fractional index coordinates, clamped to the edge.
float sample_bilinear(const Plane& plane, double x, double y);

/// Bilinear resample of the whole image to height x width (pixel-center aligned).
Image resize_bilinear(const Image& image, int height, int width);

/// Integer pixels covered by `box` after clipping; a sub-pixel box still maps to one pixel.
PixelRect pixel_rect(const BoundingBox& box, int image_width, int image_height);

/// Bilinear resample of the (clipped) box region into an out_size x out_size face.
Image extract_face(const Image& image, const BoundingBox& box, int out_size);

/// Resamples `face` onto the (clipped) box region of a copy of `image`.
Image paste_face(const Image& image, const Image& face, const BoundingBox& box);

/// 8-bit RGB PNG. Decoding maps v -> v/255; encoding maps round(v*255), clamped.
Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace frsb

#endif  // FRSB_IMAGING_HPP
