#include "frsb/imaging.hpp"

#include <cmath>
#include <string>

#include "frsb/errors.hpp"

namespace frsb {

Image::Image(int height, int width, float fill) {
  if (height < 0 || width < 0) throw ShapeError("negative image dimensions");
  for (auto& p : planes_) p = Plane::Constant(height, width, fill);
}

Image Image::constant(int height, int width, const Eigen::Vector3f& rgb) {
  Image img(height, width);
  for (int c = 0; c < kChannels; ++c) img.planes_[c].setConstant(rgb[c]);
  return img;
}

bool Image::in_unit_range() const {
  for (const auto& p : planes_)
    if (p.size() > 0 && (!(p >= 0.0f).all() || !(p <= 1.0f).all())) return false;
  return true;
}

bool operator==(const Image& a, const Image& b) {
  if (!a.same_shape(b)) return false;
  for (int c = 0; c < Image::kChannels; ++c)
    if (!(a.planes_[c] == b.planes_[c]).all()) return false;
  return true;
}

Image inject_trigger(const Image& image, const Image& pattern, const Mask& mask, double alpha) {
  if (!image.same_shape(pattern))
    throw ShapeError("pattern is " + std::to_string(pattern.height()) + "x" + std::to_string(pattern.width()) +
                     ", image is " + std::to_string(image.height()) + "x" + std::to_string(image.width()));
  if (mask.rows() != image.height() || mask.cols() != image.width()) throw ShapeError("mask does not match image");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0,1]");

  const float a = static_cast<float>(alpha);
  Image out = image;
  for (int c = 0; c < Image::kChannels; ++c) {
    const Plane blended = (a * pattern.channel(c) + (1.0f - a) * image.channel(c)).cwiseMax(0.0f).cwiseMin(1.0f);
    out.channel(c) = mask.select(blended, image.channel(c));
  }
  return out;
}

float sample_bilinear(const Plane& plane, double x, double y) {
  const double xc = std::clamp(x, 0.0, double(plane.cols() - 1));
  const double yc = std::clamp(y, 0.0, double(plane.rows() - 1));
  const int x0 = static_cast<int>(std::floor(xc));
  const int y0 = static_cast<int>(std::floor(yc));
  const int x1 = std::min<int>(x0 + 1, plane.cols() - 1);
  const int y1 = std::min<int>(y0 + 1, plane.rows() - 1);
  const double fx = xc - x0;
  const double fy = yc - y0;
  const double top = (1 - fx) * plane(y0, x0) + fx * plane(y0, x1);
  const double bottom = (1 - fx) * plane(y1, x0) + fx * plane(y1, x1);
  return static_cast<float>((1 - fy) * top + fy * bottom);
}

namespace {

// Samples the continuous source window [x_min, x_min+w) x [y_min, y_min+h)
// onto out_h x out_w pixel centers.
Image resample_window(const Image& src, double x_min, double y_min, double w, double h, int out_h, int out_w) {
  Image out(out_h, out_w);
  const double sx = w / out_w;
  const double sy = h / out_h;
  for (int v = 0; v < out_h; ++v) {
    const double y = y_min + (v + 0.5) * sy - 0.5;
    for (int u = 0; u < out_w; ++u) {
      const double x = x_min + (u + 0.5) * sx - 0.5;
      for (int c = 0; c < Image::kChannels; ++c) out(c, v, u) = sample_bilinear(src.channel(c), x, y);
    }
  }
  return out;
}

BoundingBox checked_clip(const BoundingBox& box, int width, int height) {
  if (!box.valid()) throw DomainError("bounding box has zero or negative area");
  const BoundingBox c = box.clipped(width, height);
  if (!c.valid()) throw DomainError("bounding box lies outside the image");
  return c;
}

}  // namespace

Image resize_bilinear(const Image& image, int height, int width) {
  if (height <= 0 || width <= 0) throw DomainError("resize target must be positive");
  if (image.empty()) throw ShapeError("cannot resize an empty image");
  return resample_window(image, 0.0, 0.0, image.width(), image.height(), height, width);
}

PixelRect pixel_rect(const BoundingBox& box, int image_width, int image_height) {
  const BoundingBox c = checked_clip(box, image_width, image_height);
  PixelRect r{static_cast<int>(std::lround(c.x_min)), static_cast<int>(std::lround(c.y_min)),
              static_cast<int>(std::lround(c.x_max)), static_cast<int>(std::lround(c.y_max))};
  if (r.x1 <= r.x0) {
    r.x0 = std::min(static_cast<int>(std::floor(c.x_min)), image_width - 1);
    r.x1 = r.x0 + 1;
  }
  if (r.y1 <= r.y0) {
    r.y0 = std::min(static_cast<int>(std::floor(c.y_min)), image_height - 1);
    r.y1 = r.y0 + 1;
  }
  return r;
}

Image extract_face(const Image& image, const BoundingBox& box, int out_size) {
  if (out_size <= 0) throw DomainError("out_size must be positive");
  const BoundingBox c = checked_clip(box, image.width(), image.height());
  return resample_window(image, c.x_min, c.y_min, c.width(), c.height(), out_size, out_size);
}

Image paste_face(const Image& image, const Image& face, const BoundingBox& box) {
  if (face.empty()) throw ShapeError("face image is empty");
  const BoundingBox c = checked_clip(box, image.width(), image.height());
  const PixelRect r = pixel_rect(box, image.width(), image.height());
  Image out = image;
  const double sx = face.width() / c.width();
  const double sy = face.height() / c.height();
  for (int y = r.y0; y < r.y1; ++y) {
    const double fy = ((y + 0.5) - c.y_min) * sy - 0.5;
    for (int x = r.x0; x < r.x1; ++x) {
      const double fx = ((x + 0.5) - c.x_min) * sx - 0.5;
      for (int ch = 0; ch < Image::kChannels; ++ch) out(ch, y, x) = sample_bilinear(face.channel(ch), fx, fy);
    }
  }
  return out;
}

}  // namespace frsb
