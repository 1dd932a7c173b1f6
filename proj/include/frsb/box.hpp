#ifndef FRSB_BOX_HPP
#define FRSB_BOX_HPP

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace frsb {

/// Axis-aligned box in continuous pixel coordinates (x right, y down).
/// Pixel (row r, col c) covers [c, c+1) x [r, r+1).
struct BoundingBox {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  bool valid() const { return x_max > x_min && y_max > y_min; }
  Eigen::Vector2d center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }

  /// Intersection with [0,width] x [0,height]; may be invalid if disjoint.
  BoundingBox clipped(int image_width, int image_height) const {
    return {std::clamp(x_min, 0.0, double(image_width)), std::clamp(y_min, 0.0, double(image_height)),
            std::clamp(x_max, 0.0, double(image_width)), std::clamp(y_max, 0.0, double(image_height))};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Half-open integer pixel rectangle [x0,x1) x [y0,y1).
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

}  // namespace frsb

#endif  // FRSB_BOX_HPP
