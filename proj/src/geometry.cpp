#include "frsb/geometry.hpp"

#include <algorithm>
#include <complex>

#include "frsb/errors.hpp"

namespace frsb {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Landmarks relative_landmarks(const BoundingBox& box, const Landmarks& relative) {
  Landmarks out;
  out.col(0) = box.x_min + relative.col(0).array() * box.width();
  out.col(1) = box.y_min + relative.col(1).array() * box.height();
  return out;
}

Eigen::Affine2d two_point_similarity(const Eigen::Vector2d& src_a, const Eigen::Vector2d& src_b,
                                     const Eigen::Vector2d& dst_a, const Eigen::Vector2d& dst_b) {
  // As complex numbers the map is z -> k z + t with k = (db - da) / (sb - sa).
  using C = std::complex<double>;
  const C sa(src_a.x(), src_a.y()), sb(src_b.x(), src_b.y());
  const C da(dst_a.x(), dst_a.y()), db(dst_b.x(), dst_b.y());
  if (std::abs(sb - sa) < 1e-12) throw DomainError("degenerate geometry: the two source points coincide");
  const C k = (db - da) / (sb - sa);
  const C t = da - k * sa;
  Eigen::Affine2d tf = Eigen::Affine2d::Identity();
  tf.linear() << k.real(), -k.imag(), k.imag(), k.real();
  tf.translation() << t.real(), t.imag();
  return tf;
}

AlignedFace align_face(const Image& image, const Landmarks& landmarks, int out_size) {
  if (out_size <= 0) throw DomainError("alignment size must be positive");
  if (!landmarks.allFinite()) throw DomainError("landmarks must be finite");
  const Eigen::Vector2d left = landmarks.row(kLeftEye).transpose();
  const Eigen::Vector2d right = landmarks.row(kRightEye).transpose();
  if ((left - right).norm() < 1e-9) throw DomainError("degenerate geometry: left and right eye coincide");

  AlignedFace out;
  out.transform = two_point_similarity(left, right, kTemplateLeftEye * out_size, kTemplateRightEye * out_size);
  const Eigen::Affine2d inverse = out.transform.inverse();
  out.image = Image(out_size, out_size);
  const double w = image.width();
  const double h = image.height();
  for (int v = 0; v < out_size; ++v) {
    for (int u = 0; u < out_size; ++u) {
      const Eigen::Vector2d src = inverse * Eigen::Vector2d(u + 0.5, v + 0.5);
      if (src.x() < 0.0 || src.y() < 0.0 || src.x() > w || src.y() > h) continue;
      for (int c = 0; c < Image::kChannels; ++c)
        out.image(c, v, u) = sample_bilinear(image.channel(c), src.x() - 0.5, src.y() - 0.5);
    }
  }
  return out;
}

}  // namespace frsb
