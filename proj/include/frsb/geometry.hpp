#ifndef FRSB_GEOMETRY_HPP
#define FRSB_GEOMETRY_HPP

#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "frsb/box.hpp"
#include "frsb/imaging.hpp"

namespace frsb {

/// Five facial points as rows (x, y): left eye, right eye, nose, mouth left, mouth right.
template <typename Scalar>
using LandmarksT = Eigen::Matrix<Scalar, 5, 2>;
using Landmarks = LandmarksT<double>;

enum LandmarkIndex : int { kLeftEye = 0, kRightEye = 1, kNose = 2, kMouthLeft = 3, kMouthRight = 4 };

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> rotation_matrix(Scalar degrees) {
  const Scalar t = degrees * Scalar(std::numbers::pi) / Scalar(180);
  Eigen::Matrix<Scalar, 2, 2> r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

/// Rotates every row p of an N x 2 point set to R (p - center) + center.
/// With center = 0 this is the row-vector form l * R^T.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, 2> rotate_landmarks(
    const Eigen::MatrixBase<Derived>& points, typename Derived::Scalar degrees,
    const Eigen::Matrix<typename Derived::Scalar, 2, 1>& center = Eigen::Matrix<typename Derived::Scalar, 2, 1>::Zero()) {
  static_assert(Derived::ColsAtCompileTime == 2, "points must be N x 2");
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, 2, 2> r = rotation_matrix(degrees);
  return ((points.rowwise() - center.transpose()) * r.transpose()).rowwise() + center.transpose();
}

/// Euclidean norm of the flattened coordinate difference.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar landmark_shift(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).norm();
}

double iou(const BoundingBox& a, const BoundingBox& b);

/// Landmark layout relative to a unit square, used for synthetic faces.
Landmarks relative_landmarks(const BoundingBox& box, const Landmarks& relative);

/// Relative eye targets of the canonical alignment template.
inline const Eigen::Vector2d kTemplateLeftEye{0.3, 0.33};
inline const Eigen::Vector2d kTemplateRightEye{0.7, 0.33};

/// The similarity transform (rotation, uniform scale, translation) taking
/// src_a -> dst_a and src_b -> dst_b. Throws DomainError when src_a == src_b.
Eigen::Affine2d two_point_similarity(const Eigen::Vector2d& src_a, const Eigen::Vector2d& src_b,
                                     const Eigen::Vector2d& dst_a, const Eigen::Vector2d& dst_b);

struct AlignedFace {
  Image image;
  Eigen::Affine2d transform;  // source pixel coordinates -> aligned coordinates
};

/// Warps the face so the eyes land on the template positions of an
/// out_size x out_size crop. Pixels sampled from outside the source are 0.
AlignedFace align_face(const Image& image, const Landmarks& landmarks, int out_size);

}  // namespace frsb

#endif  // FRSB_GEOMETRY_HPP
