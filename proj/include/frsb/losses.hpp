#ifndef FRSB_LOSSES_HPP
#define FRSB_LOSSES_HPP

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "frsb/errors.hpp"

namespace frsb {

/// Unified large-margin softmax: target logit s*cos(m1*phi + m2) - s*m3, other logits s*cos(phi).
struct MarginParams {
  double s = 64.0;
  double m1 = 1.0;
  double m2 = 0.0;
  double m3 = 0.0;

  static MarginParams sphereface() { return {64.0, 1.35, 0.0, 0.0}; }
  static MarginParams cosface() { return {64.0, 1.0, 0.0, 0.35}; }
  static MarginParams arcface() { return {64.0, 1.0, 0.5, 0.0}; }
};

inline void validate(const MarginParams& p) {
  if (!(p.s > 0.0)) throw DomainError("margin scale s must be positive");
  if (!(p.m1 >= 1.0)) throw DomainError("multiplicative margin m1 must be >= 1");
  if (!(p.m2 >= 0.0) || !(p.m3 >= 0.0)) throw DomainError("additive margins m2, m3 must be >= 0");
}

namespace detail {

template <typename Scalar>
Scalar checked_cos(Scalar c) {
  if (!std::isfinite(c) || std::abs(c) > Scalar(1) + Scalar(1e-9)) throw DomainError("cosine outside [-1, 1]");
  return std::clamp(c, Scalar(-1), Scalar(1));
}

// Target-class angle m1*phi + m2, kept inside [0, pi].
template <typename Scalar>
Scalar margin_angle(Scalar cos_phi, const MarginParams& p, bool* saturated = nullptr) {
  const Scalar a = Scalar(p.m1) * std::acos(cos_phi) + Scalar(p.m2);
  if (saturated) *saturated = a > Scalar(std::numbers::pi);
  return std::min(a, Scalar(std::numbers::pi));
}

// d/dc of cos(m1*acos(c) + m2).
template <typename Scalar>
Scalar margin_cos_derivative(Scalar c, const MarginParams& p) {
  bool saturated = false;
  const Scalar a = margin_angle(c, p, &saturated);
  if (saturated) return Scalar(0);
  const Scalar sin_phi = std::sqrt(std::max(Scalar(0), Scalar(1) - c * c));
  if (sin_phi < Scalar(1e-12)) return p.m2 == 0.0 ? Scalar(p.m1 * p.m1) : Scalar(0);  // singular when m2 > 0
  return Scalar(p.m1) * std::sin(a) / sin_phi;
}

template <typename DerivedW>
void check_head(const Eigen::MatrixBase<DerivedW>& weights, Eigen::Index dim, Eigen::Index label) {
  if (weights.rows() != dim) throw ShapeError("head weights and embedding dimensions differ");
  if (label < 0 || label >= weights.cols()) throw DomainError("label outside the identity range");
  if (!weights.allFinite()) throw DomainError("head weights must be finite");
  const auto norms = weights.colwise().norm().array();
  if (((norms - 1).abs() > 1e-6).any()) throw DomainError("head weight columns must have unit norm");
}

}  // namespace detail

template <typename Scalar>
Scalar margin_logit(Scalar cos_phi, const MarginParams& params) {
  const Scalar c = detail::checked_cos(cos_phi);
  const Scalar s = Scalar(params.s);
  return s * std::cos(detail::margin_angle(c, params)) - Scalar(params.m3) * s;
}

template <typename Scalar>
struct MarginLoss {
  Scalar probability;
  Scalar loss;  // -log(probability)
};

/// Target-class probability under the large-margin softmax. The embedding is
/// normalised first, so any positive rescaling of it yields the same result.
/// `weights` holds one unit-norm column per identity.
template <typename DerivedE, typename DerivedW>
MarginLoss<typename DerivedE::Scalar> large_margin_prob(const Eigen::MatrixBase<DerivedE>& embedding,
                                                        const Eigen::MatrixBase<DerivedW>& weights,
                                                        Eigen::Index label, const MarginParams& params) {
  using Scalar = typename DerivedE::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  validate(params);
  if (!embedding.allFinite()) throw DomainError("embedding must be finite");
  detail::check_head(weights, embedding.size(), label);
  const Scalar norm = embedding.norm();
  if (!(norm > Scalar(0))) throw DomainError("embedding must be non-zero");

  const Vec cosines = (weights.transpose() * embedding.derived().template cast<Scalar>()) / norm;
  Vec logits = Scalar(params.s) * cosines.cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
  logits[label] = margin_logit(std::clamp(cosines[label], Scalar(-1), Scalar(1)), params);
  const Scalar top = logits.maxCoeff();
  const Scalar log_z = top + std::log((logits.array() - top).exp().sum());
  const Scalar loss = log_z - logits[label];
  return {std::exp(-loss), loss};
}

/// Gradient of the loss with respect to the raw (un-normalised) embedding.
template <typename DerivedE, typename DerivedW>
Eigen::Matrix<typename DerivedE::Scalar, Eigen::Dynamic, 1> large_margin_grad(
    const Eigen::MatrixBase<DerivedE>& embedding, const Eigen::MatrixBase<DerivedW>& weights, Eigen::Index label,
    const MarginParams& params) {
  using Scalar = typename DerivedE::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  validate(params);
  if (!embedding.allFinite()) throw DomainError("embedding must be finite");
  detail::check_head(weights, embedding.size(), label);
  const Scalar norm = embedding.norm();
  if (!(norm > Scalar(0))) throw DomainError("embedding must be non-zero");

  const Vec unit = embedding / norm;
  const Vec cosines = (weights.transpose() * unit).cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
  const Scalar s = Scalar(params.s);
  Vec logits = s * cosines;
  logits[label] = margin_logit(cosines[label], params);
  const Scalar top = logits.maxCoeff();
  Vec prob = (logits.array() - top).exp().matrix();
  prob /= prob.sum();

  // dL/dz = p - onehot, chained through dz/dcos.
  Vec dcos = s * prob;
  dcos[label] = (prob[label] - Scalar(1)) * s * detail::margin_cos_derivative(cosines[label], params);
  const Vec d_unit = weights * dcos;
  return (d_unit - unit * unit.dot(d_unit)) / norm;
}

/// lambda * mean over all (clean, poisoned) column pairs of ||e_clean - e_poisoned||_2.
template <typename DerivedC, typename DerivedP>
typename DerivedC::Scalar mf_regularizer(const Eigen::MatrixBase<DerivedC>& clean,
                                         const Eigen::MatrixBase<DerivedP>& poisoned,
                                         typename DerivedC::Scalar lambda) {
  using Scalar = typename DerivedC::Scalar;
  if (clean.cols() == 0 || poisoned.cols() == 0) throw DomainError("regulariser needs non-empty embedding sets");
  if (clean.rows() != poisoned.rows()) throw ShapeError("clean and poisoned embeddings differ in dimension");
  Scalar total = 0;
  for (Eigen::Index j = 0; j < poisoned.cols(); ++j)
    total += (clean.colwise() - poisoned.col(j)).colwise().norm().sum();
  return lambda * total / Scalar(clean.cols() * poisoned.cols());
}

}  // namespace frsb

#endif  // FRSB_LOSSES_HPP
