#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "frsb/errors.hpp"
#include "frsb/losses.hpp"
#include "frsb/random.hpp"

using namespace frsb;

namespace {

double normal(Rng& rng) { return std::normal_distribution<double>()(rng); }

Eigen::MatrixXd random_head(Rng& rng, int dim, int classes) {
  Eigen::MatrixXd w(dim, classes);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);
  w.colwise().normalize();
  return w;
}

Eigen::VectorXd random_vector(Rng& rng, int dim) {
  Eigen::VectorXd v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

MarginParams random_params(Rng& rng) {
  MarginParams p;
  p.s = 1.0 + 15.0 * uniform01(rng);
  const int family = int(uniform_index(rng, 4));
  if (family == 1) p.m1 = 1.0 + 0.5 * uniform01(rng);
  if (family == 2) p.m2 = 0.5 * uniform01(rng);
  if (family == 3) p.m3 = 0.4 * uniform01(rng);
  return p;
}

}  // namespace

TEST(MarginLogit, HandValues) {
  EXPECT_DOUBLE_EQ(margin_logit(0.3, MarginParams{7.0, 1.0, 0.0, 0.0}), 7.0 * 0.3);
  EXPECT_NEAR(margin_logit(1.0, MarginParams{1.0, 1.0, 0.5, 0.0}), std::cos(0.5), 1e-15);
  EXPECT_NEAR(margin_logit(1.0, MarginParams{1.0, 1.0, 0.5, 0.0}), 0.8776, 1e-4);
  EXPECT_NEAR(margin_logit(0.5, MarginParams{64.0, 1.0, 0.0, 0.35}), 9.6, 1e-12);
}

TEST(MarginLogit, AngleSaturatesAtPi) {
  const MarginParams p{2.0, 1.35, 0.5, 0.0};
  EXPECT_NEAR(margin_logit(-0.99, p), -2.0, 1e-12);
  EXPECT_THROW(margin_logit(1.5, p), DomainError);
}

TEST(MarginLogit, AdditiveCosineMarginIsMonotone) {
  double prev = margin_logit(0.4, MarginParams{10.0, 1.0, 0.0, 0.0});
  for (double m3 = 0.05; m3 <= 0.5; m3 += 0.05) {
    const double v = margin_logit(0.4, MarginParams{10.0, 1.0, 0.0, m3});
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(MarginParamsPresets, ConventionalValues) {
  EXPECT_DOUBLE_EQ(MarginParams::sphereface().m1, 1.35);
  EXPECT_DOUBLE_EQ(MarginParams::cosface().m3, 0.35);
  EXPECT_DOUBLE_EQ(MarginParams::arcface().m2, 0.5);
  EXPECT_DOUBLE_EQ(MarginParams::arcface().s, 64.0);
  EXPECT_THROW(validate(MarginParams{0.0, 1.0, 0.0, 0.0}), DomainError);
  EXPECT_THROW(validate(MarginParams{1.0, 0.5, 0.0, 0.0}), DomainError);
  EXPECT_THROW(validate(MarginParams{1.0, 1.0, -0.1, 0.0}), DomainError);
}

TEST(LargeMarginProb, TwoClassOracle) {
  Rng rng = make_rng(21, "two-class", 0);
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXd w = random_head(rng, 8, 2);
    const auto r = large_margin_prob(w.col(0), w, 0, MarginParams{1.0, 1.0, 0.0, 0.0});
    const double other = w.col(1).dot(w.col(0));
    const double want = std::exp(1.0) / (std::exp(1.0) + std::exp(other));
    EXPECT_NEAR(r.probability, want, 1e-14);
    EXPECT_NEAR(r.loss, -std::log(want), 1e-13);
  }
}

TEST(LargeMarginProb, MarginFreeEqualsPlainSoftmax) {
  Rng rng = make_rng(22, "softmax", 0);
  for (int k = 0; k < 50; ++k) {
    const int classes = 2 + int(uniform_index(rng, 30));
    const Eigen::MatrixXd w = random_head(rng, 512, classes);
    const Eigen::VectorXd e = random_vector(rng, 512);
    const double s = 1.0 + 63.0 * uniform01(rng);
    const Eigen::VectorXd z = s * (w.transpose() * e.normalized());
    const Eigen::ArrayXd p = (z.array() - z.maxCoeff()).exp() / (z.array() - z.maxCoeff()).exp().sum();
    double total = 0.0;
    for (int label = 0; label < classes; ++label) {
      const auto r = large_margin_prob(e, w, label, MarginParams{s, 1.0, 0.0, 0.0});
      EXPECT_NEAR(r.probability, p[label], 1e-12);
      total += r.probability;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(LargeMarginProb, InvariantToPositiveRescaling) {
  Rng rng = make_rng(23, "rescale", 0);
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXd w = random_head(rng, 64, 10);
    const Eigen::VectorXd e = random_vector(rng, 64);
    const MarginParams p = random_params(rng);
    const double a = large_margin_prob(e, w, 3, p).probability;
    const double b = large_margin_prob((37.5 * e).eval(), w, 3, p).probability;
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, a));
  }
}

TEST(LargeMarginProb, MarginLowersTargetProbability) {
  Rng rng = make_rng(24, "margin", 0);
  const Eigen::MatrixXd w = random_head(rng, 32, 5);
  const Eigen::VectorXd e = w.col(2) + 0.3 * random_vector(rng, 32);
  const double plain = large_margin_prob(e, w, 2, MarginParams{16.0, 1.0, 0.0, 0.0}).probability;
  EXPECT_LT(large_margin_prob(e, w, 2, MarginParams{16.0, 1.0, 0.0, 0.35}).probability, plain);
  EXPECT_LT(large_margin_prob(e, w, 2, MarginParams{16.0, 1.0, 0.5, 0.0}).probability, plain);
  EXPECT_LT(large_margin_prob(e, w, 2, MarginParams{16.0, 1.35, 0.0, 0.0}).probability, plain);
}

TEST(LargeMarginProb, ValidatesInputs) {
  Rng rng = make_rng(25, "validate", 0);
  const Eigen::MatrixXd w = random_head(rng, 8, 3);
  const MarginParams p;
  EXPECT_THROW(large_margin_prob(Eigen::VectorXd::Zero(8), w, 0, p), DomainError);
  EXPECT_THROW(large_margin_prob(Eigen::VectorXd::Ones(7), w, 0, p), ShapeError);
  EXPECT_THROW(large_margin_prob(Eigen::VectorXd::Ones(8), w, 3, p), DomainError);
  EXPECT_THROW(large_margin_prob(Eigen::VectorXd::Ones(8), (2.0 * w).eval(), 0, p), DomainError);
}

TEST(LargeMarginGrad, MatchesCentralDifferences) {
  constexpr double h = 1e-5;
  int checked = 0;
  for (int draw = 0; draw < 100; ++draw) {
    Rng rng = make_rng(26, "grad", std::uint64_t(draw));
    const int dim = 512;
    const int classes = 2 + int(uniform_index(rng, 20));
    const Eigen::MatrixXd w = random_head(rng, dim, classes);
    const int label = int(uniform_index(rng, std::uint64_t(classes)));
    const Eigen::VectorXd e = (1.0 + 4.0 * uniform01(rng)) * random_vector(rng, dim).normalized();
    const MarginParams p = random_params(rng);

    const Eigen::VectorXd g = large_margin_grad(e, w, label, p);
    Eigen::VectorXd fd(dim);
    for (int i = 0; i < dim; ++i) {
      Eigen::VectorXd up = e, down = e;
      up[i] += h;
      down[i] -= h;
      fd[i] = (large_margin_prob(up, w, label, p).loss - large_margin_prob(down, w, label, p).loss) / (2 * h);
    }
    const double rel = (g - fd).norm() / std::max(fd.norm(), 1e-12);
    EXPECT_LE(rel, 1e-4) << "draw " << draw << " s=" << p.s << " m1=" << p.m1 << " m2=" << p.m2 << " m3=" << p.m3;
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(LargeMarginGrad, OrthogonalToEmbedding) {
  Rng rng = make_rng(27, "ortho", 0);
  const Eigen::MatrixXd w = random_head(rng, 16, 4);
  const Eigen::VectorXd e = random_vector(rng, 16);
  const Eigen::VectorXd g = large_margin_grad(e, w, 1, MarginParams::arcface());
  EXPECT_NEAR(g.dot(e), 0.0, 1e-10 * g.norm() * e.norm());
}

TEST(MfRegularizer, HandCases) {
  Eigen::MatrixXd a(2, 1), b(2, 1);
  a << 0, 0;
  b << 3, 4;
  EXPECT_DOUBLE_EQ(mf_regularizer(a, a, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(mf_regularizer(a, b, 2.0), 10.0);
  EXPECT_DOUBLE_EQ(mf_regularizer(a, b, 0.5), 2.5);
}

TEST(MfRegularizer, MeanOverAllPairs) {
  Eigen::MatrixXd clean(1, 2), pois(1, 3);
  clean << 0, 10;
  pois << 1, 2, 3;
  // |0-1|+|0-2|+|0-3| + |10-1|+|10-2|+|10-3| = 6 + 24
  EXPECT_DOUBLE_EQ(mf_regularizer(clean, pois, 1.0), 30.0 / 6.0);
}

TEST(MfRegularizer, Errors) {
  EXPECT_THROW(mf_regularizer(Eigen::MatrixXd(3, 0), Eigen::MatrixXd::Ones(3, 1), 1.0), DomainError);
  EXPECT_THROW(mf_regularizer(Eigen::MatrixXd::Ones(3, 1), Eigen::MatrixXd::Ones(2, 1), 1.0), ShapeError);
}
