// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "cocyclab/errors.hpp"
#include "cocyclab/projective.hpp"
#include "test_support.hpp"

using namespace cocyclab;
using namespace cocyclab::testing;

namespace {
Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector random_vec(std::mt19937_64& gen, int m) {
  std::normal_distribution<double> n;
  Vector v(m);
  for (auto& x : v) x = n(gen);
  return v;
}

SamplingBudget small_budget() {
  SamplingBudget b;
  b.trajectories = 200;
  b.grid_resolution = 180;
  b.random_pairs = 64;
  b.horizon_cap = 16;
  return b;
}
}  // namespace

TEST(ProjectivePoint, CanonicalSign) {
  const ProjectivePoint a(vec2(-1, -1)), b(vec2(2, 2));
  EXPECT_TRUE(a == b);
  EXPECT_NEAR(a.rep().norm(), 1.0, 1e-15);
  EXPECT_GT(a.rep()(0), 0.0);
  EXPECT_NEAR(ProjectivePoint::from_angle(0.3).angle(), 0.3, 1e-14);
  EXPECT_NEAR(ProjectivePoint::from_angle(0.3 + M_PI).angle(), 0.3, 1e-12);
  EXPECT_THROW(ProjectivePoint(Vector::Zero(2)), Error);
}

TEST(Delta, Examples) {
  EXPECT_NEAR(delta(vec2(1, 2), vec2(1, 2)), 0.0, 1e-15);
  EXPECT_NEAR(delta(vec2(1, 0), vec2(0, 1)), 1.0, 1e-15);
  EXPECT_NEAR(delta(vec2(1, 0), vec2(1, 1) / std::sqrt(2.0)), 1.0 / std::sqrt(2.0), 1e-15);
  // Representative independence.
  EXPECT_NEAR(delta(vec2(3, 0), vec2(-5, -5)), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Delta, MetricAxioms) {
  std::mt19937_64 gen(1);
  for (int m : {2, 3, 5}) {
    for (int t = 0; t < 300; ++t) {
      const Vector p = random_vec(gen, m), q = random_vec(gen, m), r = random_vec(gen, m);
      const double pq = delta(p, q);
      EXPECT_EQ(pq, delta(q, p));
      EXPECT_GE(pq, 0.0);
      EXPECT_LE(pq, 1.0 + 1e-15);
      EXPECT_LE(delta(p, r), pq + delta(q, r) + 1e-12);
      // Oracle: sine of the angle between the lines.
      const double c = std::abs(p.dot(q)) / (p.norm() * q.norm());
      EXPECT_NEAR(pq, std::sqrt(std::max(0.0, 1 - c * c)), 1e-7);
    }
  }
}

TEST(Delta, OrthogonalInvariance) {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 100; ++t) {
    const Vector p = random_vec(gen, 3), q = random_vec(gen, 3);
    const Matrix o = Eigen::HouseholderQR<Matrix>(Matrix::Random(3, 3)).householderQ();
    EXPECT_NEAR(delta(Vector(o * p), Vector(o * q)), delta(p, q), 1e-12);
  }
}

TEST(Act, Examples) {
  const ProjectivePoint p(vec2(0.6, 0.8));
  EXPECT_TRUE(act(Matrix::Identity(2, 2), p) == p);
  EXPECT_TRUE(act(2 * Matrix::Identity(2, 2), p) == p);
  EXPECT_TRUE(act(rotation(M_PI / 2), ProjectivePoint(vec2(1, 0))) == ProjectivePoint(vec2(0, 1)));
}

TEST(XiA, Examples) {
  const auto k = one_state();
  const Edge e{0, 0};
  std::mt19937_64 gen(3);
  const auto rot = Cocycle::constant(k, rotation(0.4));
  const auto three = Cocycle::constant(k, 3 * Matrix::Identity(2, 2));
  for (int t = 0; t < 10; ++t) {
    const ProjectivePoint p(random_vec(gen, 2));
    EXPECT_NEAR(xi_A(rot, e, p), 0.0, 1e-15);
    EXPECT_NEAR(xi_A(three, e, p), std::log(3.0), 1e-15);
  }
  EXPECT_NEAR(xi_A(Cocycle::constant(k, diag2(2, 0.5)), e, ProjectivePoint(vec2(1, 0))), std::log(2.0), 1e-15);
}

TEST(AngleGrid, Offset) {
  const auto g = angle_grid(4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_NEAR(ProjectivePoint(g[0]).angle(), M_PI / 8, 1e-14);
  EXPECT_NEAR(ProjectivePoint(g[3]).angle(), 7 * M_PI / 8, 1e-14);
}

TEST(Kappa, DeterministicMatchesGridOracle) {
  const auto k = one_state();
  Matrix m(2, 2);
  m << 2, 1, 0.3, 0.8;
  const auto a = Cocycle::constant(k, m);
  auto b = small_budget();
  b.grid_resolution = 60;
  for (double alpha : {0.1, 0.5, 1.0}) {
    for (std::size_t n : {1, 3}) {
      Matrix mn = Matrix::Identity(2, 2);
      for (std::size_t i = 0; i < n; ++i) mn = m * mn;
      const auto grid = angle_grid(b.grid_resolution);
      double oracle = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = i + 1; j < grid.size(); ++j)
          oracle = std::max(oracle, std::pow(delta(Vector(mn * grid[i]), Vector(mn * grid[j])) /
                                                 delta(grid[i], grid[j]),
                                             alpha));
      const auto est = kappa(a, k, alpha, n, b, 1);
      EXPECT_NEAR(est.value, oracle, 1e-10 * oracle);
      EXPECT_NEAR(est.std_error, 0.0, 1e-10 * oracle);
    }
  }
}

TEST(Kappa, IsometryAndScalar) {
  std::mt19937_64 gen(4);
  const auto k = random_positive_kernel(3, gen);
  const auto rot = Cocycle::from_function(k, 2, [](State i, State j) {
    return rotation(0.3 + static_cast<double>(i) - 0.7 * static_cast<double>(j));
  });
  const auto est = kappa(rot, k, 0.5, 2, small_budget(), 2);
  EXPECT_NEAR(est.value, 1.0, 3 * est.std_error + 1e-12);
  const auto scal = Cocycle::from_function(k, 3, [](State i, State j) {
    return Matrix(static_cast<double>(1 + i + 2 * j) * Matrix::Identity(3, 3));
  });
  const auto s = kappa(scal, k, 0.5, 2, small_budget(), 2);
  EXPECT_NEAR(s.value, 1.0, 1e-12);
  EXPECT_GT(s.pairs_sampled, 0u);
}

TEST(Kappa, LemmaCeiling) {
  std::mt19937_64 gen(5);
  const auto k = random_positive_kernel(2, gen);
  const auto a = rotation_stretch(k, 3.0);
  const double ceiling = std::max(a.norm_sup(), a.inv_norm_sup());
  for (std::size_t n : {1, 2, 4}) {
    const auto est = kappa(a, k, 1.0 / (4.0 * static_cast<double>(n)), n, small_budget(), 3);
    EXPECT_LE(est.value, ceiling + 3 * est.std_error);
  }
}

TEST(Kappa, SubMultiplicative) {
  std::mt19937_64 gen(6);
  const auto k = random_positive_kernel(2, gen);
  const auto a = rotation_stretch(k, 1.6);
  const double alpha = 0.5;
  auto b = small_budget();
  b.trajectories = 400;
  std::vector<ContractionEstimate> est;
  for (std::size_t n : {1, 2, 3}) est.push_back(kappa(a, k, alpha, n, b, 7));
  const auto check = [&](const ContractionEstimate& whole, const ContractionEstimate& x, const ContractionEstimate& y) {
    const double rhs = x.value * y.value;
    const double se = std::sqrt(whole.std_error * whole.std_error + std::pow(x.std_error * y.value, 2) +
                                std::pow(y.std_error * x.value, 2));
    EXPECT_LE(whole.value, rhs + 3 * se);
  };
  check(est[1], est[0], est[0]);
  check(est[2], est[0], est[1]);
}

TEST(Kappa, HigherDimension) {
  std::mt19937_64 gen(7);
  const auto k = random_positive_kernel(2, gen);
  const auto a = Cocycle::from_function(k, 3, [](State i, State j) {
    Matrix m = Matrix::Identity(3, 3);
    m(0, 0) = 2.0 + static_cast<double>(i);
    m(2, 2) = 0.5;
    m(0, 1) = 0.3 * static_cast<double>(j);
    return m;
  });
  const auto est = kappa(a, k, 0.2, 2, small_budget(), 9);
  EXPECT_TRUE(std::isfinite(est.value));
  EXPECT_GT(est.value, 0.0);
  EXPECT_NE(est.sup_over.find("random pairs"), std::string::npos);
}

TEST(Kappa, Preconditions) {
  const auto k = one_state();
  const auto a = Cocycle::constant(k, diag2(2, 1));
  EXPECT_THROW(kappa(a, k, 0.0, 1, small_budget(), 0), Error);
  EXPECT_THROW(kappa(a, k, 1.5, 1, small_budget(), 0), Error);
  EXPECT_THROW(kappa(a, k, 0.5, 0, small_budget(), 0), Error);
}

TEST(Horizon, RefusesIsometryAndScalar) {
  std::mt19937_64 gen(8);
  const auto k = random_positive_kernel(2, gen);
  const auto rot = Cocycle::from_function(k, 2, [](State i, State j) {
    return rotation(0.3 + static_cast<double>(i + j));
  });
  const auto scal = Cocycle::constant(k, 2 * Matrix::Identity(2, 2));
  for (const auto* a : {&rot, &scal}) {
    try {
      contraction_horizon(*a, k, small_budget(), 1);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::NoContractionWithinHorizon);
    }
    const auto rep = contraction_horizon_report(*a, k, small_budget(), 1);
    EXPECT_EQ(rep.n0, 0u);
    EXPECT_NEAR(rep.best, 0.0, 1e-9);
  }
}

TEST(Horizon, FindsContractionForIrreducibleStretch) {
  std::mt19937_64 gen(9);
  const auto k = random_positive_kernel(2, gen);
  const auto a = rotation_stretch(k, 3.0);
  auto b = small_budget();
  b.horizon_cap = 32;
  const auto rep = contraction_horizon_report(a, k, b, 4);
  ASSERT_GT(rep.n0, 0u);
  EXPECT_LE(rep.sup_log_ratio.back(), -1.0);
  EXPECT_EQ(rep.sup_log_ratio.size(), rep.n0);
}
