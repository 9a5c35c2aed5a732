// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "cocyclab/errors.hpp"
#include "cocyclab/projective.hpp"
#include "cocyclab/transfer.hpp"
#include "test_support.hpp"

using namespace cocyclab;
using namespace cocyclab::testing;

namespace {
Vector row_sums(const SparseMatrix& m) { return m * Vector::Ones(m.cols()); }

CumulantOptions quick(std::size_t points = 7, double t_max = 0.3) {
  CumulantOptions o;
  o.points = points;
  o.t_max = t_max;
  return o;
}
}  // namespace

TEST(Discretize, MarkovAtZero) {
  const auto k = two_state(0.4, 0.3);
  const auto a = rotation_stretch(k);
  const BundleGrid grid(2, 2, 90);
  const auto op = discretize_QA(a, k, grid, 0.0);
  EXPECT_EQ(op.matrix.rows(), 180);
  EXPECT_LT((row_sums(op.matrix).array() - 1.0).abs().maxCoeff(), 1e-10);
  for (int i = 0; i < op.matrix.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(op.matrix, i); it; ++it) EXPECT_GE(it.value(), 0.0);
}

TEST(Discretize, ScalarRowsCarryWeights) {
  const auto k = two_state(0.4, 0.3);
  auto c = [](State i, State j) { return 1.0 + static_cast<double>(i) + 0.5 * static_cast<double>(j); };
  const auto a = Cocycle::from_function(k, 2, [&](State i, State j) { return Matrix(c(i, j) * Matrix::Identity(2, 2)); });
  const BundleGrid grid(2, 2, 36);
  const double t = 0.3;
  const auto op = discretize_QA(a, k, grid, t);
  const Vector rs = row_sums(op.matrix);
  for (State y = 0; y < 2; ++y) {
    const double expect = k(y, 0) * std::pow(c(y, 0), t) + k(y, 1) * std::pow(c(y, 1), t);
    for (std::size_t p = 0; p < 36; ++p) EXPECT_NEAR(rs(static_cast<Eigen::Index>(grid.index(y, p))), expect, 1e-12);
  }
}

TEST(Discretize, IdentityIsKernelTensorIdentity) {
  const auto k = two_state(0.4, 0.3);
  const auto a = Cocycle::constant(k, Matrix::Identity(2, 2));
  const BundleGrid grid(2, 2, 24);
  const Matrix dense = Matrix(discretize_QA(a, k, grid, 0.0).matrix);
  for (State y = 0; y < 2; ++y)
    for (State z = 0; z < 2; ++z)
      for (std::size_t p = 0; p < 24; ++p)
        for (std::size_t q = 0; q < 24; ++q)
          EXPECT_NEAR(dense(static_cast<Eigen::Index>(grid.index(y, p)), static_cast<Eigen::Index>(grid.index(z, q))),
                      p == q ? k(y, z) : 0.0, 1e-12);
}

TEST(Discretize, RejectsLargeT) {
  const auto k = one_state();
  const auto a = Cocycle::constant(k, diag2(2, 0.5));
  EXPECT_THROW(discretize_QA(a, k, BundleGrid(1, 2, 8), 0.6), Error);
}

TEST(MaxEigen, TrivialAtZero) {
  const auto k = two_state(0.4, 0.3);
  const auto a = rotation_stretch(k);
  const BundleGrid grid(2, 2, 180);
  const auto e = max_eigen(discretize_QA(a, k, grid, 0.0));
  EXPECT_NEAR(e.lambda, 1.0, 1e-9);
  EXPECT_LT((e.v.array() - 1.0).abs().maxCoeff(), 1e-8);
  EXPECT_LT(e.gap_sigma, 1.0);
  EXPECT_NEAR(e.left.dot(e.v), 1.0, 1e-10);
}

TEST(MaxEigen, ScalarOneState) {
  const auto k = one_state();
  const auto a = Cocycle::constant(k, 3.0 * Matrix::Identity(2, 2));
  const BundleGrid grid(1, 2, 16);
  for (double t : {-0.4, 0.1, 0.5}) EXPECT_NEAR(max_eigen(discretize_QA(a, k, grid, t)).lambda, std::pow(3.0, t), 1e-10);
}

TEST(MaxEigen, MatchesDenseSolver) {
  const auto k = two_state(0.4, 0.3);
  const auto a = rotation_stretch(k, 1.7);
  const BundleGrid grid(2, 2, 40);
  const auto op = discretize_QA(a, k, grid, 0.25);
  const Eigen::EigenSolver<Matrix> es{Matrix(op.matrix)};
  double best = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) best = std::max(best, std::abs(es.eigenvalues()(i)));
  EXPECT_NEAR(max_eigen(op).lambda, best, 1e-8 * best);
}

TEST(Cumulant, BasicShape) {
  const auto k = two_state(0.4, 0.3);
  const auto a = rotation_stretch(k);
  const auto curve = cumulant_curve(a, k, BundleGrid(2, 2, 180), quick());
  ASSERT_TRUE(curve.valid);
  const std::size_t mid = curve.t_grid.size() / 2;
  EXPECT_EQ(curve.t_grid[mid], 0.0);
  EXPECT_NEAR(curve.c_vals[mid], 0.0, 1e-9);
  for (std::size_t i = 1; i + 1 < curve.c_vals.size(); ++i)
    EXPECT_GE(curve.c_vals[i + 1] - 2 * curve.c_vals[i] + curve.c_vals[i - 1], -1e-7);
  for (std::size_t i = 0; i < curve.c_vals.size(); ++i)
    EXPECT_GE(curve.c_vals[i], curve.t_grid[i] * curve.c1_at_0 - 1e-6);
  EXPECT_GT(curve.c2_at_0, 0.0);
  EXPECT_NEAR(curve.h_recommended, 1.25 * curve.c2_at_0, 1e-15);
}

TEST(Cumulant, DiagonalSlopeIsTopExponent) {
  const auto k = one_state();
  const auto a = Cocycle::constant(k, diag2(2, 0.5));
  const auto curve = cumulant_curve(a, k, BundleGrid(1, 2, 720), quick(11, 0.25));
  EXPECT_NEAR(curve.c1_at_0, std::log(2.0), 1e-3);
}

TEST(Cumulant, GapLossReported) {
  const auto k = one_state();
  const auto a = Cocycle::constant(k, rotation(0.0) * 2.0);
  auto o = quick();
  EXPECT_THROW(cumulant_curve(a, k, BundleGrid(1, 2, 32), o), Error);
  o.throw_on_gap_loss = false;
  const auto curve = cumulant_curve(a, k, BundleGrid(1, 2, 32), o);
  EXPECT_FALSE(curve.valid);
  EXPECT_FALSE(curve.note.empty());
}

TEST(RatioMC, Examples) {
  const auto k = two_state(0.4, 0.3);
  const auto a = rotation_stretch(k);
  const auto r0 = lambda_ratio_mc(a, k, 0.0, 32, 100, 1);
  EXPECT_EQ(r0.value, 1.0);
  const auto one = one_state();
  const auto s = Cocycle::constant(one, 3.0 * Matrix::Identity(2, 2));
  EXPECT_NEAR(lambda_ratio_mc(s, one, 0.3, 32, 100, 1).value, std::pow(3.0, 0.3), 1e-12);
}

TEST(RatioMC, AgreesWithMaxEigen) {
  const auto k = two_state(0.4, 0.3);
  const auto a = rotation_stretch(k);
  const BundleGrid grid(2, 2, 360);
  for (double t : {-0.2, 0.2}) {
    const double lam = max_eigen(discretize_QA(a, k, grid, t)).lambda;
    const auto mc = lambda_ratio_mc(a, k, t, 64, 20000, 5);
    EXPECT_NEAR(mc.value, lam, 3 * mc.stderr_ + 5e-4) << "t=" << t;
  }
}

TEST(BundleMeasure, ContractingDiagonal) {
  const auto k = one_state();
  const auto a = Cocycle::constant(k, diag2(4, 0.25));
  const BundleGrid grid(1, 2, 720);
  const Vector m = stationary_bundle_measure(discretize_QA(a, k, grid, 0.0));
  EXPECT_NEAR(m.sum(), 1.0, 1e-10);
  double near = 0.0;
  for (std::size_t i = 0; i < 720; ++i) {
    const double th = ProjectivePoint(grid.fiber_points()[i]).angle();
    if (std::min(th, M_PI - th) < 0.1) near += m(static_cast<Eigen::Index>(i));
  }
  EXPECT_GE(near, 0.99);
}

TEST(BundleMeasure, MarginalIsStationary) {
  const auto k = two_state(0.4, 0.3);
  const auto a = rotation_stretch(k);
  const BundleGrid grid(2, 2, 120);
  const Vector m = stationary_bundle_measure(discretize_QA(a, k, grid, 0.0));
  const Vector mu = stationary_by_power(k);
  EXPECT_NEAR(m.head(120).sum(), mu(0), 1e-8);
  EXPECT_NEAR(m.tail(120).sum(), mu(1), 1e-8);
}

TEST(BundleMeasure, IdentityHasNoGap) {
  const auto k = two_state(0.4, 0.3);
  const auto a = Cocycle::constant(k, Matrix::Identity(2, 2));
  const BundleGrid grid(2, 2, 30);
  const auto op = discretize_QA(a, k, grid, 0.0);
  try {
    stationary_bundle_measure(op);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::GapLost);
  }
  // mu x uniform is still invariant.
  const Vector mu = stationary_by_power(k);
  Vector prod(60);
  for (std::size_t i = 0; i < 60; ++i) prod(static_cast<Eigen::Index>(i)) = mu(static_cast<Eigen::Index>(i / 30)) / 30.0;
  const Vector moved = op.matrix.transpose() * prod;
  EXPECT_LT((moved - prod).cwiseAbs().maxCoeff(), 1e-12);
}
