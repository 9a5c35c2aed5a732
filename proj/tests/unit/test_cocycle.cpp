// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "cocyclab/cocycle.hpp"
#include "cocyclab/errors.hpp"
#include "test_support.hpp"

using namespace cocyclab;
using namespace cocyclab::testing;

namespace {
Matrix swap2() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
}  // namespace

TEST(Cocycle, RejectsSingular) {
  const auto k = one_state();
  EXPECT_THROW(Cocycle::constant(k, Matrix::Zero(2, 2)), Error);
}

TEST(Cocycle, MissingEdge) {
  const MarkovKernel k(Matrix::Constant(2, 2, 0.5));
  MatrixField f(2, 1);
  f.set(0, 0, Matrix::Ones(1, 1));
  const Cocycle a(f);
  try {
    a.validate_against(k);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingEdge);
  }
  EXPECT_THROW(a.at(1, 1), Error);
}

TEST(Product, Examples) {
  const MarkovKernel sw(swap2());
  Matrix m(2, 2);
  m << 1, 2, 0.5, 3;
  const auto c = Cocycle::constant(sw, m);
  const auto traj = sample_trajectory(sw, State{0}, 5, 0);
  EXPECT_LT((product_along(c, traj, 0).value - Matrix::Identity(2, 2)).norm(), 1e-15);
  EXPECT_LT((product_along(c, traj, 3).value - m * m * m).norm(), 1e-12);

  MatrixField f(2, 2);
  f.set(0, 1, diag2(2, 1));
  f.set(1, 0, diag2(1, 3));
  const Cocycle a(f);
  Trajectory t;
  t.states = {0, 1, 0};
  EXPECT_LT((product_along(a, t, 2).value - diag2(2, 3)).norm(), 1e-15);
  EXPECT_THROW(product_along(a, t, 3), Error);
}

TEST(Product, OrderIsLeftMultiplication) {
  const MarkovKernel sw(swap2());
  Matrix p(2, 2), q(2, 2);
  p << 1, 1, 0, 1;
  q << 1, 0, 1, 1;
  MatrixField f(2, 2);
  f.set(0, 1, p);
  f.set(1, 0, q);
  Trajectory t;
  t.states = {0, 1, 0};
  EXPECT_LT((product_along(Cocycle(f), t, 2).value - q * p).norm(), 1e-15);
}

TEST(Product, CocycleLaw) {
  std::mt19937_64 gen(2);
  const auto k = random_positive_kernel(3, gen);
  const auto a = Cocycle::from_function(k, 3, [&](State i, State j) {
    Matrix m = Matrix::Identity(3, 3) + 0.4 * Matrix::Random(3, 3);
    m(0, 0) += static_cast<double>(i) - static_cast<double>(j);
    return m;
  });
  const auto traj = sample_trajectory(k, State{0}, 40, 9);
  for (std::size_t n : {1, 5, 17}) {
    for (std::size_t l : {1, 4, 20}) {
      const Matrix whole = product_over(a, traj.states, 0, n + l);
      const Matrix split = product_over(a, traj.states, n, l) * product_over(a, traj.states, 0, n);
      EXPECT_LT((whole - split).norm(), 1e-10 * whole.norm());
    }
  }
}

TEST(ExteriorPower, Examples) {
  const auto k = one_state();
  Matrix m = Eigen::Vector3d(2, 3, 5).asDiagonal();
  const auto a = Cocycle::constant(k, m);
  EXPECT_LT((exterior_power(a, 1).at(0, 0) - m).norm(), 1e-15);
  const auto w2 = exterior_power(a, 2);
  EXPECT_LT((w2.at(0, 0) - Matrix(Eigen::Vector3d(6, 10, 15).asDiagonal())).norm(), 1e-12);
  EXPECT_NEAR(exterior_power(a, 3).at(0, 0)(0, 0), 30.0, 1e-12);
  EXPECT_THROW(exterior_power(a, 0), Error);
  EXPECT_THROW(exterior_power(a, 4), Error);
}

TEST(ExteriorPower, TopIsDeterminant) {
  std::mt19937_64 gen(8);
  const auto k = random_positive_kernel(2, gen);
  const auto a = Cocycle::from_function(k, 3, [](State i, State j) {
    Matrix m = Matrix::Random(3, 3) + 2.0 * Matrix::Identity(3, 3);
    m(1, 2) += static_cast<double>(i + 2 * j);
    return m;
  });
  const auto top = exterior_power(a, 3);
  for (const Edge& e : a.edges()) EXPECT_NEAR(top.at(e.from, e.to)(0, 0), a.at(e.from, e.to).determinant(), 1e-10);
}

TEST(Perturb, Examples) {
  const MarkovKernel k(Matrix::Constant(2, 2, 0.5));
  const auto a = rotation_stretch(k);
  EXPECT_EQ(d_inf(perturb(a, a.field(), 0.0), a), 0.0);
  const auto doubled = perturb(a, a.field(), 1.0);
  for (const Edge& e : a.edges()) EXPECT_LT((doubled.at(e.from, e.to) - 2 * a.at(e.from, e.to)).norm(), 1e-14);
  EXPECT_NEAR(d_inf(a, doubled), a.norm_sup(), 1e-12);
  const auto id_field = MatrixField::constant(k, Matrix::Identity(2, 2));
  EXPECT_NEAR(d_inf(a, perturb(a, id_field, -0.3)), 0.3, 1e-12);
  try {
    perturb(Cocycle::constant(k, Matrix::Identity(2, 2)), id_field, -1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularPerturbation);
  }
}

TEST(DInf, Examples) {
  const auto k = one_state();
  const auto a = Cocycle::constant(k, diag2(2, 1));
  const auto b = Cocycle::constant(k, diag2(1, 1));
  EXPECT_EQ(d_inf(a, a), 0.0);
  EXPECT_NEAR(d_inf(a, b), 1.0, 1e-14);
  const auto c = Cocycle::constant(k, Matrix::Identity(3, 3));
  try {
    d_inf(a, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ShapeMismatch);
  }
}

TEST(NormBounds, Examples) {
  const auto k = one_state();
  const auto rot = Cocycle::constant(k, rotation(0.3));
  const auto [g, l] = iterate_norm_bounds(rot, 5);
  EXPECT_NEAR(g, 1.0, 1e-12);
  EXPECT_NEAR(l, 5.0, 1e-12);
  const auto two = Cocycle::constant(k, diag2(2, 1));
  EXPECT_NEAR(iterate_norm_bounds(two, 3).first, 8.0, 1e-12);
  EXPECT_NEAR(iterate_norm_bounds(two, 1).second, 1.0, 1e-12);
}

TEST(NormBounds, LipschitzHolds) {
  std::mt19937_64 gen(4);
  const auto k = random_positive_kernel(3, gen);
  const auto a = rotation_stretch(k, 1.5);
  const auto dir = MatrixField::from_function(k, 2, [](State i, State j) {
    Matrix m(2, 2);
    m << 0.1 * static_cast<double>(i), 0.05, -0.02 * static_cast<double>(j), 0.07;
    return m;
  });
  const auto b = perturb(a, dir, 0.3);
  const auto traj = sample_trajectory(k, State{0}, 12, 1);
  for (std::size_t n = 1; n <= 12; ++n) {
    const Matrix pa = product_along(a, traj, n).value, pb = product_along(b, traj, n).value;
    const auto [grow, lip] = iterate_norm_bounds(a, n, &b);
    Eigen::JacobiSVD<Matrix> svd(pa);
    EXPECT_LE(svd.singularValues()(0), grow * (1 + 1e-12));
    Eigen::JacobiSVD<Matrix> dsvd(pa - pb);
    EXPECT_LE(dsvd.singularValues()(0), lip * d_inf(a, b) * (1 + 1e-12));
  }
}
