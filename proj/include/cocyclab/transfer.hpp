// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "cocyclab/cocycle.hpp"
#include "cocyclab/linalg.hpp"
#include "cocyclab/markov.hpp"
#include "cocyclab/projective.hpp"

namespace cocyclab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Discretization of Sigma x P(R^m): every state carries the same fiber
/// point set. For m = 2 the points are the offset angle grid
/// theta_k = (k + 1/2) pi / R; for m >= 3 they are a fixed Halton-based
/// quasi-random set.
class BundleGrid {
 public:
  BundleGrid(std::size_t n_states, std::size_t dim, std::size_t resolution);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t resolution() const noexcept { return points_.size(); }
  std::size_t size() const noexcept { return n_states_ * points_.size(); }
  const std::vector<Vector>& fiber_points() const noexcept { return points_; }
  std::size_t index(State s, std::size_t k) const noexcept { return s * points_.size() + k; }

 private:
  std::size_t n_states_;
  std::size_t dim_;
  std::vector<Vector> points_;
};

struct DiscretizedOperator {
  SparseMatrix matrix;
  double t = 0.0;
  std::string interpolation;
  std::size_t n_states = 0;
  std::size_t resolution = 0;
};

struct EigenResult {
  double lambda = 0.0;
  /// Right eigenvector with grid-average 1.
  Vector v;
  /// Left eigenvector normalized so that left . v = 1.
  Vector left;
  double gap_sigma = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
};

struct CumulantOptions {
  double t_max = 0.5;
  /// Odd number of grid points so that t = 0 is on the grid.
  std::size_t points = 21;
  /// Gap-loss threshold: gap_sigma >= 1 - gap_tolerance counts as lost.
  double gap_tolerance = 1e-6;
  /// When false a curve with lost gap is returned with valid = false.
  bool throw_on_gap_loss = true;
};

struct CumulantCurve {
  std::vector<double> t_grid;
  std::vector<double> lambda_vals;
  std::vector<double> c_vals;
  std::vector<double> gap_sigmas;
  double c1_at_0 = 0.0;
  double c2_at_0 = 0.0;
  double gap_sigma = 0.0;
  double h_recommended = 0.0;
  bool valid = true;
  std::string note;
};

struct RatioEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// Q_{A,t}: row (y, p_i) sends mass K(y,z) ||A(y,z) p_i||^t to the fiber
/// neighbours of A(y,z) p_i over z (linear in angle for m = 2, nearest
/// point for m >= 3).
DiscretizedOperator discretize_QA(const Cocycle& a, const MarkovKernel& kernel, const BundleGrid& grid,
                                  double t, double t_max = 0.5);

/// Dominant eigenpair by power iteration from the all-ones vector, plus
/// |lambda_2| / lambda from a deflated power iteration. Throws
/// SlowConvergence when the residual stays above 1e-10 after 1e5 steps.
EigenResult max_eigen(const DiscretizedOperator& op);

/// Builds the curve from a function returning (lambda, gap_sigma) at t.
CumulantCurve make_cumulant_curve(const std::function<std::pair<double, double>(double)>& eval,
                                  const CumulantOptions& options);

CumulantCurve cumulant_curve(const Cocycle& a, const MarkovKernel& kernel, const BundleGrid& grid,
                             const CumulantOptions& options = {});

/// E_mu[e^{t S_{n+1}}] / E_mu[e^{t S_n}] with S_n = log ||A^(n) p_0||,
/// x_0 ~ mu and p_0 uniform. Throws VarianceBlowup when either average has
/// relative standard error above 0.2.
RatioEstimate lambda_ratio_mc(const Cocycle& a, const MarkovKernel& kernel, double t, std::size_t n,
                              std::size_t replicas, std::uint64_t seed, double t_max = 0.5);

/// Dominant left eigenvector of the t = 0 operator as a probability vector
/// over Sigma x grid. Throws GapLost when the gap is not there.
Vector stationary_bundle_measure(const DiscretizedOperator& op);

}  // namespace cocyclab
