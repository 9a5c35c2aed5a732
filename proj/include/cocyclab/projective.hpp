// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cocyclab/cocycle.hpp"
#include "cocyclab/linalg.hpp"
#include "cocyclab/markov.hpp"

namespace cocyclab {

/// A line in R^m stored as a unit vector whose first nonzero coordinate is
/// positive.
class ProjectivePoint {
 public:
  explicit ProjectivePoint(const Vector& v);

  /// Line at angle theta in R^2.
  static ProjectivePoint from_angle(double theta);

  const Vector& rep() const noexcept { return rep_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(rep_.size()); }
  /// Angle in [0, pi) for m = 2.
  double angle() const;

  bool operator==(const ProjectivePoint& other) const;

 private:
  Vector rep_;
};

/// ||p ^ q|| / (||p|| ||q||) for arbitrary nonzero representatives.
double delta(const Vector& p, const Vector& q);
double delta(const ProjectivePoint& p, const ProjectivePoint& q);

ProjectivePoint act(const Matrix& m, const ProjectivePoint& p);

/// log ||A(x,y) p||.
double xi_A(const Cocycle& a, Edge edge, const ProjectivePoint& p);

struct SamplingBudget {
  std::size_t trajectories = 1000;
  /// Angle grid size for m = 2.
  std::size_t grid_resolution = 720;
  /// Random pairs for m >= 3.
  std::size_t random_pairs = 256;
  /// Sampled products per state whose right singular vectors seed pairs (m >= 3).
  std::size_t singular_products = 4;
  /// Pairs per state written to the diagnostics table.
  std::size_t diagnostics_top = 8;
  std::size_t horizon_cap = 64;
};

struct KappaDiagnostic {
  State x = 0;
  std::size_t p_index = 0;
  std::size_t q_index = 0;
  std::size_t n = 0;
  double alpha = 0.0;
  double ratio_mean = 0.0;
  double ratio_stderr = 0.0;
};

struct ContractionEstimate {
  double alpha = 0.0;
  std::size_t n = 0;
  double value = 0.0;
  std::size_t pairs_sampled = 0;
  std::string sup_over;
  double std_error = 0.0;
  State argmax_x = 0;
  Vector argmax_p;
  Vector argmax_q;
  std::size_t degenerate_pairs = 0;
  std::vector<KappaDiagnostic> diagnostics;
};

/// Candidate fiber points used for the sup over p != q: the offset angle
/// grid theta_k = (k + 1/2) pi / R for m = 2.
std::vector<Vector> angle_grid(std::size_t resolution);

/// Estimate of sup_{x, p != q} E_x[(delta(A^n p, A^n q) / delta(p, q))^alpha].
ContractionEstimate kappa(const Cocycle& a, const MarkovKernel& kernel, double alpha, std::size_t n,
                          const SamplingBudget& budget, std::uint64_t seed);

struct ContractionHorizon {
  /// 0 when no n up to the cap contracts.
  std::size_t n0 = 0;
  /// Estimated sup_{x,p!=q} E_x[log delta-ratio] for n = 1..n0 (or the cap).
  std::vector<double> sup_log_ratio;
  double best = 0.0;
};

/// Smallest n <= budget.horizon_cap with sup E_x[log delta-ratio] <= -1.
ContractionHorizon contraction_horizon_report(const Cocycle& a, const MarkovKernel& kernel,
                                              const SamplingBudget& budget, std::uint64_t seed);
/// As above; throws NoContractionWithinHorizon quoting the best value found.
std::size_t contraction_horizon(const Cocycle& a, const MarkovKernel& kernel,
                                const SamplingBudget& budget, std::uint64_t seed);

}  // namespace cocyclab
