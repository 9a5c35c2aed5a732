// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cocyclab/cocycle.hpp"
#include "cocyclab/markov.hpp"
#include "cocyclab/projective.hpp"

namespace cocyclab {

struct LyapunovParams {
  std::size_t n = 10000;
  std::size_t replicas = 64;
  std::uint64_t seed = 0;
  /// Re-orthonormalize every `qr_stride` steps.
  std::size_t qr_stride = 1;
  /// Block length for the wedge estimator.
  std::size_t wedge_block = 4;
  /// Initial distribution; defaults to the stationary measure (uniform if
  /// the stationary measure is not unique).
  std::optional<InitialCondition> initial;
};

struct LyapunovSpectrum {
  /// L_1 >= ... >= L_m.
  Vector exponents;
  Vector stderr_;
  std::size_t n_used = 0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  /// Per-replica sorted exponents.
  std::vector<Vector> replica_values;
  /// Per-replica (1/n) log|det A^(n)|.
  std::vector<double> replica_logdet;
};

struct WedgeEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::vector<double> replica_values;
};

struct GapPattern {
  /// 1-based indices j with a resolved gap L_j > L_{j+1}.
  std::vector<std::size_t> tau;
  /// L_j - L_{j+1} for j = 1..m-1.
  std::vector<double> margins;
  std::vector<bool> resolved;
};

struct FlagDistanceReport {
  std::vector<std::size_t> tau;
  double value = 0.0;
  std::size_t samples = 0;
};

/// Lyapunov spectrum by QR re-orthonormalization along `replicas`
/// independent trajectories of length n.
LyapunovSpectrum lyapunov_spectrum_qr(const Cocycle& a, const MarkovKernel& kernel,
                                      const LyapunovParams& params);

/// Lambda_j = L_1 + ... + L_j from (1/n) log ||wedge_j A^(n)||. The wedge of
/// each block product of `wedge_block` steps is chained with running
/// rescaling; the trajectories coincide with those of the QR estimator
/// under the same seed.
WedgeEstimate lambda_via_wedge(const Cocycle& a, const MarkovKernel& kernel, std::size_t j,
                               const LyapunovParams& params);

/// A gap is resolved when L_j - L_{j+1} > 4 sqrt(se_j^2 + se_{j+1}^2) and
/// exceeds the absolute floor 1e-8.
GapPattern detect_gaps(const LyapunovSpectrum& spec);

/// Top left singular direction of A^(n) along the trajectory. Throws
/// GapUnresolved when sigma_1 and sigma_2 coincide to 1e-10 relative.
ProjectivePoint top_oseledets_direction(const Cocycle& a, const MarkovKernel& kernel,
                                        const Trajectory& traj, std::size_t n);

/// Same, but first requires a resolved gap at index 1 in `gaps`.
ProjectivePoint top_oseledets_direction(const Cocycle& a, const MarkovKernel& kernel,
                                        const Trajectory& traj, std::size_t n, const GapPattern& gaps);

/// Top directions along `samples` trajectories of length n from x_0 ~ mu.
/// Trajectories depend only on (kernel, seed), so two cocycles on the same
/// kernel see the same base paths.
std::vector<ProjectivePoint> sampled_top_directions(const Cocycle& a, const MarkovKernel& kernel,
                                                    std::size_t n, std::size_t samples,
                                                    std::uint64_t seed);

/// Average over aligned samples of the tau-flag distance: the largest sine
/// of principal angles among the spans of the first tau_j columns of each
/// sample's basis matrix.
FlagDistanceReport flag_distance(const std::vector<Matrix>& f1, const std::vector<Matrix>& f2,
                                 const std::vector<std::size_t>& tau);

/// tau = (1) specialization on sampled top directions.
FlagDistanceReport flag_distance(const std::vector<ProjectivePoint>& f1,
                                 const std::vector<ProjectivePoint>& f2);

}  // namespace cocyclab
