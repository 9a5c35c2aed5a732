// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cocyclab/cocycle.hpp"
#include "cocyclab/lyapunov.hpp"
#include "cocyclab/markov.hpp"
#include "cocyclab/projective.hpp"

namespace cocyclab {

enum class IrreducibilityVerdict { IrreducibleHeuristic, ReducibleWitness, Inconclusive };

std::string to_string(IrreducibilityVerdict v);

struct IrreducibilityReport {
  IrreducibilityVerdict verdict = IrreducibilityVerdict::Inconclusive;
  /// Orthonormal basis of V(s) per state when verdict is ReducibleWitness.
  std::vector<Matrix> witness;
  /// Invariance residual of the witness, or the smallest residual among all
  /// rejected candidates.
  double residual = 0.0;
  std::size_t cycles_used = 0;
  std::size_t candidates_tested = 0;
  std::string reason;
};

/// Searches for an invariant subspace family among the eigen-structure of
/// products along simple cycles through state 0, transported to the other
/// states along a BFS spanning tree.
IrreducibilityReport irreducibility_test(const Cocycle& a, const MarkovKernel& kernel,
                                         std::size_t max_cycles = 64);

/// max over edges (i,j) of ||(I - P_{V(j)}) A(i,j) P_{V(i)}|| / ||A(i,j)||
/// for bases V(s) given per state.
double invariance_residual(const Cocycle& a, const std::vector<Matrix>& bases);

/// The same test run on wedge_k A for k = 1..m-1.
std::vector<IrreducibilityReport> total_irreducibility(const Cocycle& a, const MarkovKernel& kernel,
                                                       std::size_t max_cycles = 64);

struct ScanOptions {
  /// Trajectories and length for the top-direction flag distance; 0
  /// samples disables it.
  std::size_t flag_samples = 64;
  std::size_t flag_n = 256;
};

struct ScanRow {
  double t = 0.0;
  double d_inf = 0.0;
  Vector L_diff;
  Vector L_stderr;
  double L1_diff = 0.0;
  double L1_stderr = 0.0;
  /// NaN when the top direction is not defined.
  double flag_dist = 0.0;
  /// Row used in the exponent fit (|L1 diff| > 5 stderr).
  bool pass = false;
};

struct ContinuityScan {
  std::vector<double> t_grid;
  std::vector<ScanRow> rows;
  std::optional<double> fitted_exponent;
  double raw_exponent = 0.0;
  double r2 = 0.0;
  std::size_t rows_fitted = 0;
  std::string note;
};

/// Spectra of A + t D over the grid with common random numbers; log-log fit
/// of |L1(B) - L1(A)| against d_inf(A, B).
ContinuityScan continuity_scan(const Cocycle& a, const MarkovKernel& kernel, const MatrixField& direction,
                               const std::vector<double>& t_grid, const LyapunovParams& params,
                               const ScanOptions& options = {});

struct GapProbeParams {
  double alpha = 0.05;
  /// Base horizon; computed by contraction_horizon when absent.
  std::optional<std::size_t> n0;
  SamplingBudget budget;
  LyapunovParams lyapunov;
  /// Probes moving A toward these cocycles by at most `radius` in d_inf.
  std::vector<Cocycle> targets;
};

struct GapProbe {
  double d_inf = 0.0;
  double kappa = 0.0;
  double kappa_stderr = 0.0;
  double gap_margin = 0.0;
  bool gap_resolved = false;
  bool pass = false;
  std::string note;
};

struct GapStabilityReport {
  std::size_t n0 = 0;
  double alpha = 0.0;
  std::vector<GapProbe> probes;
  double pass_fraction = 0.0;
  std::string note;
};

/// Random B with d_inf(A, B) = radius (plus steps toward the targets);
/// each must keep kappa(alpha, n0) < 1 and a resolved L1 > L2 gap.
GapStabilityReport gap_stability_probe(const Cocycle& a, const MarkovKernel& kernel, double radius,
                                       std::size_t n_probes, const GapProbeParams& params, std::uint64_t seed);

}  // namespace cocyclab
