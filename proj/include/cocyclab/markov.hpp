// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "cocyclab/linalg.hpp"
#include "cocyclab/rng.hpp"

namespace cocyclab {

using State = std::size_t;

struct Edge {
  State from = 0;
  State to = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Row-stochastic transition matrix on the finite state set {0..S-1}.
///
/// Construction validates the matrix: every entry in [0,1] and every row
/// summing to one within 1e-12. The support is the set of strictly positive
/// entries, stored in row-major order.
class MarkovKernel {
 public:
  static constexpr double kRowSumTolerance = 1e-12;

  explicit MarkovKernel(Matrix rows);

  static MarkovKernel identity(std::size_t n_states);

  std::size_t n_states() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
  const Matrix& rows() const noexcept { return rows_; }
  double operator()(State from, State to) const {
    return rows_(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to));
  }
  const std::vector<Edge>& support() const noexcept { return support_; }
  bool has_edge(State from, State to) const;

 private:
  Matrix rows_;
  std::vector<Edge> support_;
};

/// Probability vector mu with mu K = mu.
struct StationaryMeasure {
  Vector weights;

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights.size()); }
  double operator[](State s) const { return weights(static_cast<Eigen::Index>(s)); }
};

struct MixingProfile {
  double rho = 1.0;
  double C = 1.0;
  bool is_strongly_mixing = false;
  std::size_t horizon = 0;
  std::size_t probes_used = 0;
};

/// Either a fixed initial state or an initial distribution.
using InitialCondition = std::variant<State, Vector>;

struct Trajectory {
  std::vector<State> states;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  InitialCondition initial = State{0};

  std::size_t length() const noexcept { return states.empty() ? 0 : states.size() - 1; }
};

/// K^n for n >= 1.
MarkovKernel iterate_kernel(const MarkovKernel& kernel, std::size_t n);

/// Unique stationary measure. Throws NonUniqueStationary when the fixed
/// space of K^T has dimension greater than one.
StationaryMeasure stationary_measure(const MarkovKernel& kernel);

/// Largest modulus among the eigenvalues of K other than one copy of the
/// eigenvalue closest to 1, and the multiplicity of eigenvalue 1.
struct KernelSpectrum {
  double rho = 0.0;
  std::size_t unit_multiplicity = 0;
};
KernelSpectrum kernel_spectrum(const MarkovKernel& kernel);

/// sup_x |(K^n f)(x) - mu(f)| computed through (K - 1 mu)^n f, which keeps
/// relative accuracy when the deviation is far below machine epsilon.
double mixing_deviation(const MarkovKernel& kernel, const StationaryMeasure& mu, const Vector& f,
                        std::size_t n);

/// rho from the spectrum; C as the largest observed ratio
/// ||K^n f - mu(f) 1||_inf / (rho^n ||f||_inf) for n <= horizon over
/// `probe_count` random probes, the single-state indicators, and the exact
/// worst case over all f (the induced infinity norm of K^n - 1 mu).
MixingProfile mixing_profile(const MarkovKernel& kernel, const StationaryMeasure& mu,
                             std::size_t probe_count, std::size_t horizon = 64,
                             std::uint64_t seed = 0x5eed);

enum class DoeblinSearch { Exhaustive, SingletonsAndComplements };

/// Searches the measure family {mu, uniform} (probability measures) for one
/// satisfying K(x,A) >= 1-eps  =>  rho(A) >= eps over the searched sets A.
bool doeblin_check(const MarkovKernel& kernel, double epsilon,
                   DoeblinSearch search = DoeblinSearch::Exhaustive);

/// Inverse-CDF sampler over kernel rows; reusable across trajectories.
class TransitionSampler {
 public:
  explicit TransitionSampler(const MarkovKernel& kernel);

  State next(State from, CounterRng& rng) const;
  State draw(const InitialCondition& initial, CounterRng& rng) const;
  std::size_t n_states() const noexcept { return n_; }

 private:
  std::size_t n_;
  std::vector<double> cumulative_;
  std::vector<State> last_support_;
};

/// The stationary measure when unique, else the uniform distribution.
InitialCondition default_initial(const MarkovKernel& kernel);

/// Samples x_0..x_length. Identical arguments give identical output.
Trajectory sample_trajectory(const MarkovKernel& kernel, const InitialCondition& initial,
                             std::size_t length, std::uint64_t seed, std::uint64_t stream = 0);

/// Same as above but reusing a prepared sampler.
Trajectory sample_trajectory(const TransitionSampler& sampler, const InitialCondition& initial,
                             std::size_t length, std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace cocyclab
