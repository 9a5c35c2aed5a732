// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cocyclab/cocycle.hpp"
#include "cocyclab/markov.hpp"
#include "cocyclab/projective.hpp"
#include "cocyclab/transfer.hpp"

namespace cocyclab {

/// Function of w consecutive states, tabulated over all S^w windows at
/// construction. Window (x_0..x_{w-1}) has table index sum x_i S^{w-1-i}.
class Observable {
 public:
  using Fn = std::function<double(std::span<const State>)>;
  static constexpr std::size_t kMaxTable = std::size_t{1} << 22;

  Observable(std::size_t n_states, std::size_t window, const Fn& eval);
  Observable(std::size_t n_states, std::size_t window, std::vector<double> table);

  static Observable indicator(std::size_t n_states, State s);
  static Observable constant(std::size_t n_states, double c);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t window() const noexcept { return window_; }
  double operator()(std::span<const State> states) const;
  double at_index(std::size_t idx) const { return table_[idx]; }
  std::size_t table_size() const noexcept { return table_.size(); }
  /// max |value| over all windows.
  double sup_abs() const noexcept { return sup_abs_; }

  std::optional<double> holder_norm_hint;

 private:
  std::size_t n_states_;
  std::size_t window_;
  std::vector<double> table_;
  double sup_abs_ = 0.0;
};

/// E_mu of the observable over windows started from the stationary measure.
double exact_mean(const Observable& obs, const MarkovKernel& kernel, const StationaryMeasure& mu);

/// sum_{j<n} obs(x_j, ..., x_{j+w-1}).
double birkhoff_sum(const Observable& obs, const Trajectory& traj, std::size_t n);

/// sum_{j<n} xi_A(x_j, x_{j+1}, p_j) with p_{j+1} = A(x_j,x_{j+1}) p_j.
double fiber_birkhoff_sum(const Cocycle& a, const Trajectory& traj, std::size_t n, const ProjectivePoint& p);

struct BoundParams {
  double C = 0.0;
  double h = 0.0;
  double eps0 = 0.0;
  double t0 = 0.0;
  double C1 = 0.0;
  double delta = 0.0;
  /// k in exp(-k eps^2 n).
  double k = 0.0;
  bool degenerate_variance = false;
  std::string note;

  double bound(std::size_t n, double eps) const;
};

struct DeviationCell {
  std::size_t n = 0;
  double eps = 0.0;
  std::size_t hits = 0;
  std::size_t samples = 0;
  double emp_prob = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  double bound_value = 0.0;
};

struct DeviationTable {
  std::vector<std::size_t> n_grid;
  std::vector<double> eps_grid;
  /// n-major: cell (i, j) at i * eps_grid.size() + j.
  std::vector<DeviationCell> cells;
  double mean_ref = 0.0;
  std::optional<BoundParams> bound_params;
  std::size_t samples_per_cell = 0;

  const DeviationCell& at(std::size_t n_index, std::size_t eps_index) const {
    return cells[n_index * eps_grid.size() + eps_index];
  }
  /// Fills bound_value on every cell.
  void attach_bound(const BoundParams& params);
};

struct DeviationOptions {
  std::vector<std::size_t> n_grid{32, 64, 128, 256, 512};
  std::vector<double> eps_grid{0.02, 0.05, 0.1, 0.2};
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  /// Defaults to the stationary measure.
  std::optional<InitialCondition> initial;
};

/// Frequency of |S_n / n - center| > eps for S_n the Birkhoff sum of the
/// observable; independent samples per n, shared across eps. Wilson 95%
/// intervals; zero-hit cells report the one-sided 95% upper bound.
DeviationTable empirical_deviation(const Observable& obs, const MarkovKernel& kernel, double center,
                                   const DeviationOptions& options);

/// Same with S_n = log ||B^(n)||.
DeviationTable empirical_deviation_fiber(const Cocycle& b, const MarkovKernel& kernel, double center,
                                         const DeviationOptions& options);

/// max over probes of |n c(t) - c_n(t, probe)| for each t; c_n is the
/// finite-n cumulant generating function log E[e^{t S_n}].
using SlackFunction = std::function<std::vector<double>(std::size_t n, const std::vector<double>& ts,
                                                         const CumulantCurve& curve)>;

/// Exact slack for a window observable, probing every initial state.
SlackFunction base_slack(const Observable& obs, const MarkovKernel& kernel);

/// Monte Carlo slack for the fiber: probes x in Sigma with S_n = log||A^(n)||
/// and (x, p) for `directions` fixed unit vectors with S_n = log||A^(n) p||.
SlackFunction fiber_slack(const Cocycle& a, const MarkovKernel& kernel, std::size_t samples,
                          std::uint64_t seed, std::size_t directions = 4);

/// Cumulant curve of a window observable from the Perron root of the tilted
/// operator on admissible windows (dense and exact).
CumulantCurve base_cumulant_curve(const Observable& obs, const MarkovKernel& kernel,
                                  const CumulantOptions& options = {});

/// (C, h, eps0) for the two-sided bound P[|S_n/n - c'(0)| > eps] <= C e^{-n eps^2 / (2h)}.
/// Throws CurveInvalid when the gap was lost, c(0) != 0 or c is not
/// discretely convex.
BoundParams theoretical_bound(const CumulantCurve& curve, const SlackFunction& slack,
                              const std::vector<std::size_t>& n_set = {8, 16, 32});

struct RateFit {
  double rate = 0.0;
  double r2 = 0.0;
  std::size_t cells_used = 0;
  /// Set when r2 < 0.5: the cells show no exponential trend.
  bool flagged = false;
};

/// Least-squares slope of log emp_prob against n over cells at `eps` with
/// emp_prob in (10 / samples, 0.5). Throws InsufficientDecayData with fewer
/// than 3 such cells.
RateFit fit_rate(const DeviationTable& table, double eps);

}  // namespace cocyclab
