// SPDX-License-Identifier: Apache-2.0
#include "cocyclab/ldt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cocyclab/errors.hpp"
#include "cocyclab/parallel.hpp"
#include "cocyclab/rng.hpp"
#include "cocyclab/stats.hpp"
#include "fast_path.hpp"

namespace cocyclab {
namespace {

constexpr std::uint64_t kTagDeviation = 0x646576;  // "dev"
constexpr std::uint64_t kTagSlack = 0x736c61;      // "sla"
constexpr std::size_t kSampleChunk = 1024;

std::size_t checked_power(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    require(r <= Observable::kMaxTable / base, Errc::InvalidArgument, "observable window table too large");
    r *= base;
  }
  return r;
}

/// Windows with every internal transition in the kernel support, the
/// conditional probability of each window given its first state, and the
/// tilted transfer matrix between them.
struct LiftedChain {
  std::size_t S = 0;
  std::size_t W = 0;
  std::vector<std::size_t> windows;
  std::vector<double> path_prob;
  std::vector<State> first;
  std::vector<State> last;
  std::vector<int> slot;

  LiftedChain(const Observable& obs, const MarkovKernel& kernel)
      : S(kernel.n_states()), W(obs.table_size()), slot(W, -1) {
    const std::size_t w = obs.window();
    std::vector<State> states(w);
    for (std::size_t idx = 0; idx < W; ++idx) {
      std::size_t rem = idx;
      for (std::size_t i = w; i-- > 0;) {
        states[i] = rem % S;
        rem /= S;
      }
      double p = 1.0;
      for (std::size_t i = 0; i + 1 < w; ++i) p *= kernel(states[i], states[i + 1]);
      if (p <= 0.0) continue;
      slot[idx] = static_cast<int>(windows.size());
      windows.push_back(idx);
      path_prob.push_back(p);
      first.push_back(states[0]);
      last.push_back(states[w - 1]);
    }
  }

  Matrix tilted(const Observable& obs, const MarkovKernel& kernel, double t) const {
    const auto n = static_cast<Eigen::Index>(windows.size());
    Matrix m = Matrix::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const std::size_t u = windows[static_cast<std::size_t>(a)];
      const double weight = std::exp(t * obs.at_index(u));
      for (State z = 0; z < S; ++z) {
        const double k = kernel(last[static_cast<std::size_t>(a)], z);
        if (k <= 0.0) continue;
        const int b = slot[(u * S + z) % W];
        m(a, b) += k * weight;
      }
    }
    return m;
  }
};

double curve_value(const CumulantCurve& curve, double t) {
  for (std::size_t k = 0; k < curve.t_grid.size(); ++k)
    if (curve.t_grid[k] == t) return curve.c_vals[k];
  throw Error(Errc::InvalidArgument, "t is not a grid point of the cumulant curve");
}

Interval cell_interval(std::size_t hits, std::size_t trials) {
  if (hits == 0) return {0.0, wilson_interval(0, trials, 1.6448536269514722).hi};
  return wilson_interval(hits, trials, 1.959963984540054);
}

DeviationTable tabulate(const std::vector<std::vector<double>>& sums, double center,
                        const DeviationOptions& options) {
  DeviationTable table;
  table.n_grid = options.n_grid;
  table.eps_grid = options.eps_grid;
  table.mean_ref = center;
  table.samples_per_cell = options.samples;
  for (std::size_t i = 0; i < options.n_grid.size(); ++i) {
    const double n = static_cast<double>(options.n_grid[i]);
    for (double eps : options.eps_grid) {
      const double threshold = n * eps;
      const double tie = 1e-9 * std::max(1.0, threshold);
      std::size_t hits = 0;
      for (double s : sums[i])
        if (std::abs(s - n * center) > threshold + tie) ++hits;
      DeviationCell cell;
      cell.n = options.n_grid[i];
      cell.eps = eps;
      cell.hits = hits;
      cell.samples = options.samples;
      cell.emp_prob = static_cast<double>(hits) / static_cast<double>(options.samples);
      const Interval iv = cell_interval(hits, options.samples);
      cell.wilson_lo = iv.lo;
      cell.wilson_hi = iv.hi;
      table.cells.push_back(cell);
    }
  }
  return table;
}

void check_options(const DeviationOptions& o) {
  require(!o.n_grid.empty() && !o.eps_grid.empty(), Errc::InvalidArgument, "empty deviation grid");
  require(o.samples >= 1, Errc::InvalidArgument, "deviation table needs samples >= 1");
  for (std::size_t n : o.n_grid) require(n >= 1, Errc::InvalidArgument, "n-grid entries must be >= 1");
  for (double e : o.eps_grid) require(e > 0.0, Errc::InvalidArgument, "eps-grid entries must be positive");
}

}  // namespace

Observable::Observable(std::size_t n_states, std::size_t window, const Fn& eval)
    : n_states_(n_states), window_(window) {
  require(n_states >= 1 && window >= 1, Errc::InvalidArgument, "observable needs states and window >= 1");
  const std::size_t size = checked_power(n_states, window);
  table_.resize(size);
  std::vector<State> states(window);
  for (std::size_t idx = 0; idx < size; ++idx) {
    std::size_t rem = idx;
    for (std::size_t i = window; i-- > 0;) {
      states[i] = rem % n_states;
      rem /= n_states;
    }
    table_[idx] = eval(states);
    require(std::isfinite(table_[idx]), Errc::InvalidArgument, "observable must be finite on every window");
    sup_abs_ = std::max(sup_abs_, std::abs(table_[idx]));
  }
}

Observable::Observable(std::size_t n_states, std::size_t window, std::vector<double> table)
    : n_states_(n_states), window_(window), table_(std::move(table)) {
  require(n_states >= 1 && window >= 1, Errc::InvalidArgument, "observable needs states and window >= 1");
  require(table_.size() == checked_power(n_states, window), Errc::ShapeMismatch,
          "observable table must have S^w entries");
  for (double v : table_) {
    require(std::isfinite(v), Errc::InvalidArgument, "observable must be finite on every window");
    sup_abs_ = std::max(sup_abs_, std::abs(v));
  }
}

Observable Observable::indicator(std::size_t n_states, State s) {
  return Observable(n_states, 1, [s](std::span<const State> w) { return w[0] == s ? 1.0 : 0.0; });
}

Observable Observable::constant(std::size_t n_states, double c) {
  return Observable(n_states, 1, [c](std::span<const State>) { return c; });
}

double Observable::operator()(std::span<const State> states) const {
  require(states.size() == window_, Errc::ShapeMismatch, "window length mismatch");
  std::size_t idx = 0;
  for (State s : states) {
    require(s < n_states_, Errc::InvalidArgument, "state out of range");
    idx = idx * n_states_ + s;
  }
  return table_[idx];
}

double exact_mean(const Observable& obs, const MarkovKernel& kernel, const StationaryMeasure& mu) {
  require(obs.n_states() == kernel.n_states() && mu.size() == kernel.n_states(), Errc::ShapeMismatch,
          "observable, kernel and measure sizes differ");
  const LiftedChain lc(obs, kernel);
  double mean = 0.0;
  for (std::size_t a = 0; a < lc.windows.size(); ++a)
    mean += mu[lc.first[a]] * lc.path_prob[a] * obs.at_index(lc.windows[a]);
  return mean;
}

double birkhoff_sum(const Observable& obs, const Trajectory& traj, std::size_t n) {
  const std::size_t w = obs.window();
  require(n == 0 || traj.states.size() >= n + w - 1,
          Errc::TrajectoryTooShort,
          "trajectory of length " + std::to_string(traj.length()) + " too short for n=" + std::to_string(n) +
              " with window " + std::to_string(w));
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += obs(std::span<const State>(traj.states.data() + j, w));
  return s;
}

double fiber_birkhoff_sum(const Cocycle& a, const Trajectory& traj, std::size_t n, const ProjectivePoint& p) {
  require(n <= traj.length(), Errc::TrajectoryTooShort, "trajectory too short for the fiber sum");
  ProjectivePoint cur = p;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Edge e{traj.states[j], traj.states[j + 1]};
    s += xi_A(a, e, cur);
    cur = act(a.at(e.from, e.to), cur);
  }
  return s;
}

double BoundParams::bound(std::size_t n, double eps) const {
  if (degenerate_variance || !(h > 0.0)) return std::numeric_limits<double>::infinity();
  return C * std::exp(-static_cast<double>(n) * eps * eps / (2.0 * h));
}

void DeviationTable::attach_bound(const BoundParams& params) {
  bound_params = params;
  for (auto& c : cells) c.bound_value = params.bound(c.n, c.eps);
}

DeviationTable empirical_deviation(const Observable& obs, const MarkovKernel& kernel, double center,
                                   const DeviationOptions& options) {
  check_options(options);
  require(obs.n_states() == kernel.n_states(), Errc::ShapeMismatch, "observable and kernel sizes differ");
  const InitialCondition initial = options.initial ? *options.initial : default_initial(kernel);
  const TransitionSampler sampler(kernel);
  const std::size_t S = kernel.n_states();
  const std::size_t w = obs.window();
  const std::size_t W = obs.table_size();
  std::vector<std::vector<double>> sums(options.n_grid.size(), std::vector<double>(options.samples));
  const std::size_t chunks = (options.samples + kSampleChunk - 1) / kSampleChunk;

  for (std::size_t i = 0; i < options.n_grid.size(); ++i) {
    const std::size_t n = options.n_grid[i];
    parallel_for(chunks, [&](std::size_t c) {
      const std::size_t end = std::min(options.samples, (c + 1) * kSampleChunk);
      for (std::size_t s = c * kSampleChunk; s < end; ++s) {
        CounterRng rng(options.seed, stream_id(kTagDeviation, i, s));
        State x = sampler.draw(initial, rng);
        std::size_t idx = x;
        for (std::size_t k = 1; k < w; ++k) {
          x = sampler.next(x, rng);
          idx = (idx * S + x) % W;
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          sum += obs.at_index(idx);
          if (j + 1 < n) {
            x = sampler.next(x, rng);
            idx = (idx * S + x) % W;
          }
        }
        sums[i][s] = sum;
      }
    });
  }
  return tabulate(sums, center, options);
}

DeviationTable empirical_deviation_fiber(const Cocycle& b, const MarkovKernel& kernel, double center,
                                         const DeviationOptions& options) {
  check_options(options);
  b.validate_against(kernel);
  const InitialCondition initial = options.initial ? *options.initial : default_initial(kernel);
  const TransitionSampler sampler(kernel);
  std::vector<std::vector<double>> sums(options.n_grid.size(), std::vector<double>(options.samples));
  const std::size_t chunks = (options.samples + kSampleChunk - 1) / kSampleChunk;

  detail::dispatch_dim(b.dim(), [&](auto dconst) {
    constexpr int D = decltype(dconst)::value;
    const detail::EdgeTable<D> table(b);
    for (std::size_t i = 0; i < options.n_grid.size(); ++i) {
      const std::size_t n = options.n_grid[i];
      parallel_for(chunks, [&](std::size_t c) {
        const std::size_t end = std::min(options.samples, (c + 1) * kSampleChunk);
        detail::Mat<D> prod = detail::identity<D>(b.dim());
        for (std::size_t s = c * kSampleChunk; s < end; ++s) {
          CounterRng rng(options.seed, stream_id(kTagDeviation, i, s));
          State x = sampler.draw(initial, rng);
          prod = detail::identity<D>(b.dim());
          double log_scale = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const State next = sampler.next(x, rng);
            prod = (table(x, next) * prod).eval();
            x = next;
            const double m = prod.cwiseAbs().maxCoeff();
            prod /= m;
            log_scale += std::log(m);
          }
          sums[i][s] = log_scale + std::log(detail::op_norm<D>(prod));
        }
      });
    }
  });
  return tabulate(sums, center, options);
}

SlackFunction base_slack(const Observable& obs, const MarkovKernel& kernel) {
  return [obs, kernel](std::size_t n, const std::vector<double>& ts, const CumulantCurve& curve) {
    const LiftedChain lc(obs, kernel);
    std::vector<double> out;
    for (double t : ts) {
      const Matrix m = lc.tilted(obs, kernel, t);
      Vector e = Vector::Ones(m.rows());
      for (std::size_t k = 0; k < n; ++k) e = (m * e).eval();
      std::vector<double> mass(kernel.n_states(), 0.0);
      for (std::size_t a = 0; a < lc.windows.size(); ++a)
        mass[lc.first[a]] += lc.path_prob[a] * e(static_cast<Eigen::Index>(a));
      const double nc = static_cast<double>(n) * curve_value(curve, t);
      double d = 0.0;
      for (double v : mass) d = std::max(d, std::abs(nc - std::log(v)));
      out.push_back(d);
    }
    return out;
  };
}

SlackFunction fiber_slack(const Cocycle& a, const MarkovKernel& kernel, std::size_t samples,
                          std::uint64_t seed, std::size_t directions) {
  require(samples >= 1, Errc::InvalidArgument, "fiber slack needs samples >= 1");
  a.validate_against(kernel);
  return [a, kernel, samples, seed, directions](std::size_t n, const std::vector<double>& ts,
                                                const CumulantCurve& curve) {
    const TransitionSampler sampler(kernel);
    const std::size_t S = kernel.n_states();
    const auto m = static_cast<Eigen::Index>(a.dim());
    std::vector<Vector> dirs;
    CounterRng dr(seed, stream_id(kTagSlack, 0xd1));
    for (std::size_t d = 0; d < directions; ++d) {
      Vector v(m);
      for (Eigen::Index i = 0; i < m; ++i) v(i) = dr.normal();
      dirs.push_back(v.normalized());
    }
    // log-values per (x, probe, sample); probe 0 is the matrix norm.
    const std::size_t probes = 1 + dirs.size();
    std::vector<std::vector<double>> logs(S * probes, std::vector<double>(samples));
    parallel_for(S, [&](std::size_t x0) {
      CounterRng rng(seed, stream_id(kTagSlack, n, x0));
      for (std::size_t s = 0; s < samples; ++s) {
        State x = x0;
        Matrix prod = Matrix::Identity(m, m);
        double log_scale = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const State next = sampler.next(x, rng);
          prod = (a.at(x, next) * prod).eval();
          x = next;
          const double sc = prod.cwiseAbs().maxCoeff();
          prod /= sc;
          log_scale += std::log(sc);
        }
        logs[x0 * probes][s] = log_scale + std::log(spectral_norm(prod));
        for (std::size_t d = 0; d < dirs.size(); ++d)
          logs[x0 * probes + 1 + d][s] = log_scale + std::log((prod * dirs[d]).norm());
      }
    });
    std::vector<double> out;
    for (double t : ts) {
      const double nc = static_cast<double>(n) * curve_value(curve, t);
      double d = 0.0;
      for (const auto& vals : logs) {
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : vals) mx = std::max(mx, t * v);
        double acc = 0.0;
        for (double v : vals) acc += std::exp(t * v - mx);
        const double cn = mx + std::log(acc / static_cast<double>(vals.size()));
        d = std::max(d, std::abs(nc - cn));
      }
      out.push_back(d);
    }
    return out;
  };
}

CumulantCurve base_cumulant_curve(const Observable& obs, const MarkovKernel& kernel,
                                  const CumulantOptions& options) {
  require(obs.n_states() == kernel.n_states(), Errc::ShapeMismatch, "observable and kernel sizes differ");
  const LiftedChain lc(obs, kernel);
  return make_cumulant_curve(
      [&](double t) {
        const Matrix m = lc.tilted(obs, kernel, t);
        if (m.rows() == 1) return std::make_pair(m(0, 0), 0.0);
        Eigen::EigenSolver<Matrix> es(m, false);
        std::vector<double> mod;
        double perron = 0.0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
          const auto ev = es.eigenvalues()(i);
          mod.push_back(std::abs(ev));
          if (std::abs(ev.imag()) < 1e-12) perron = std::max(perron, ev.real());
        }
        std::sort(mod.begin(), mod.end(), std::greater<>());
        return std::make_pair(perron, mod[1] / perron);
      },
      options);
}

BoundParams theoretical_bound(const CumulantCurve& curve, const SlackFunction& slack,
                              const std::vector<std::size_t>& n_set) {
  if (!curve.valid) throw Error(Errc::CurveInvalid, "cumulant curve lost its spectral gap: " + curve.note);
  const std::size_t P = curve.t_grid.size();
  require(P >= 3 && P % 2 == 1, Errc::CurveInvalid, "cumulant curve needs an odd grid");
  const std::size_t mid = P / 2;
  if (std::abs(curve.c_vals[mid]) > 1e-9)
    throw Error(Errc::CurveInvalid, "c(0) = " + std::to_string(curve.c_vals[mid]) + " is not 0");
  for (std::size_t k = 1; k + 1 < P; ++k) {
    if (curve.c_vals[k + 1] - 2.0 * curve.c_vals[k] + curve.c_vals[k - 1] < -1e-7)
      throw Error(Errc::CurveInvalid, "c is not convex near t=" + std::to_string(curve.t_grid[k]));
  }

  BoundParams bp;
  bp.h = curve.h_recommended;
  if (!(curve.c2_at_0 > 1e-10)) {
    bp.degenerate_variance = true;
    bp.note = "DegenerateVariance: c''(0) = " + std::to_string(curve.c2_at_0);
    return bp;
  }
  bp.k = 1.0 / (2.0 * bp.h);
  const double c1 = curve.c1_at_0;
  for (std::size_t k = 1; k <= mid; ++k) {
    const double t = curve.t_grid[mid + k];
    const double cp = curve.c_vals[mid + k] - t * c1;
    const double cm = curve.c_vals[mid - k] + t * c1;
    const double cap = bp.h * t * t / 2.0;
    if (!(cp < cap && cm < cap)) break;
    bp.t0 = t;
  }
  bp.eps0 = bp.h * bp.t0;
  if (bp.t0 == 0.0) {
    bp.note = "no grid t satisfies c(t) - t c'(0) < h t^2 / 2";
    bp.C = std::numeric_limits<double>::infinity();
    return bp;
  }

  std::vector<double> ts;
  for (double t : curve.t_grid)
    if (std::abs(t) <= bp.t0) ts.push_back(t);
  std::vector<double> abs_t(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) abs_t[k] = std::abs(ts[k]);
  std::vector<std::vector<double>> d(n_set.size());
  for (std::size_t i = 0; i < n_set.size(); ++i) {
    d[i] = slack(n_set[i], ts, curve);
    bp.C1 = std::max(bp.C1, fit_line(abs_t, d[i]).slope);
  }
  for (std::size_t i = 0; i < n_set.size(); ++i)
    for (std::size_t k = 0; k < ts.size(); ++k) bp.delta = std::max(bp.delta, d[i][k] - bp.C1 * abs_t[k]);
  bp.C = 2.0 * std::exp(bp.C1 * bp.t0 + bp.delta);
  return bp;
}

RateFit fit_rate(const DeviationTable& table, double eps) {
  std::size_t j = table.eps_grid.size();
  for (std::size_t k = 0; k < table.eps_grid.size(); ++k)
    if (table.eps_grid[k] == eps) j = k;
  require(j < table.eps_grid.size(), Errc::InvalidArgument, "eps is not on the table's grid");
  const double floor = 10.0 / static_cast<double>(table.samples_per_cell);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < table.n_grid.size(); ++i) {
    const double p = table.at(i, j).emp_prob;
    if (p > floor && p < 0.5) {
      x.push_back(static_cast<double>(table.n_grid[i]));
      y.push_back(std::log(p));
    }
  }
  if (x.size() < 3)
    throw Error(Errc::InsufficientDecayData,
                "only " + std::to_string(x.size()) + " cells with probability in (10/samples, 0.5)");
  const LineFit f = fit_line(x, y);
  return {f.slope, f.r2, x.size(), f.r2 < 0.5};
}

}  // namespace cocyclab
