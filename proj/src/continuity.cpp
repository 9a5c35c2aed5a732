// SPDX-License-Identifier: Apache-2.0
#include "cocyclab/continuity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "cocyclab/errors.hpp"
#include "cocyclab/rng.hpp"
#include "cocyclab/stats.hpp"

namespace cocyclab {
namespace {

constexpr std::uint64_t kTagProbe = 0x70726f6265;  // "probe"
constexpr double kWitnessTol = 1e-8;
constexpr double kRejectMargin = 1e-4;

bool all_reachable(const MarkovKernel& k, bool forward) {
  const std::size_t S = k.n_states();
  std::vector<bool> seen(S, false);
  std::vector<State> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const State s = stack.back();
    stack.pop_back();
    for (State t = 0; t < S; ++t) {
      const bool edge = forward ? k(s, t) > 0.0 : k(t, s) > 0.0;
      if (edge && !seen[t]) {
        seen[t] = true;
        stack.push_back(t);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

std::vector<std::vector<State>> simple_cycles_through_zero(const MarkovKernel& k, std::size_t max_cycles) {
  const std::size_t S = k.n_states();
  std::vector<std::vector<State>> cycles;
  std::vector<State> path{0};
  std::vector<bool> on_path(S, false);
  on_path[0] = true;
  std::function<void(State)> dfs = [&](State s) {
    for (State t = 0; t < S && cycles.size() < max_cycles; ++t) {
      if (k(s, t) <= 0.0) continue;
      if (t == 0) {
        auto c = path;
        c.push_back(0);
        cycles.push_back(std::move(c));
      } else if (!on_path[t]) {
        on_path[t] = true;
        path.push_back(t);
        dfs(t);
        path.pop_back();
        on_path[t] = false;
      }
    }
  };
  dfs(0);
  return cycles;
}

/// Real invariant blocks of P: eigenvectors of real eigenvalues and
/// (Re v, Im v) pairs of complex ones.
std::vector<Matrix> real_eigen_blocks(const Matrix& p) {
  Eigen::EigenSolver<Matrix> es(p, true);
  std::vector<Matrix> blocks;
  const auto& ev = es.eigenvalues();
  const auto& vecs = es.eigenvectors();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double scale = std::max(std::abs(ev(i)), 1e-300);
    if (std::abs(ev(i).imag()) <= 1e-10 * scale) {
      blocks.push_back(vecs.col(i).real());
    } else if (ev(i).imag() > 0.0) {
      Matrix b(p.rows(), 2);
      b.col(0) = vecs.col(i).real();
      b.col(1) = vecs.col(i).imag();
      blocks.push_back(b);
    }
  }
  return blocks;
}

bool is_scalar(const Matrix& p) {
  const double n = spectral_norm(p);
  const double c = p.trace() / static_cast<double>(p.rows());
  return spectral_norm(p - c * Matrix::Identity(p.rows(), p.cols())) <= 1e-10 * n;
}

MatrixField difference(const Cocycle& target, const Cocycle& base) {
  MatrixField f(base.n_states(), base.dim());
  for (const Edge& e : base.edges()) f.set(e.from, e.to, target.at(e.from, e.to) - base.at(e.from, e.to));
  return f;
}

}  // namespace

std::string to_string(IrreducibilityVerdict v) {
  switch (v) {
    case IrreducibilityVerdict::IrreducibleHeuristic: return "IrreducibleHeuristic";
    case IrreducibilityVerdict::ReducibleWitness: return "ReducibleWitness";
    case IrreducibilityVerdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

double invariance_residual(const Cocycle& a, const std::vector<Matrix>& bases) {
  require(bases.size() == a.n_states(), Errc::ShapeMismatch, "one basis per state required");
  double r = 0.0;
  for (const Edge& e : a.edges()) {
    const Matrix& qi = bases[e.from];
    const Matrix& qj = bases[e.to];
    require(qi.cols() == qj.cols(), Errc::ShapeMismatch, "bases differ in dimension");
    const Matrix& m = a.at(e.from, e.to);
    const Matrix img = m * qi;
    const Matrix out = img - qj * (qj.transpose() * img);
    r = std::max(r, spectral_norm(out) / spectral_norm(m));
  }
  return r;
}

IrreducibilityReport irreducibility_test(const Cocycle& a, const MarkovKernel& kernel, std::size_t max_cycles) {
  a.validate_against(kernel);
  IrreducibilityReport rep;
  rep.residual = std::numeric_limits<double>::infinity();
  if (!all_reachable(kernel, true) || !all_reachable(kernel, false)) {
    rep.reason = "support graph is not strongly connected";
    return rep;
  }
  const std::size_t S = kernel.n_states();
  const auto m = static_cast<Eigen::Index>(a.dim());
  if (m == 1) {
    rep.verdict = IrreducibilityVerdict::IrreducibleHeuristic;
    rep.reason = "m = 1 has no proper nonzero subspaces";
    return rep;
  }

  // Transport matrices T(s) along a BFS tree from state 0.
  std::vector<Matrix> transport(S);
  std::vector<bool> seen(S, false);
  transport[0] = Matrix::Identity(m, m);
  seen[0] = true;
  std::queue<State> q;
  q.push(0);
  while (!q.empty()) {
    const State s = q.front();
    q.pop();
    for (State t = 0; t < S; ++t) {
      if (seen[t] || kernel(s, t) <= 0.0) continue;
      seen[t] = true;
      const Matrix step = a.at(s, t) * transport[s];
      transport[t] = step / spectral_norm(step);
      q.push(t);
    }
  }

  const auto cycles = simple_cycles_through_zero(kernel, max_cycles);
  std::size_t nonscalar = 0;
  for (const auto& cyc : cycles) {
    Matrix p = Matrix::Identity(m, m);
    for (std::size_t k = 0; k + 1 < cyc.size(); ++k) {
      p = (a.at(cyc[k], cyc[k + 1]) * p).eval();
      p /= spectral_norm(p);
    }
    ++rep.cycles_used;
    if (is_scalar(p)) continue;
    ++nonscalar;
    const std::vector<Matrix> blocks = real_eigen_blocks(p);
    const std::size_t nb = blocks.size();
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << nb); ++mask) {
      Eigen::Index dim = 0;
      for (std::size_t b = 0; b < nb; ++b)
        if (mask & (std::size_t{1} << b)) dim += blocks[b].cols();
      if (dim < 1 || dim >= m) continue;
      Matrix cols(m, dim);
      Eigen::Index c = 0;
      for (std::size_t b = 0; b < nb; ++b) {
        if (!(mask & (std::size_t{1} << b))) continue;
        cols.middleCols(c, blocks[b].cols()) = blocks[b];
        c += blocks[b].cols();
      }
      const Matrix v0 = orthonormal_basis(cols, 1e-10);
      if (v0.cols() != dim) continue;
      std::vector<Matrix> bases(S);
      bool ok = true;
      for (std::size_t s = 0; s < S && ok; ++s) {
        bases[s] = orthonormal_basis(transport[s] * v0, 1e-12);
        ok = bases[s].cols() == dim;
      }
      if (!ok) continue;
      ++rep.candidates_tested;
      const double r = invariance_residual(a, bases);
      if (r < kWitnessTol) {
        rep.verdict = IrreducibilityVerdict::ReducibleWitness;
        rep.witness = std::move(bases);
        rep.residual = r;
        rep.reason = "invariant family of dimension " + std::to_string(dim);
        return rep;
      }
      rep.residual = std::min(rep.residual, r);
    }
  }
  if (nonscalar == 0) {
    rep.reason = cycles.empty() ? "no cycles through state 0" : "all cycle products are scalar";
  } else if (rep.residual > kRejectMargin) {
    rep.verdict = IrreducibilityVerdict::IrreducibleHeuristic;
    rep.reason = rep.candidates_tested == 0 ? "cycle products have no real invariant subspaces"
                                            : "every candidate family fails invariance";
  } else {
    rep.reason = "some candidate family is close to invariant";
  }
  return rep;
}

std::vector<IrreducibilityReport> total_irreducibility(const Cocycle& a, const MarkovKernel& kernel,
                                                       std::size_t max_cycles) {
  std::vector<IrreducibilityReport> out;
  for (std::size_t k = 1; k < a.dim(); ++k)
    out.push_back(irreducibility_test(exterior_power(a, k), kernel, max_cycles));
  return out;
}

ContinuityScan continuity_scan(const Cocycle& a, const MarkovKernel& kernel, const MatrixField& direction,
                               const std::vector<double>& t_grid, const LyapunovParams& params,
                               const ScanOptions& options) {
  require(!t_grid.empty(), Errc::InvalidArgument, "continuity scan needs a t-grid");
  ContinuityScan scan;
  const LyapunovSpectrum base = lyapunov_spectrum_qr(a, kernel, params);
  std::vector<ProjectivePoint> base_dirs;
  const bool want_flags = a.dim() >= 2 && options.flag_samples > 0;
  bool flags_ok = want_flags;
  if (want_flags) {
    try {
      base_dirs = sampled_top_directions(a, kernel, options.flag_n, options.flag_samples, params.seed);
    } catch (const Error& e) {
      if (e.code() != Errc::GapUnresolved) throw;
      flags_ok = false;
    }
  }
  const auto m = base.exponents.size();
  for (double t : t_grid) {
    std::optional<Cocycle> b;
    try {
      b.emplace(perturb(a, direction, t));
    } catch (const Error& e) {
      if (e.code() != Errc::SingularPerturbation) throw;
      scan.note = std::string("grid truncated: ") + e.what();
      break;
    }
    scan.t_grid.push_back(t);
    ScanRow row;
    row.t = t;
    row.d_inf = d_inf(a, *b);
    const LyapunovSpectrum sb = lyapunov_spectrum_qr(*b, kernel, params);
    row.L_diff.resize(m);
    row.L_stderr.resize(m);
    std::vector<double> diff(params.replicas);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (std::size_t r = 0; r < params.replicas; ++r)
        diff[r] = sb.replica_values[r](j) - base.replica_values[r](j);
      const MeanStderr ms = mean_stderr(diff);
      row.L_diff(j) = ms.mean;
      row.L_stderr(j) = ms.stderr_;
    }
    row.L1_diff = row.L_diff(0);
    row.L1_stderr = row.L_stderr(0);
    row.flag_dist = std::numeric_limits<double>::quiet_NaN();
    if (flags_ok) {
      try {
        const auto dirs = sampled_top_directions(*b, kernel, options.flag_n, options.flag_samples, params.seed);
        row.flag_dist = flag_distance(base_dirs, dirs).value;
      } catch (const Error& e) {
        if (e.code() != Errc::GapUnresolved) throw;
      }
    }
    row.pass = t != 0.0 && row.d_inf > 0.0 &&
               std::abs(row.L1_diff) > std::max(5.0 * row.L1_stderr, 1e-12);
    scan.rows.push_back(std::move(row));
  }

  std::vector<double> x, y;
  for (const ScanRow& r : scan.rows) {
    if (!r.pass) continue;
    x.push_back(std::log(r.d_inf));
    y.push_back(std::log(std::abs(r.L1_diff)));
  }
  scan.rows_fitted = x.size();
  if (x.size() >= 3) {
    const LineFit f = fit_line(x, y);
    scan.raw_exponent = f.slope;
    scan.r2 = f.r2;
    if (f.r2 >= 0.8) scan.fitted_exponent = f.slope;
  } else if (scan.note.empty()) {
    scan.note = "fewer than 3 rows resolve |L1(B) - L1(A)| above 5 stderr";
  }
  return scan;
}

GapStabilityReport gap_stability_probe(const Cocycle& a, const MarkovKernel& kernel, double radius,
                                       std::size_t n_probes, const GapProbeParams& params, std::uint64_t seed) {
  require(radius >= 0.0, Errc::InvalidArgument, "radius must be nonnegative");
  GapStabilityReport rep;
  rep.alpha = params.alpha;
  if (params.n0) {
    rep.n0 = *params.n0;
  } else {
    try {
      rep.n0 = contraction_horizon(a, kernel, params.budget, seed);
    } catch (const Error& e) {
      if (e.code() != Errc::NoContractionWithinHorizon) throw;
      rep.note = std::string("base cocycle has no contraction horizon: ") + e.what();
    }
  }

  std::vector<std::pair<std::optional<Cocycle>, std::string>> candidates;
  for (std::size_t p = 0; p < n_probes; ++p) {
    CounterRng rng(seed, stream_id(kTagProbe, p));
    MatrixField d(a.n_states(), a.dim());
    const auto m = static_cast<Eigen::Index>(a.dim());
    double sup = 0.0;
    for (const Edge& e : a.edges()) {
      Matrix r(m, m);
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) r(i, j) = rng.normal();
      sup = std::max(sup, spectral_norm(r));
      d.set(e.from, e.to, std::move(r));
    }
    try {
      candidates.emplace_back(perturb(a, d, radius / sup), "random");
    } catch (const Error& e) {
      if (e.code() != Errc::SingularPerturbation) throw;
      candidates.emplace_back(std::nullopt, e.what());
    }
  }
  for (const Cocycle& target : params.targets) {
    const double dist = d_inf(a, target);
    const double s = dist > 0.0 ? std::min(1.0, radius / dist) : 0.0;
    try {
      candidates.emplace_back(perturb(a, difference(target, a), s), "toward target");
    } catch (const Error& e) {
      if (e.code() != Errc::SingularPerturbation) throw;
      candidates.emplace_back(std::nullopt, e.what());
    }
  }

  std::size_t passed = 0;
  for (auto& [b, label] : candidates) {
    GapProbe probe;
    probe.note = label;
    if (!b) {
      rep.probes.push_back(probe);
      continue;
    }
    probe.d_inf = d_inf(a, *b);
    const LyapunovSpectrum spec = lyapunov_spectrum_qr(*b, kernel, params.lyapunov);
    const GapPattern gaps = detect_gaps(spec);
    probe.gap_margin = gaps.margins.empty() ? 0.0 : gaps.margins.front();
    probe.gap_resolved = !gaps.resolved.empty() && gaps.resolved.front();
    if (rep.n0 > 0) {
      const ContractionEstimate k = kappa(*b, kernel, params.alpha, rep.n0, params.budget, seed);
      probe.kappa = k.value;
      probe.kappa_stderr = k.std_error;
    } else {
      probe.kappa = std::numeric_limits<double>::quiet_NaN();
    }
    probe.pass = rep.n0 > 0 && probe.kappa < 1.0 && probe.gap_resolved;
    if (probe.pass) ++passed;
    rep.probes.push_back(probe);
  }
  rep.pass_fraction = rep.probes.empty() ? 1.0 : static_cast<double>(passed) / static_cast<double>(rep.probes.size());
  return rep;
}

}  // namespace cocyclab
