// SPDX-License-Identifier: Apache-2.0
#include "cocyclab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "cocyclab/errors.hpp"
#include "cocyclab/parallel.hpp"
#include "cocyclab/rng.hpp"
#include "cocyclab/stats.hpp"
#include "fast_path.hpp"

namespace cocyclab {
namespace {

constexpr std::uint64_t kTagLyapunov = 0x6c79617075;  // "lyapu"
constexpr std::uint64_t kTagOseledets = 0x6f73656c65;  // "osele"

template <int D>
void qr_replica(const detail::EdgeTable<D>& table, const TransitionSampler& sampler, std::size_t m,
                const InitialCondition& initial, const LyapunovParams& params, std::size_t r,
                Vector& exponents, double& logdet_rate) {
  CounterRng rng(params.seed, stream_id(kTagLyapunov, r));
  State x = sampler.draw(initial, rng);
  detail::Mat<D> frame = detail::identity<D>(m);
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(m));
  double logdet = 0.0;
  auto reorthonormalize = [&]() {
    Eigen::HouseholderQR<detail::Mat<D>> qr(frame);
    const detail::Mat<D> rr = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) acc(i) += std::log(std::abs(rr(i, i)));
    frame = qr.householderQ();
  };
  for (std::size_t k = 0; k < params.n; ++k) {
    const State next = sampler.next(x, rng);
    const auto& a = table(x, next);
    logdet += std::log(std::abs(a.determinant()));
    frame = (a * frame).eval();
    x = next;
    if ((k + 1) % params.qr_stride == 0 || k + 1 == params.n) reorthonormalize();
  }
  exponents = acc / static_cast<double>(params.n);
  std::sort(exponents.data(), exponents.data() + exponents.size(), std::greater<>());
  logdet_rate = logdet / static_cast<double>(params.n);
}

void check_params(const LyapunovParams& p) {
  require(p.n >= 1, Errc::InvalidArgument, "Lyapunov estimation needs n >= 1");
  require(p.replicas >= 1, Errc::InvalidArgument, "Lyapunov estimation needs replicas >= 1");
  require(p.qr_stride >= 1 && p.wedge_block >= 1, Errc::InvalidArgument,
          "QR stride and wedge block must be >= 1");
}

/// Rescaled product over the first n steps of the trajectory; returns the
/// product with unit max-entry and the accumulated log scale.
Matrix rescaled_product(const Cocycle& a, const std::vector<State>& states, std::size_t n, double& log_scale) {
  const auto m = static_cast<Eigen::Index>(a.dim());
  Matrix p = Matrix::Identity(m, m);
  Matrix tmp(m, m);
  log_scale = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    tmp.noalias() = a.at(states[k], states[k + 1]) * p;
    const double s = tmp.cwiseAbs().maxCoeff();
    p = tmp / s;
    log_scale += std::log(s);
  }
  return p;
}

}  // namespace

LyapunovSpectrum lyapunov_spectrum_qr(const Cocycle& a, const MarkovKernel& kernel,
                                      const LyapunovParams& params) {
  check_params(params);
  a.validate_against(kernel);
  const InitialCondition initial = params.initial ? *params.initial : default_initial(kernel);
  const TransitionSampler sampler(kernel);
  LyapunovSpectrum out;
  out.n_used = params.n;
  out.replicas = params.replicas;
  out.seed = params.seed;
  out.replica_values.resize(params.replicas);
  out.replica_logdet.resize(params.replicas);

  detail::dispatch_dim(a.dim(), [&](auto dconst) {
    constexpr int D = decltype(dconst)::value;
    const detail::EdgeTable<D> table(a);
    parallel_for(params.replicas, [&](std::size_t r) {
      qr_replica<D>(table, sampler, a.dim(), initial, params, r, out.replica_values[r], out.replica_logdet[r]);
    });
  });

  const auto m = static_cast<Eigen::Index>(a.dim());
  out.exponents.resize(m);
  out.stderr_.resize(m);
  std::vector<double> column(params.replicas);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (std::size_t r = 0; r < params.replicas; ++r) column[r] = out.replica_values[r](i);
    const MeanStderr ms = mean_stderr(column);
    out.exponents(i) = ms.mean;
    out.stderr_(i) = ms.stderr_;
  }
  return out;
}

WedgeEstimate lambda_via_wedge(const Cocycle& a, const MarkovKernel& kernel, std::size_t j,
                               const LyapunovParams& params) {
  check_params(params);
  require(j >= 1 && j <= a.dim(), Errc::InvalidArgument, "wedge index out of range");
  a.validate_against(kernel);
  const InitialCondition initial = params.initial ? *params.initial : default_initial(kernel);
  const TransitionSampler sampler(kernel);
  const auto m = static_cast<Eigen::Index>(a.dim());
  const auto d = static_cast<Eigen::Index>(lex_subsets(a.dim(), j).size());
  WedgeEstimate out;
  out.replica_values.resize(params.replicas);

  parallel_for(params.replicas, [&](std::size_t r) {
    CounterRng rng(params.seed, stream_id(kTagLyapunov, r));
    State x = sampler.draw(initial, rng);
    Matrix w = Matrix::Identity(d, d);
    Matrix block = Matrix::Identity(m, m);
    Matrix tmp(m, m);
    double log_scale = 0.0;
    std::size_t in_block = 0;
    auto flush = [&]() {
      w = (compound_matrix(block, j) * w).eval();
      const double s = w.cwiseAbs().maxCoeff();
      w /= s;
      log_scale += std::log(s);
      block.setIdentity();
      in_block = 0;
    };
    for (std::size_t k = 0; k < params.n; ++k) {
      const State next = sampler.next(x, rng);
      tmp.noalias() = a.at(x, next) * block;
      block.swap(tmp);
      x = next;
      if (++in_block == params.wedge_block) flush();
    }
    if (in_block > 0) flush();
    out.replica_values[r] = (std::log(spectral_norm(w)) + log_scale) / static_cast<double>(params.n);
  });

  const MeanStderr ms = mean_stderr(out.replica_values);
  out.value = ms.mean;
  out.stderr_ = ms.stderr_;
  return out;
}

GapPattern detect_gaps(const LyapunovSpectrum& spec) {
  GapPattern g;
  const Eigen::Index m = spec.exponents.size();
  for (Eigen::Index j = 0; j + 1 < m; ++j) {
    const double margin = spec.exponents(j) - spec.exponents(j + 1);
    const double se = std::hypot(spec.stderr_(j), spec.stderr_(j + 1));
    const bool ok = margin > 4.0 * se && margin > 1e-8;
    g.margins.push_back(margin);
    g.resolved.push_back(ok);
    if (ok) g.tau.push_back(static_cast<std::size_t>(j + 1));
  }
  return g;
}

ProjectivePoint top_oseledets_direction(const Cocycle& a, const MarkovKernel& kernel,
                                        const Trajectory& traj, std::size_t n) {
  a.validate_against(kernel);
  require(n >= 1 && n <= traj.length(), Errc::TrajectoryTooShort, "top direction needs 1 <= n <= length");
  require(a.dim() >= 2, Errc::InvalidArgument, "top direction needs fiber dimension >= 2");
  double log_scale = 0.0;
  const Matrix p = rescaled_product(a, traj.states, n, log_scale);
  Eigen::JacobiSVD<Matrix> svd(p, Eigen::ComputeFullU);
  const Vector sv = svd.singularValues();
  if (!(sv(0) - sv(1) > 1e-10 * sv(0))) {
    throw Error(Errc::GapUnresolved, "sigma_1 and sigma_2 of A^(n) coincide; no top direction");
  }
  return ProjectivePoint(svd.matrixU().col(0));
}

ProjectivePoint top_oseledets_direction(const Cocycle& a, const MarkovKernel& kernel,
                                        const Trajectory& traj, std::size_t n, const GapPattern& gaps) {
  if (gaps.resolved.empty() || !gaps.resolved.front())
    throw Error(Errc::GapUnresolved, "L1 > L2 is not resolved");
  return top_oseledets_direction(a, kernel, traj, n);
}

std::vector<ProjectivePoint> sampled_top_directions(const Cocycle& a, const MarkovKernel& kernel,
                                                    std::size_t n, std::size_t samples,
                                                    std::uint64_t seed) {
  const InitialCondition initial = default_initial(kernel);
  const TransitionSampler sampler(kernel);
  std::vector<std::optional<ProjectivePoint>> dirs(samples);
  parallel_for(samples, [&](std::size_t s) {
    const Trajectory traj = sample_trajectory(sampler, initial, n, seed, stream_id(kTagOseledets, s));
    dirs[s] = top_oseledets_direction(a, kernel, traj, n);
  });
  std::vector<ProjectivePoint> out;
  out.reserve(samples);
  for (auto& d : dirs) out.push_back(*d);
  return out;
}

FlagDistanceReport flag_distance(const std::vector<Matrix>& f1, const std::vector<Matrix>& f2,
                                 const std::vector<std::size_t>& tau) {
  require(f1.size() == f2.size() && !f1.empty(), Errc::ShapeMismatch,
          "flag samples must be aligned and non-empty");
  FlagDistanceReport out;
  out.tau = tau;
  out.samples = f1.size();
  std::vector<double> per(f1.size());
  for (std::size_t s = 0; s < f1.size(); ++s) {
    require(f1[s].rows() == f2[s].rows() && f1[s].cols() == f2[s].cols(), Errc::ShapeMismatch,
            "flag samples differ in shape");
    double d = 0.0;
    std::size_t prev = 0;
    for (std::size_t t : tau) {
      require(t > prev && t <= static_cast<std::size_t>(f1[s].cols()), Errc::ShapeMismatch,
              "signature must be strictly increasing and within the basis size");
      prev = t;
      const auto k = static_cast<Eigen::Index>(t);
      d = std::max(d, subspace_distance(orthonormal_basis(f1[s].leftCols(k)),
                                        orthonormal_basis(f2[s].leftCols(k))));
    }
    per[s] = d;
  }
  out.value = tree_sum(per) / static_cast<double>(per.size());
  return out;
}

FlagDistanceReport flag_distance(const std::vector<ProjectivePoint>& f1,
                                 const std::vector<ProjectivePoint>& f2) {
  require(f1.size() == f2.size() && !f1.empty(), Errc::ShapeMismatch,
          "flag samples must be aligned and non-empty");
  FlagDistanceReport out;
  out.tau = {1};
  out.samples = f1.size();
  std::vector<double> per(f1.size());
  for (std::size_t s = 0; s < f1.size(); ++s) per[s] = delta(f1[s], f2[s]);
  out.value = tree_sum(per) / static_cast<double>(per.size());
  return out;
}

}  // namespace cocyclab
