// SPDX-License-Identifier: Apache-2.0
#include "cocyclab/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cocyclab/errors.hpp"

namespace cocyclab {
namespace {

// Below this the deviation ||(K - 1 mu)^n f|| is roundoff, not signal.
constexpr double kDeviationFloor = 1e-13;

Matrix stationary_projector(const StationaryMeasure& mu) {
  const auto s = static_cast<Eigen::Index>(mu.size());
  return Vector::Ones(s) * mu.weights.transpose();
}

double inf_norm(const Matrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

MarkovKernel::MarkovKernel(Matrix rows) : rows_(std::move(rows)) {
  require(rows_.rows() > 0 && rows_.rows() == rows_.cols(), Errc::InvalidArgument,
          "kernel must be a non-empty square matrix");
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < rows_.cols(); ++j) {
      const double p = rows_(i, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream msg;
        msg << "entry (" << i << "," << j << ") = " << p << " outside [0,1]";
        throw Error(Errc::InvalidArgument, msg.str());
      }
      sum += p;
      if (p > 0.0) support_.push_back({static_cast<State>(i), static_cast<State>(j)});
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "row " << i << " sums to " << sum;
      throw Error(Errc::InvalidArgument, msg.str());
    }
  }
}

MarkovKernel MarkovKernel::identity(std::size_t n_states) {
  const auto s = static_cast<Eigen::Index>(n_states);
  return MarkovKernel(Matrix::Identity(s, s));
}

bool MarkovKernel::has_edge(State from, State to) const {
  return from < n_states() && to < n_states() && (*this)(from, to) > 0.0;
}

MarkovKernel iterate_kernel(const MarkovKernel& kernel, std::size_t n) {
  require(n >= 1, Errc::InvalidArgument, "iterate_kernel needs n >= 1");
  Matrix result = kernel.rows();
  Matrix base = kernel.rows();
  std::size_t e = n - 1;
  while (e > 0) {
    if (e & 1u) result = result * base;
    e >>= 1u;
    if (e > 0) base = base * base;
  }
  // Products of stochastic matrices drift from exact row sums by a few ulps.
  for (Eigen::Index i = 0; i < result.rows(); ++i) {
    result.row(i) = result.row(i).cwiseMax(0.0).cwiseMin(1.0);
    result.row(i) /= result.row(i).sum();
  }
  return MarkovKernel(std::move(result));
}

StationaryMeasure stationary_measure(const MarkovKernel& kernel) {
  const auto s = static_cast<Eigen::Index>(kernel.n_states());
  const Matrix a = kernel.rows().transpose() - Matrix::Identity(s, s);
  Eigen::FullPivLU<Matrix> lu(a);
  lu.setThreshold(1e-10);
  if (lu.dimensionOfKernel() != 1) {
    throw Error(Errc::NonUniqueStationary, "eigenvalue 1 of K has geometric multiplicity " +
                                               std::to_string(lu.dimensionOfKernel()));
  }
  // Solve [K^T - I; 1^T] mu = [0; 1] in the least-squares sense.
  Matrix aug(s + 1, s);
  aug.topRows(s) = a;
  aug.row(s).setOnes();
  Vector rhs = Vector::Zero(s + 1);
  rhs(s) = 1.0;
  Vector mu = aug.colPivHouseholderQr().solve(rhs);
  for (Eigen::Index i = 0; i < s; ++i) mu(i) = std::max(mu(i), 0.0);
  mu /= mu.sum();
  return {mu};
}

KernelSpectrum kernel_spectrum(const MarkovKernel& kernel) {
  KernelSpectrum out;
  if (kernel.n_states() == 1) {
    out.unit_multiplicity = 1;
    return out;
  }
  Eigen::EigenSolver<Matrix> es(kernel.rows(), false);
  const auto& ev = es.eigenvalues();
  Eigen::Index closest = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i) - 1.0) < std::abs(ev(closest) - 1.0)) closest = i;
    if (std::abs(ev(i) - 1.0) < 1e-9) ++out.unit_multiplicity;
  }
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (i != closest) out.rho = std::max(out.rho, std::abs(ev(i)));
  }
  return out;
}

double mixing_deviation(const MarkovKernel& kernel, const StationaryMeasure& mu, const Vector& f,
                        std::size_t n) {
  const Matrix centred = kernel.rows() - stationary_projector(mu);
  Vector g = f - Vector::Constant(f.size(), mu.weights.dot(f));
  for (std::size_t k = 0; k < n; ++k) g = centred * g;
  return g.cwiseAbs().maxCoeff();
}

MixingProfile mixing_profile(const MarkovKernel& kernel, const StationaryMeasure& mu,
                             std::size_t probe_count, std::size_t horizon, std::uint64_t seed) {
  require(mu.size() == kernel.n_states(), Errc::ShapeMismatch,
          "stationary measure does not match kernel size");
  MixingProfile out;
  const KernelSpectrum spec = kernel_spectrum(kernel);
  out.rho = spec.rho;
  out.is_strongly_mixing = spec.unit_multiplicity == 1 && spec.rho < 1.0 - 1e-9;
  out.horizon = horizon;

  const auto s = static_cast<Eigen::Index>(kernel.n_states());
  std::vector<Vector> probes;
  for (Eigen::Index i = 0; i < s; ++i) probes.push_back(Vector::Unit(s, i));
  CounterRng rng(seed, stream_id(0x6d6978 /* "mix" */));
  for (std::size_t p = 0; p < probe_count; ++p) {
    Vector f(s);
    for (Eigen::Index i = 0; i < s; ++i) f(i) = 2.0 * rng.uniform() - 1.0;
    probes.push_back(f);
  }
  out.probes_used = probes.size();

  const double log_rho = out.rho > 0.0 ? std::log(out.rho) : -std::numeric_limits<double>::infinity();
  double best_log_ratio = 0.0;  // C >= 1
  auto consider = [&](double deviation, double scale, std::size_t n) {
    if (n > 0 && deviation <= kDeviationFloor * scale) return;
    const double lr = std::log(deviation / scale) - static_cast<double>(n) * log_rho;
    if (std::isfinite(lr)) best_log_ratio = std::max(best_log_ratio, lr);
  };

  const Matrix centred = kernel.rows() - stationary_projector(mu);
  Matrix power = Matrix::Identity(s, s) - stationary_projector(mu);
  std::vector<Vector> g(probes.size());
  for (std::size_t p = 0; p < probes.size(); ++p)
    g[p] = probes[p] - Vector::Constant(s, mu.weights.dot(probes[p]));
  for (std::size_t n = 0; n <= horizon; ++n) {
    if (n > 0) {
      power = centred * power;
      for (auto& v : g) v = centred * v;
    }
    consider(inf_norm(power), 1.0, n);
    for (std::size_t p = 0; p < probes.size(); ++p)
      consider(g[p].cwiseAbs().maxCoeff(), probes[p].cwiseAbs().maxCoeff(), n);
  }
  out.C = std::exp(best_log_ratio);
  return out;
}

bool doeblin_check(const MarkovKernel& kernel, double epsilon, DoeblinSearch search) {
  require(epsilon > 0.0 && epsilon < 1.0, Errc::InvalidArgument, "Doeblin epsilon must lie in (0,1)");
  const std::size_t s = kernel.n_states();
  if (search == DoeblinSearch::Exhaustive && s > 20) {
    throw Error(Errc::StateSpaceTooLarge,
                "exhaustive Doeblin search supports at most 20 states, got " + std::to_string(s));
  }
  std::vector<Vector> family;
  family.push_back(Vector::Constant(static_cast<Eigen::Index>(s), 1.0 / static_cast<double>(s)));
  try {
    family.push_back(stationary_measure(kernel).weights);
  } catch (const Error&) {
    // no unique stationary measure: search the uniform measure only
  }

  constexpr double tol = 1e-12;
  auto holds_for = [&](auto&& for_each_set) {
    bool ok = true;
    for_each_set([&](double max_mass, double rho_mass) {
      if (max_mass >= 1.0 - epsilon - tol && rho_mass < epsilon - tol) ok = false;
    });
    return ok;
  };

  for (const Vector& rho : family) {
    bool ok = false;
    if (search == DoeblinSearch::Exhaustive) {
      const std::size_t sets = std::size_t{1} << s;
      std::vector<double> max_mass(sets, 0.0);
      std::vector<double> mass(sets, 0.0);
      std::vector<double> rho_mass(sets, 0.0);
      for (std::size_t x = 0; x < s; ++x) {
        for (std::size_t a = 1; a < sets; ++a) {
          const auto low = static_cast<std::size_t>(__builtin_ctzll(a));
          mass[a] = mass[a & (a - 1)] + kernel(x, low);
          max_mass[a] = std::max(max_mass[a], mass[a]);
        }
      }
      for (std::size_t a = 1; a < sets; ++a) {
        const auto low = static_cast<std::size_t>(__builtin_ctzll(a));
        rho_mass[a] = rho_mass[a & (a - 1)] + rho(static_cast<Eigen::Index>(low));
      }
      ok = holds_for([&](auto&& visit) {
        for (std::size_t a = 1; a < sets; ++a) visit(max_mass[a], rho_mass[a]);
      });
    } else {
      ok = holds_for([&](auto&& visit) {
        for (std::size_t j = 0; j < s; ++j) {
          double single = 0.0, complement = 0.0;
          for (std::size_t x = 0; x < s; ++x) {
            single = std::max(single, kernel(x, j));
            complement = std::max(complement, 1.0 - kernel(x, j));
          }
          const double rj = rho(static_cast<Eigen::Index>(j));
          visit(single, rj);
          visit(complement, rho.sum() - rj);
        }
        visit(1.0, rho.sum());
      });
    }
    if (ok) return true;
  }
  return false;
}

InitialCondition default_initial(const MarkovKernel& kernel) {
  try {
    return stationary_measure(kernel).weights;
  } catch (const Error&) {
    const auto s = static_cast<Eigen::Index>(kernel.n_states());
    return Vector(Vector::Constant(s, 1.0 / static_cast<double>(s)));
  }
}

TransitionSampler::TransitionSampler(const MarkovKernel& kernel)
    : n_(kernel.n_states()), cumulative_(n_ * n_), last_support_(n_, 0) {
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      acc += kernel(i, j);
      cumulative_[i * n_ + j] = acc;
      if (kernel(i, j) > 0.0) last_support_[i] = j;
    }
  }
}

State TransitionSampler::next(State from, CounterRng& rng) const {
  const double u = rng.uniform();
  const double* row = cumulative_.data() + from * n_;
  for (std::size_t j = 0; j < n_; ++j)
    if (u < row[j]) return j;
  return last_support_[from];
}

State TransitionSampler::draw(const InitialCondition& initial, CounterRng& rng) const {
  if (const auto* s = std::get_if<State>(&initial)) {
    require(*s < n_, Errc::InvalidArgument, "initial state out of range");
    return *s;
  }
  const Vector& dist = std::get<Vector>(initial);
  require(static_cast<std::size_t>(dist.size()) == n_, Errc::ShapeMismatch,
          "initial distribution size does not match kernel");
  const double u = rng.uniform() * dist.sum();
  double acc = 0.0;
  State last = 0;
  for (std::size_t j = 0; j < n_; ++j) {
    const double p = dist(static_cast<Eigen::Index>(j));
    if (p <= 0.0) continue;
    acc += p;
    last = j;
    if (u < acc) return j;
  }
  return last;
}

Trajectory sample_trajectory(const TransitionSampler& sampler, const InitialCondition& initial,
                             std::size_t length, std::uint64_t seed, std::uint64_t stream) {
  Trajectory traj;
  traj.seed = seed;
  traj.stream = stream;
  traj.initial = initial;
  traj.states.resize(length + 1);
  CounterRng rng(seed, stream);
  traj.states[0] = sampler.draw(initial, rng);
  for (std::size_t k = 0; k < length; ++k) traj.states[k + 1] = sampler.next(traj.states[k], rng);
  return traj;
}

Trajectory sample_trajectory(const MarkovKernel& kernel, const InitialCondition& initial,
                             std::size_t length, std::uint64_t seed, std::uint64_t stream) {
  return sample_trajectory(TransitionSampler(kernel), initial, length, seed, stream);
}

}  // namespace cocyclab
