// SPDX-License-Identifier: Apache-2.0
#include "cocyclab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cocyclab/errors.hpp"
#include "cocyclab/parallel.hpp"
#include "cocyclab/rng.hpp"
#include "cocyclab/stats.hpp"
#include "fast_path.hpp"

namespace cocyclab {
namespace {

constexpr std::uint64_t kTagDeflate = 0x646566;      // "def"
constexpr std::uint64_t kTagRatio = 0x726174696f;    // "ratio"
constexpr double kResidualTol = 1e-10;
constexpr std::size_t kIterationCap = 100000;
constexpr std::size_t kRowChunk = 256;

double halton(std::size_t index, std::size_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

std::vector<Vector> halton_sphere_points(std::size_t dim, std::size_t count) {
  static constexpr std::size_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  require(dim <= 16, Errc::InvalidArgument, "quasi-random fiber grid supports m <= 16");
  std::vector<Vector> pts;
  for (std::size_t idx = 1; pts.size() < count; ++idx) {
    Vector v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; i += 2) {
      const double u1 = halton(idx, primes[i]);
      const double u2 = i + 1 < dim ? halton(idx, primes[i + 1]) : 0.25;
      if (u1 <= 0.0) continue;
      const double r = std::sqrt(-2.0 * std::log(u1));
      v(static_cast<Eigen::Index>(i)) = r * std::cos(2.0 * std::numbers::pi * u2);
      if (i + 1 < dim) v(static_cast<Eigen::Index>(i + 1)) = r * std::sin(2.0 * std::numbers::pi * u2);
    }
    if (halton(idx, primes[0]) <= 0.0 || v.norm() < 1e-12) continue;
    const Vector p = ProjectivePoint(v).rep();
    bool distinct = true;
    for (const Vector& q : pts)
      if (delta(p, q) <= 1e-9) {
        distinct = false;
        break;
      }
    if (distinct) pts.push_back(p);
  }
  return pts;
}

/// y = M x with rows split into fixed chunks.
void matvec(const SparseMatrix& m, const Vector& x, Vector& y) {
  const auto rows = static_cast<std::size_t>(m.rows());
  y.resize(m.rows());
  const std::size_t chunks = (rows + kRowChunk - 1) / kRowChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(rows, (c + 1) * kRowChunk);
    for (std::size_t r = c * kRowChunk; r < end; ++r) {
      double s = 0.0;
      for (SparseMatrix::InnerIterator it(m, static_cast<Eigen::Index>(r)); it; ++it) s += it.value() * x(it.col());
      y(static_cast<Eigen::Index>(r)) = s;
    }
  });
}

struct PowerResult {
  double lambda = 0.0;
  Vector x;
  std::size_t iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
};

PowerResult power_iteration(const SparseMatrix& m) {
  PowerResult out;
  out.x = Vector::Ones(m.rows());
  Vector y;
  for (std::size_t k = 1; k <= kIterationCap; ++k) {
    matvec(m, out.x, y);
    const double lam = y.cwiseAbs().maxCoeff();
    require(lam > 0.0 && std::isfinite(lam), Errc::SlowConvergence, "power iteration collapsed to zero");
    out.residual = (y - lam * out.x).cwiseAbs().maxCoeff() / lam;
    out.lambda = lam;
    out.x = y / lam;
    out.iterations = k;
    if (out.residual < kResidualTol) return out;
  }
  throw Error(Errc::SlowConvergence, "power iteration residual " + std::to_string(out.residual) +
                                         " after " + std::to_string(kIterationCap) + " iterations");
}

/// Asymptotic growth rate of the deflated operator M - lambda v left^T.
double deflated_rate(const SparseMatrix& m, const EigenResult& e) {
  const Eigen::Index n = m.rows();
  if (n < 2) return 0.0;
  CounterRng rng(0x9a9, stream_id(kTagDeflate));
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.normal();
  Vector y;
  auto step = [&]() {
    x -= e.v * e.left.dot(x);
    matvec(m, x, y);
    y -= e.lambda * e.v * e.left.dot(x);
    const double norm = y.norm();
    if (!(norm > 0.0)) return -std::numeric_limits<double>::infinity();
    x = y / norm;
    return std::log(norm);
  };
  constexpr std::size_t burn = 200, window = 200, max_windows = 100;
  for (std::size_t k = 0; k < burn; ++k)
    if (!std::isfinite(step())) return 0.0;
  double prev = -1.0;
  double rate = 0.0;
  for (std::size_t w = 0; w < max_windows; ++w) {
    double acc = 0.0;
    for (std::size_t k = 0; k < window; ++k) {
      const double g = step();
      if (!std::isfinite(g)) return 0.0;
      acc += g;
    }
    rate = std::exp(acc / static_cast<double>(window));
    if (w > 0 && std::abs(rate - prev) <= 1e-6 * std::max(rate, 1e-300)) break;
    prev = rate;
  }
  return rate;
}

}  // namespace

BundleGrid::BundleGrid(std::size_t n_states, std::size_t dim, std::size_t resolution)
    : n_states_(n_states), dim_(dim) {
  require(n_states > 0 && dim >= 2 && resolution >= 2, Errc::InvalidArgument,
          "bundle grid needs states > 0, m >= 2 and resolution >= 2");
  points_ = dim == 2 ? angle_grid(resolution) : halton_sphere_points(dim, resolution);
}

DiscretizedOperator discretize_QA(const Cocycle& a, const MarkovKernel& kernel, const BundleGrid& grid,
                                  double t, double t_max) {
  require(std::abs(t) <= t_max, Errc::InvalidArgument, "|t| exceeds t_max");
  require(grid.dim() == a.dim() && grid.n_states() == kernel.n_states(), Errc::ShapeMismatch,
          "bundle grid does not match cocycle and kernel");
  a.validate_against(kernel);
  const std::size_t R = grid.resolution();
  const std::size_t S = kernel.n_states();
  const auto& pts = grid.fiber_points();
  const double step = std::numbers::pi / static_cast<double>(R);

  std::vector<std::vector<Eigen::Triplet<double>>> rows(S * R);
  parallel_for(S * R, [&](std::size_t row) {
    const State y = row / R;
    const std::size_t i = row % R;
    auto& out = rows[row];
    for (State z = 0; z < S; ++z) {
      const double k = kernel(y, z);
      if (k <= 0.0) continue;
      const Vector img = a.at(y, z) * pts[i];
      const double norm = img.norm();
      const double w = k * std::exp(t * std::log(norm));
      const auto r = static_cast<int>(row);
      if (a.dim() == 2) {
        double phi = std::atan2(img(1), img(0));
        if (phi < 0.0) phi += std::numbers::pi;
        if (phi >= std::numbers::pi) phi -= std::numbers::pi;
        const double s = phi / step - 0.5;
        const double fl = std::floor(s);
        const double frac = s - fl;
        const auto k0 = static_cast<std::size_t>((static_cast<long long>(fl) % static_cast<long long>(R) +
                                                  static_cast<long long>(R)) %
                                                 static_cast<long long>(R));
        const std::size_t k1 = (k0 + 1) % R;
        if (1.0 - frac > 0.0) out.emplace_back(r, static_cast<int>(grid.index(z, k0)), w * (1.0 - frac));
        if (frac > 0.0) out.emplace_back(r, static_cast<int>(grid.index(z, k1)), w * frac);
      } else {
        const Vector u = img / norm;
        std::size_t best = 0;
        double best_dot = -1.0;
        for (std::size_t q = 0; q < R; ++q) {
          const double d = std::abs(u.dot(pts[q]));
          if (d > best_dot) {
            best_dot = d;
            best = q;
          }
        }
        out.emplace_back(r, static_cast<int>(grid.index(z, best)), w);
      }
    }
  });

  std::vector<Eigen::Triplet<double>> triplets;
  for (auto& r : rows) triplets.insert(triplets.end(), r.begin(), r.end());
  DiscretizedOperator op;
  op.matrix.resize(static_cast<Eigen::Index>(S * R), static_cast<Eigen::Index>(S * R));
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  op.t = t;
  op.interpolation = a.dim() == 2 ? "linear-angle" : "nearest-point";
  op.n_states = S;
  op.resolution = R;
  return op;
}

EigenResult max_eigen(const DiscretizedOperator& op) {
  EigenResult e;
  const PowerResult right = power_iteration(op.matrix);
  const SparseMatrix transposed = op.matrix.transpose();
  const PowerResult left = power_iteration(transposed);
  e.lambda = right.lambda;
  e.iterations = right.iterations;
  e.residual = right.residual;
  e.v = right.x / right.x.mean();
  e.left = left.x / left.x.dot(e.v);
  e.gap_sigma = deflated_rate(op.matrix, e) / e.lambda;
  return e;
}

CumulantCurve make_cumulant_curve(const std::function<std::pair<double, double>(double)>& eval,
                                  const CumulantOptions& options) {
  require(options.points >= 3 && options.points % 2 == 1, Errc::InvalidArgument,
          "cumulant grid needs an odd number of points >= 3");
  require(options.t_max > 0.0, Errc::InvalidArgument, "t_max must be positive");
  CumulantCurve curve;
  const std::size_t P = options.points;
  const std::size_t mid = P / 2;
  curve.t_grid.resize(P);
  for (std::size_t k = 0; k < P; ++k) {
    curve.t_grid[k] = options.t_max * (static_cast<double>(k) - static_cast<double>(mid)) / static_cast<double>(mid);
  }
  curve.t_grid[mid] = 0.0;
  curve.lambda_vals.resize(P);
  curve.c_vals.resize(P);
  curve.gap_sigmas.resize(P);
  for (std::size_t k = 0; k < P; ++k) {
    const auto [lam, gap] = eval(curve.t_grid[k]);
    curve.lambda_vals[k] = lam;
    curve.c_vals[k] = std::log(lam);
    curve.gap_sigmas[k] = gap;
  }
  curve.gap_sigma = *std::max_element(curve.gap_sigmas.begin(), curve.gap_sigmas.end());
  const double h = curve.t_grid[mid + 1] - curve.t_grid[mid];
  curve.c1_at_0 = (curve.c_vals[mid + 1] - curve.c_vals[mid - 1]) / (2.0 * h);
  curve.c2_at_0 = (curve.c_vals[mid + 1] - 2.0 * curve.c_vals[mid] + curve.c_vals[mid - 1]) / (h * h);
  curve.h_recommended = 1.25 * curve.c2_at_0;
  for (std::size_t k = 0; k < P; ++k) {
    if (curve.gap_sigmas[k] >= 1.0 - options.gap_tolerance) {
      curve.valid = false;
      curve.note = "spectral gap lost at t=" + std::to_string(curve.t_grid[k]);
      if (options.throw_on_gap_loss) throw Error(Errc::GapLost, curve.note);
      break;
    }
  }
  return curve;
}

CumulantCurve cumulant_curve(const Cocycle& a, const MarkovKernel& kernel, const BundleGrid& grid,
                             const CumulantOptions& options) {
  return make_cumulant_curve(
      [&](double t) {
        const EigenResult e = max_eigen(discretize_QA(a, kernel, grid, t, options.t_max));
        return std::make_pair(e.lambda, e.gap_sigma);
      },
      options);
}

RatioEstimate lambda_ratio_mc(const Cocycle& a, const MarkovKernel& kernel, double t, std::size_t n,
                              std::size_t replicas, std::uint64_t seed, double t_max) {
  require(std::abs(t) <= t_max, Errc::InvalidArgument, "|t| exceeds t_max");
  require(n >= 8, Errc::InvalidArgument, "lambda_ratio_mc needs n >= 8");
  require(replicas >= 2, Errc::InvalidArgument, "lambda_ratio_mc needs at least 2 replicas");
  a.validate_against(kernel);
  if (t == 0.0) return {1.0, 0.0};
  const InitialCondition initial = default_initial(kernel);
  const TransitionSampler sampler(kernel);
  std::vector<double> sn(replicas), sn1(replicas);

  detail::dispatch_dim(a.dim(), [&](auto dconst) {
    constexpr int D = decltype(dconst)::value;
    const detail::EdgeTable<D> table(a);
    parallel_for(replicas, [&](std::size_t r) {
      CounterRng rng(seed, stream_id(kTagRatio, r));
      State x = sampler.draw(initial, rng);
      detail::Vec<D> p(static_cast<Eigen::Index>(a.dim()));
      do {
        for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.normal();
      } while (p.norm() < 1e-8);
      p /= p.norm();
      double log_norm = 0.0;
      for (std::size_t k = 0; k <= n; ++k) {
        if (k == n) sn[r] = log_norm;
        const State next = sampler.next(x, rng);
        p = (table(x, next) * p).eval();
        const double s = p.norm();
        p /= s;
        log_norm += std::log(s);
        x = next;
      }
      sn1[r] = log_norm;
    });
  });

  // Shift exponents by a common constant; the ratio is invariant.
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < replicas; ++r) shift = std::max({shift, t * sn[r], t * sn1[r]});
  std::vector<double> wx(replicas), wy(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    wx[r] = std::exp(t * sn[r] - shift);
    wy[r] = std::exp(t * sn1[r] - shift);
  }
  const MeanStderr mx = mean_stderr(wx);
  const MeanStderr my = mean_stderr(wy);
  if (mx.stderr_ > 0.2 * mx.mean || my.stderr_ > 0.2 * my.mean) {
    throw Error(Errc::VarianceBlowup, "relative standard error of the exponential weights exceeds 0.2");
  }
  const double ratio = my.mean / mx.mean;
  std::vector<double> resid(replicas);
  for (std::size_t r = 0; r < replicas; ++r) resid[r] = wy[r] - ratio * wx[r];
  const MeanStderr mr = mean_stderr(resid);
  return {ratio, mr.sd / std::sqrt(static_cast<double>(replicas)) / mx.mean};
}

Vector stationary_bundle_measure(const DiscretizedOperator& op) {
  require(op.t == 0.0, Errc::InvalidArgument, "stationary bundle measure needs the t = 0 operator");
  const EigenResult e = max_eigen(op);
  if (e.gap_sigma >= 1.0 - 1e-6) {
    throw Error(Errc::GapLost, "t=0 operator has no spectral gap (sigma=" + std::to_string(e.gap_sigma) + ")");
  }
  Vector pi = e.left.cwiseMax(0.0);
  return pi / pi.sum();
}

}  // namespace cocyclab
