// SPDX-License-Identifier: Apache-2.0
#include "cocyclab/projective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cocyclab/errors.hpp"
#include "cocyclab/parallel.hpp"
#include "cocyclab/rng.hpp"
#include "fast_path.hpp"

namespace cocyclab {
namespace {

constexpr std::uint64_t kTagKappa = 0x6b61707061;    // "kappa"
constexpr std::uint64_t kTagPairs = 0x7061697273;    // "pairs"
constexpr std::uint64_t kTagHorizon = 0x686f72697a;  // "horiz"
constexpr double kDegenerate = 1e-12;

double wedge_norm(const Vector& p, const Vector& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    for (Eigen::Index j = i + 1; j < p.size(); ++j) {
      const double w = p(i) * q(j) - p(j) * q(i);
      s += w * w;
    }
  return std::sqrt(s);
}

Vector random_unit(CounterRng& rng, std::size_t m) {
  Vector v(static_cast<Eigen::Index>(m));
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  } while (v.norm() < 1e-8);
  return v.normalized();
}

/// Products A^(n) along trajectories from x, each rescaled to unit norm, with
/// log|det| of the rescaled product tracked separately.
template <int D>
struct ProductSampler {
  const detail::EdgeTable<D>& table;
  const TransitionSampler& sampler;
  std::size_t m;

  struct Walker {
    State state;
    detail::Mat<D> prod;
    double logdet = 0.0;
  };

  Walker start(State x) const { return {x, detail::identity<D>(m), 0.0}; }

  void step(Walker& w, CounterRng& rng) const {
    const State next = sampler.next(w.state, rng);
    const auto& a = table(w.state, next);
    detail::Mat<D> p = a * w.prod;
    const double scale = p.cwiseAbs().maxCoeff();
    p /= scale;
    w.logdet += std::log(std::abs(a.determinant())) -
                static_cast<double>(m) * std::log(scale);
    w.prod = p;
    w.state = next;
  }
};

struct PairSet {
  std::vector<Vector> points;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t degenerate = 0;
};

/// Candidate pairs for m >= 3: shared random pairs plus all pairs of right
/// singular vectors of a few sampled products from x.
template <int D>
PairSet general_pairs(const ProductSampler<D>& ps, State x, std::size_t n,
                      const SamplingBudget& budget, std::uint64_t seed) {
  PairSet set;
  CounterRng pr(seed, stream_id(kTagPairs));
  for (std::size_t k = 0; k < budget.random_pairs; ++k) {
    set.points.push_back(random_unit(pr, ps.m));
    set.points.push_back(random_unit(pr, ps.m));
    set.pairs.emplace_back(2 * k, 2 * k + 1);
  }
  CounterRng sr(seed, stream_id(kTagPairs, x + 1, n));
  for (std::size_t s = 0; s < budget.singular_products; ++s) {
    auto w = ps.start(x);
    for (std::size_t k = 0; k < n; ++k) ps.step(w, sr);
    Eigen::JacobiSVD<Matrix> svd(Matrix(w.prod), Eigen::ComputeFullV);
    const std::size_t base = set.points.size();
    for (std::size_t i = 0; i < ps.m; ++i) set.points.push_back(svd.matrixV().col(static_cast<Eigen::Index>(i)));
    for (std::size_t i = 0; i < ps.m; ++i)
      for (std::size_t j = i + 1; j < ps.m; ++j) set.pairs.emplace_back(base + i, base + j);
  }
  std::vector<std::pair<std::size_t, std::size_t>> kept;
  for (const auto& pq : set.pairs) {
    if (delta(set.points[pq.first], set.points[pq.second]) < kDegenerate)
      ++set.degenerate;
    else
      kept.push_back(pq);
  }
  set.pairs = std::move(kept);
  return set;
}

struct CellResult {
  double value = -std::numeric_limits<double>::infinity();
  double std_error = 0.0;
  Vector p, q;
  std::size_t pairs = 0;
  std::size_t degenerate = 0;
  std::vector<KappaDiagnostic> top;
};

double sd_of_mean(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

template <int D>
CellResult kappa_cell(const ProductSampler<D>& ps, State x, double alpha, std::size_t n,
                      const SamplingBudget& budget, std::uint64_t seed) {
  CellResult cell;
  const std::size_t N = budget.trajectories;
  CounterRng rng(seed, stream_id(kTagKappa, x));
  std::vector<typename ProductSampler<D>::Walker> walkers;
  walkers.reserve(N);
  for (std::size_t t = 0; t < N; ++t) {
    auto w = ps.start(x);
    for (std::size_t k = 0; k < n; ++k) ps.step(w, rng);
    walkers.push_back(w);
  }

  struct Scored {
    double mean;
    std::size_t i, j;
  };
  std::vector<Scored> scored;

  if (ps.m == 2) {
    // For m = 2, delta(Mp, Mq) / delta(p, q) = |det M| / (||Mp|| ||Mq||)
    // exactly, so the ratio factors as u(p) u(q) and the pair means form
    // a Gram matrix.
    const std::vector<Vector> grid = angle_grid(budget.grid_resolution);
    const auto R = static_cast<Eigen::Index>(grid.size());
    Matrix u(static_cast<Eigen::Index>(N), R);
    for (std::size_t t = 0; t < N; ++t) {
      const auto& w = walkers[t];
      for (Eigen::Index k = 0; k < R; ++k) {
        const double c = grid[static_cast<std::size_t>(k)](0), s = grid[static_cast<std::size_t>(k)](1);
        const double v0 = w.prod(0, 0) * c + w.prod(0, 1) * s;
        const double v1 = w.prod(1, 0) * c + w.prod(1, 1) * s;
        const double log_norm = std::log(std::hypot(v0, v1));
        u(static_cast<Eigen::Index>(t), k) = std::exp(alpha * (0.5 * w.logdet - log_norm));
      }
    }
    Matrix gram = Matrix::Zero(R, R);
    gram.selfadjointView<Eigen::Upper>().rankUpdate(u.transpose(), 1.0 / static_cast<double>(N));
    scored.reserve(static_cast<std::size_t>(R * (R - 1) / 2));
    for (Eigen::Index j = 1; j < R; ++j)
      for (Eigen::Index i = 0; i < j; ++i)
        scored.push_back({gram(i, j), static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
    cell.pairs = scored.size();
    const std::size_t top = std::min<std::size_t>(std::max<std::size_t>(budget.diagnostics_top, 1), scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(top), scored.end(),
                      [](const Scored& a, const Scored& b) {
                        return a.mean > b.mean || (a.mean == b.mean && (a.i < b.i || (a.i == b.i && a.j < b.j)));
                      });
    for (std::size_t r = 0; r < top; ++r) {
      const auto [mean, i, j] = scored[r];
      std::vector<double> v(N);
      for (std::size_t t = 0; t < N; ++t)
        v[t] = u(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) *
               u(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
      cell.top.push_back({x, i, j, n, alpha, mean, sd_of_mean(v)});
    }
    cell.value = cell.top.front().ratio_mean;
    cell.std_error = cell.top.front().ratio_stderr;
    cell.p = grid[cell.top.front().p_index];
    cell.q = grid[cell.top.front().q_index];
    return cell;
  }

  PairSet set = general_pairs(ps, x, n, budget, seed);
  cell.degenerate = set.degenerate;
  cell.pairs = set.pairs.size();
  std::vector<KappaDiagnostic> all;
  for (std::size_t k = 0; k < set.pairs.size(); ++k) {
    const Vector& p = set.points[set.pairs[k].first];
    const Vector& q = set.points[set.pairs[k].second];
    const double log_dpq = std::log(delta(p, q));
    std::vector<double> v;
    v.reserve(N);
    double s1 = 0.0;
    for (const auto& w : walkers) {
      const Vector mp = Matrix(w.prod) * p;
      const Vector mq = Matrix(w.prod) * q;
      v.push_back(std::exp(alpha * (std::log(delta(mp, mq)) - log_dpq)));
      s1 += v.back();
    }
    all.push_back({x, set.pairs[k].first, set.pairs[k].second, n, alpha, s1 / static_cast<double>(N), sd_of_mean(v)});
  }
  require(!all.empty(), Errc::DegeneratePair, "every candidate pair collapsed");
  std::stable_sort(all.begin(), all.end(),
                   [](const KappaDiagnostic& a, const KappaDiagnostic& b) { return a.ratio_mean > b.ratio_mean; });
  all.resize(std::min(all.size(), std::max<std::size_t>(budget.diagnostics_top, 1)));
  cell.top = all;
  cell.value = all.front().ratio_mean;
  cell.std_error = all.front().ratio_stderr;
  cell.p = set.points[all.front().p_index];
  cell.q = set.points[all.front().q_index];
  return cell;
}

}  // namespace

ProjectivePoint::ProjectivePoint(const Vector& v) {
  const double norm = v.norm();
  require(v.size() > 0 && norm > 0.0 && std::isfinite(norm), Errc::InvalidArgument,
          "projective point needs a finite nonzero vector");
  rep_ = v / norm;
  for (Eigen::Index i = 0; i < rep_.size(); ++i) {
    if (rep_(i) != 0.0) {
      if (rep_(i) < 0.0) rep_ = -rep_;
      break;
    }
  }
}

ProjectivePoint ProjectivePoint::from_angle(double theta) {
  Vector v(2);
  v << std::cos(theta), std::sin(theta);
  return ProjectivePoint(v);
}

double ProjectivePoint::angle() const {
  require(dim() == 2, Errc::InvalidArgument, "angle() needs m = 2");
  double a = std::atan2(rep_(1), rep_(0));
  if (a < 0.0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  return a;
}

bool ProjectivePoint::operator==(const ProjectivePoint& other) const {
  return dim() == other.dim() && (rep_ - other.rep_).cwiseAbs().maxCoeff() <= 1e-12;
}

double delta(const Vector& p, const Vector& q) {
  require(p.size() == q.size(), Errc::ShapeMismatch, "delta needs points of equal dimension");
  const double d = wedge_norm(p, q) / (p.norm() * q.norm());
  return std::min(1.0, d);
}

double delta(const ProjectivePoint& p, const ProjectivePoint& q) { return delta(p.rep(), q.rep()); }

ProjectivePoint act(const Matrix& m, const ProjectivePoint& p) {
  require(static_cast<std::size_t>(m.cols()) == p.dim(), Errc::ShapeMismatch,
          "matrix size does not match projective point");
  return ProjectivePoint(m * p.rep());
}

double xi_A(const Cocycle& a, Edge edge, const ProjectivePoint& p) {
  return std::log((a.at(edge.from, edge.to) * p.rep()).norm());
}

std::vector<Vector> angle_grid(std::size_t resolution) {
  require(resolution >= 2, Errc::InvalidArgument, "angle grid needs at least 2 points");
  std::vector<Vector> grid(resolution, Vector(2));
  for (std::size_t k = 0; k < resolution; ++k) {
    const double theta = (static_cast<double>(k) + 0.5) * std::numbers::pi / static_cast<double>(resolution);
    grid[k] << std::cos(theta), std::sin(theta);
  }
  return grid;
}

ContractionEstimate kappa(const Cocycle& a, const MarkovKernel& kernel, double alpha, std::size_t n,
                          const SamplingBudget& budget, std::uint64_t seed) {
  require(alpha > 0.0 && alpha <= 1.0, Errc::InvalidArgument, "alpha must lie in (0,1]");
  require(n >= 1, Errc::InvalidArgument, "kappa needs n >= 1");
  require(a.dim() >= 2, Errc::InvalidArgument, "kappa needs fiber dimension >= 2");
  require(budget.trajectories >= 2, Errc::InvalidArgument, "kappa needs at least 2 trajectories");
  a.validate_against(kernel);
  const TransitionSampler sampler(kernel);
  const std::size_t S = kernel.n_states();
  std::vector<CellResult> cells(S);

  detail::dispatch_dim(a.dim(), [&](auto dconst) {
    constexpr int D = decltype(dconst)::value;
    const detail::EdgeTable<D> table(a);
    const ProductSampler<D> ps{table, sampler, a.dim()};
    parallel_for(S, [&](std::size_t x) { cells[x] = kappa_cell(ps, x, alpha, n, budget, seed); });
  });

  ContractionEstimate est;
  est.alpha = alpha;
  est.n = n;
  est.value = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < S; ++x) {
    est.pairs_sampled += cells[x].pairs;
    est.degenerate_pairs += cells[x].degenerate;
    est.diagnostics.insert(est.diagnostics.end(), cells[x].top.begin(), cells[x].top.end());
    if (cells[x].value > est.value) {
      est.value = cells[x].value;
      est.std_error = cells[x].std_error;
      est.argmax_x = x;
      est.argmax_p = cells[x].p;
      est.argmax_q = cells[x].q;
    }
  }
  est.sup_over = a.dim() == 2
                     ? "all states x; all pairs of the " + std::to_string(budget.grid_resolution) +
                           "-point offset angle grid"
                     : "all states x; " + std::to_string(budget.random_pairs) +
                           " random pairs plus singular-vector pairs of " +
                           std::to_string(budget.singular_products) + " sampled products per state";
  return est;
}

ContractionHorizon contraction_horizon_report(const Cocycle& a, const MarkovKernel& kernel,
                                              const SamplingBudget& budget, std::uint64_t seed) {
  require(a.dim() >= 2, Errc::InvalidArgument, "contraction horizon needs fiber dimension >= 2");
  require(budget.horizon_cap >= 1 && budget.trajectories >= 1, Errc::InvalidArgument,
          "contraction horizon needs a positive cap and budget");
  a.validate_against(kernel);
  const TransitionSampler sampler(kernel);
  const std::size_t S = kernel.n_states();
  const std::size_t N = budget.trajectories;
  ContractionHorizon out;

  detail::dispatch_dim(a.dim(), [&](auto dconst) {
    constexpr int D = decltype(dconst)::value;
    using Walker = typename ProductSampler<D>::Walker;
    const detail::EdgeTable<D> table(a);
    const ProductSampler<D> ps{table, sampler, a.dim()};

    std::vector<std::vector<Walker>> walkers(S);
    std::vector<CounterRng> rngs;
    std::vector<PairSet> pairs(S);
    for (std::size_t x = 0; x < S; ++x) {
      rngs.emplace_back(seed, stream_id(kTagHorizon, x));
      walkers[x].assign(N, ps.start(x));
      if (a.dim() > 2) pairs[x] = general_pairs(ps, x, 1, budget, seed);
    }
    const std::vector<Vector> grid = a.dim() == 2 ? angle_grid(budget.grid_resolution) : std::vector<Vector>{};

    for (std::size_t n = 1; n <= budget.horizon_cap; ++n) {
      std::vector<double> sup_x(S);
      parallel_for(S, [&](std::size_t x) {
        for (auto& w : walkers[x]) ps.step(w, rngs[x]);
        double mean_logdet = 0.0;
        for (const auto& w : walkers[x]) mean_logdet += w.logdet;
        mean_logdet /= static_cast<double>(N);
        if (a.dim() == 2) {
          // E log ratio = E log|det| - E log||Mp|| - E log||Mq||; the sup over
          // p != q takes the two smallest mean log-norms.
          double lo1 = std::numeric_limits<double>::infinity(), lo2 = lo1;
          for (const Vector& p : grid) {
            double s = 0.0;
            for (const auto& w : walkers[x]) {
              const double v0 = w.prod(0, 0) * p(0) + w.prod(0, 1) * p(1);
              const double v1 = w.prod(1, 0) * p(0) + w.prod(1, 1) * p(1);
              s += std::log(std::hypot(v0, v1));
            }
            s /= static_cast<double>(N);
            if (s < lo1) {
              lo2 = lo1;
              lo1 = s;
            } else if (s < lo2) {
              lo2 = s;
            }
          }
          sup_x[x] = mean_logdet - lo1 - lo2;
        } else {
          double best = -std::numeric_limits<double>::infinity();
          for (const auto& [i, j] : pairs[x].pairs) {
            const Vector& p = pairs[x].points[i];
            const Vector& q = pairs[x].points[j];
            double s = 0.0;
            for (const auto& w : walkers[x]) {
              const Matrix m(w.prod);
              s += std::log(delta(Vector(m * p), Vector(m * q)));
            }
            best = std::max(best, s / static_cast<double>(N) - std::log(delta(p, q)));
          }
          sup_x[x] = best;
        }
      });
      const double sup = *std::max_element(sup_x.begin(), sup_x.end());
      out.sup_log_ratio.push_back(sup);
      if (n == 1 || sup < out.best) out.best = sup;
      if (sup <= -1.0) {
        out.n0 = n;
        return;
      }
    }
  });

  return out;
}

std::size_t contraction_horizon(const Cocycle& a, const MarkovKernel& kernel,
                                const SamplingBudget& budget, std::uint64_t seed) {
  const ContractionHorizon h = contraction_horizon_report(a, kernel, budget, seed);
  if (h.n0 == 0) {
    throw Error(Errc::NoContractionWithinHorizon,
                "no n <= " + std::to_string(budget.horizon_cap) +
                    " with sup E log delta-ratio <= -1; best value " + std::to_string(h.best));
  }
  return h.n0;
}

}  // namespace cocyclab
