// SPDX-License-Identifier: Apache-2.0
#include "cocyclab/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cocyclab/errors.hpp"

namespace cocyclab {
namespace {

std::string edge_name(State i, State j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

}  // namespace

MatrixField::MatrixField(std::size_t n_states, std::size_t dim)
    : n_states_(n_states), dim_(dim), index_(n_states * n_states, -1) {
  require(n_states > 0 && dim > 0, Errc::InvalidArgument, "matrix field needs states and dim > 0");
}

void MatrixField::set(State from, State to, Matrix m) {
  require(from < n_states_ && to < n_states_, Errc::InvalidArgument,
          "edge " + edge_name(from, to) + " out of range");
  require(static_cast<std::size_t>(m.rows()) == dim_ && static_cast<std::size_t>(m.cols()) == dim_,
          Errc::ShapeMismatch, "matrix on edge " + edge_name(from, to) + " has wrong size");
  int& slot = index_[from * n_states_ + to];
  if (slot >= 0) {
    mats_[static_cast<std::size_t>(slot)] = std::move(m);
    return;
  }
  // keep edges sorted row-major
  const Edge e{from, to};
  const auto pos = std::lower_bound(edges_.begin(), edges_.end(), e) - edges_.begin();
  edges_.insert(edges_.begin() + pos, e);
  mats_.insert(mats_.begin() + pos, std::move(m));
  for (std::size_t k = static_cast<std::size_t>(pos); k < edges_.size(); ++k)
    index_[edges_[k].from * n_states_ + edges_[k].to] = static_cast<int>(k);
}

bool MatrixField::has(State from, State to) const noexcept { return index(from, to) >= 0; }

int MatrixField::index(State from, State to) const noexcept {
  if (from >= n_states_ || to >= n_states_) return -1;
  return index_[from * n_states_ + to];
}

const Matrix& MatrixField::at(State from, State to) const {
  const int k = index(from, to);
  if (k < 0) throw Error(Errc::MissingEdge, "no matrix on edge " + edge_name(from, to));
  return mats_[static_cast<std::size_t>(k)];
}

bool MatrixField::same_shape(const MatrixField& other) const noexcept {
  return n_states_ == other.n_states_ && dim_ == other.dim_ && edges_ == other.edges_;
}

MatrixField MatrixField::constant(const MarkovKernel& kernel, const Matrix& m) {
  MatrixField f(kernel.n_states(), static_cast<std::size_t>(m.rows()));
  for (const Edge& e : kernel.support()) f.set(e.from, e.to, m);
  return f;
}

MatrixField MatrixField::from_function(const MarkovKernel& kernel, std::size_t dim,
                                       const std::function<Matrix(State, State)>& fn) {
  MatrixField f(kernel.n_states(), dim);
  for (const Edge& e : kernel.support()) f.set(e.from, e.to, fn(e.from, e.to));
  return f;
}

Cocycle::Cocycle(MatrixField field) : field_(std::move(field)) {
  require(!field_.edges().empty(), Errc::InvalidArgument, "cocycle has no edges");
  for (std::size_t k = 0; k < field_.edges().size(); ++k) {
    const Matrix& m = field_.by_index(k);
    const Edge e = field_.edges()[k];
    const double det = m.determinant();
    if (!(std::abs(det) > kDetThreshold)) {
      throw Error(Errc::InvalidArgument,
                  "matrix on edge " + edge_name(e.from, e.to) + " is not invertible (|det| <= 1e-14)");
    }
    norm_sup_ = std::max(norm_sup_, spectral_norm(m));
    inv_norm_sup_ = std::max(inv_norm_sup_, spectral_norm(m.inverse()));
  }
}

Cocycle Cocycle::constant(const MarkovKernel& kernel, const Matrix& m) {
  return Cocycle(MatrixField::constant(kernel, m));
}

Cocycle Cocycle::from_function(const MarkovKernel& kernel, std::size_t dim,
                               const std::function<Matrix(State, State)>& fn) {
  return Cocycle(MatrixField::from_function(kernel, dim, fn));
}

void Cocycle::validate_against(const MarkovKernel& kernel) const {
  require(kernel.n_states() == n_states(), Errc::ShapeMismatch,
          "cocycle has " + std::to_string(n_states()) + " states, kernel has " +
              std::to_string(kernel.n_states()));
  for (const Edge& e : kernel.support()) {
    if (!field_.has(e.from, e.to))
      throw Error(Errc::MissingEdge, "kernel edge " + edge_name(e.from, e.to) + " has no matrix");
  }
}

Matrix product_over(const Cocycle& a, const std::vector<State>& states, std::size_t offset,
                    std::size_t n) {
  require(offset + n < states.size(), Errc::TrajectoryTooShort, "window exceeds trajectory");
  const auto m = static_cast<Eigen::Index>(a.dim());
  Matrix p = Matrix::Identity(m, m);
  Matrix tmp(m, m);
  for (std::size_t k = 0; k < n; ++k) {
    tmp.noalias() = a.at(states[offset + k], states[offset + k + 1]) * p;
    p.swap(tmp);
  }
  return p;
}

CocycleProduct product_along(const Cocycle& a, const Trajectory& traj, std::size_t n) {
  require(n <= traj.length(), Errc::TrajectoryTooShort,
          "product length " + std::to_string(n) + " exceeds trajectory length " +
              std::to_string(traj.length()));
  CocycleProduct out;
  out.length = n;
  out.value = product_over(a, traj.states, 0, n);
  out.base_window.assign(traj.states.begin(), traj.states.begin() + static_cast<std::ptrdiff_t>(n + 1));
  return out;
}

Cocycle exterior_power(const Cocycle& a, std::size_t k) {
  require(k >= 1 && k <= a.dim(), Errc::InvalidArgument, "exterior power index out of range");
  if (k == 1) return a;
  const std::size_t d = lex_subsets(a.dim(), k).size();
  MatrixField f(a.n_states(), d);
  for (const Edge& e : a.edges()) f.set(e.from, e.to, compound_matrix(a.at(e.from, e.to), k));
  return Cocycle(std::move(f));
}

Cocycle perturb(const Cocycle& a, const MatrixField& direction, double t) {
  require(a.field().same_shape(direction), Errc::ShapeMismatch,
          "perturbation direction must share dimension and edge set with the cocycle");
  MatrixField f(a.n_states(), a.dim());
  for (const Edge& e : a.edges()) {
    Matrix m = a.at(e.from, e.to) + t * direction.at(e.from, e.to);
    if (!(std::abs(m.determinant()) > Cocycle::kDetThreshold)) {
      throw Error(Errc::SingularPerturbation,
                  "edge " + edge_name(e.from, e.to) + " becomes singular at t=" + std::to_string(t));
    }
    f.set(e.from, e.to, std::move(m));
  }
  return Cocycle(std::move(f));
}

double d_inf(const Cocycle& a, const Cocycle& b) {
  require(a.field().same_shape(b.field()), Errc::ShapeMismatch,
          "cocycles differ in dimension or edge set");
  double d = 0.0;
  for (const Edge& e : a.edges())
    d = std::max(d, spectral_norm(a.at(e.from, e.to) - b.at(e.from, e.to)));
  return d;
}

std::pair<double, double> iterate_norm_bounds(const Cocycle& a, std::size_t n, const Cocycle* b) {
  require(n >= 1, Errc::InvalidArgument, "iterate_norm_bounds needs n >= 1");
  const double growth = std::pow(std::max(a.norm_sup(), a.inv_norm_sup()), static_cast<double>(n));
  const double base = std::max(a.norm_sup(), b ? b->norm_sup() : a.norm_sup());
  const double lipschitz = static_cast<double>(n) * std::pow(base, static_cast<double>(n - 1));
  return {growth, lipschitz};
}

}  // namespace cocyclab
