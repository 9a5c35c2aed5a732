// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "cocyclab/linalg.hpp"
#include "cocyclab/markov.hpp"

namespace cocyclab {

/// Square matrices of a common dimension attached to edges (i,j) of a
/// finite state graph. No invertibility requirement; used for perturbation
/// directions and as the storage behind `Cocycle`.
class MatrixField {
 public:
  MatrixField() = default;
  MatrixField(std::size_t n_states, std::size_t dim);

  void set(State from, State to, Matrix m);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t dim() const noexcept { return dim_; }
  /// Edges in row-major order.
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  bool has(State from, State to) const noexcept;
  /// Throws MissingEdge.
  const Matrix& at(State from, State to) const;
  /// Position of the edge in `edges()`, or -1.
  int index(State from, State to) const noexcept;
  const Matrix& by_index(std::size_t k) const { return mats_[k]; }

  bool same_shape(const MatrixField& other) const noexcept;

  /// Every edge of the kernel support carries a matrix of the right size.
  static MatrixField constant(const MarkovKernel& kernel, const Matrix& m);
  static MatrixField from_function(const MarkovKernel& kernel, std::size_t dim,
                                   const std::function<Matrix(State, State)>& fn);

 private:
  std::size_t n_states_ = 0;
  std::size_t dim_ = 0;
  std::vector<int> index_;
  std::vector<Edge> edges_;
  std::vector<Matrix> mats_;
};

/// Invertible matrix field: every matrix has |det| > 1e-14. Caches the
/// spectral-norm suprema of A and A^{-1} over the edges.
class Cocycle {
 public:
  static constexpr double kDetThreshold = 1e-14;

  explicit Cocycle(MatrixField field);

  static Cocycle constant(const MarkovKernel& kernel, const Matrix& m);
  static Cocycle from_function(const MarkovKernel& kernel, std::size_t dim,
                               const std::function<Matrix(State, State)>& fn);

  std::size_t n_states() const noexcept { return field_.n_states(); }
  std::size_t dim() const noexcept { return field_.dim(); }
  const std::vector<Edge>& edges() const noexcept { return field_.edges(); }
  const Matrix& at(State from, State to) const { return field_.at(from, to); }
  const MatrixField& field() const noexcept { return field_; }

  double norm_sup() const noexcept { return norm_sup_; }
  double inv_norm_sup() const noexcept { return inv_norm_sup_; }

  /// Throws MissingEdge if some support edge of the kernel has no matrix,
  /// ShapeMismatch if the state counts differ.
  void validate_against(const MarkovKernel& kernel) const;

 private:
  MatrixField field_;
  double norm_sup_ = 0.0;
  double inv_norm_sup_ = 0.0;
};

struct CocycleProduct {
  Matrix value;
  std::size_t length = 0;
  std::vector<State> base_window;
};

/// A(x_{n-1},x_n) ... A(x_0,x_1) over the first n steps of the trajectory.
CocycleProduct product_along(const Cocycle& a, const Trajectory& traj, std::size_t n);

/// Same product over an explicit window of states starting at `offset`.
Matrix product_over(const Cocycle& a, const std::vector<State>& states, std::size_t offset,
                    std::size_t n);

/// k-th compound matrices in the lexicographic wedge basis.
Cocycle exterior_power(const Cocycle& a, std::size_t k);

/// Edgewise A + t D. Throws SingularPerturbation naming the first edge whose
/// perturbed matrix fails the determinant threshold.
Cocycle perturb(const Cocycle& a, const MatrixField& direction, double t);

/// max over edges of ||A(i,j) - B(i,j)||. Throws ShapeMismatch.
double d_inf(const Cocycle& a, const Cocycle& b);

/// (max{||A||,||A^-1||}^n, n max{||A||,||B||}^{n-1}); B defaults to A.
std::pair<double, double> iterate_norm_bounds(const Cocycle& a, std::size_t n,
                                              const Cocycle* b = nullptr);

}  // namespace cocyclab
