// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace cocyclab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest singular value.
double spectral_norm(const Matrix& m);

/// All k-element subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<std::size_t>> lex_subsets(std::size_t n, std::size_t k);

/// k-th compound (exterior power) matrix in the lexicographic wedge basis:
/// entry (I, J) is the minor det(M[I, J]).
Matrix compound_matrix(const Matrix& m, std::size_t k);

/// Orthonormal basis of the column span (thin QR); rank decided at tol.
Matrix orthonormal_basis(const Matrix& columns, double tol = 1e-12);

/// Sine of the largest principal angle between two subspaces given by
/// orthonormal bases of equal dimension.
double subspace_distance(const Matrix& basis_a, const Matrix& basis_b);

}  // namespace cocyclab
