// SPDX-License-Identifier: Apache-2.0
#include "cocyclab/linalg.hpp"

#include <algorithm>

#include "cocyclab/errors.hpp"

namespace cocyclab {

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

std::vector<std::vector<std::size_t>> lex_subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k > n) return out;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    out.push_back(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

Matrix compound_matrix(const Matrix& m, std::size_t k) {
  require(m.rows() == m.cols(), Errc::ShapeMismatch, "compound_matrix needs a square matrix");
  const std::size_t n = static_cast<std::size_t>(m.rows());
  require(k >= 1 && k <= n, Errc::InvalidArgument, "compound order must satisfy 1 <= k <= m");
  if (k == 1) return m;
  const auto subsets = lex_subsets(n, k);
  const auto dim = static_cast<Eigen::Index>(subsets.size());
  Matrix out(dim, dim);
  Matrix minor(k, k);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      const auto& rows = subsets[static_cast<std::size_t>(r)];
      const auto& cols = subsets[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
          minor(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
      out(r, c) = k == 2 ? minor(0, 0) * minor(1, 1) - minor(0, 1) * minor(1, 0)
                         : minor.partialPivLu().determinant();
    }
  }
  return out;
}

Matrix orthonormal_basis(const Matrix& columns, double tol) {
  Eigen::ColPivHouseholderQR<Matrix> qr(columns);
  qr.setThreshold(tol);
  const auto rank = qr.rank();
  Matrix q = qr.householderQ() * Matrix::Identity(columns.rows(), rank);
  return q;
}

double subspace_distance(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), Errc::ShapeMismatch,
          "subspace_distance needs bases of equal shape");
  // ||(I - P_b) P_a|| = sine of the largest principal angle.
  const Matrix residual = a - b * (b.transpose() * a);
  return std::min(1.0, spectral_norm(residual));
}

}  // namespace cocyclab
