// SPDX-License-Identifier: Apache-2.0
// Fixed-size matrix tables for the Monte Carlo inner loops.
#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "cocyclab/cocycle.hpp"
#include "cocyclab/errors.hpp"

namespace cocyclab::detail {

template <int D>
using Mat = Eigen::Matrix<double, D, D>;
template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

/// Dense (from,to) -> matrix lookup without bounds checks in the hot path.
/// Entries off the cocycle's edge set are null.
template <int D>
class EdgeTable {
 public:
  explicit EdgeTable(const Cocycle& a) : n_(a.n_states()), slot_(n_ * n_, -1) {
    for (std::size_t k = 0; k < a.edges().size(); ++k) {
      const Edge e = a.edges()[k];
      slot_[e.from * n_ + e.to] = static_cast<int>(mats_.size());
      mats_.push_back(a.at(e.from, e.to));
    }
  }

  const Mat<D>& operator()(State from, State to) const {
    const int k = slot_[from * n_ + to];
    if (k < 0) throw Error(Errc::MissingEdge, "trajectory left the cocycle's edge set");
    return mats_[static_cast<std::size_t>(k)];
  }

 private:
  std::size_t n_;
  std::vector<int> slot_;
  std::vector<Mat<D>, Eigen::aligned_allocator<Mat<D>>> mats_;
};

/// Calls f with std::integral_constant<int, D> where D is the fixed matrix
/// size for small dimensions and Eigen::Dynamic otherwise.
template <class F>
decltype(auto) dispatch_dim(std::size_t m, F&& f) {
  switch (m) {
    case 1: return f(std::integral_constant<int, 1>{});
    case 2: return f(std::integral_constant<int, 2>{});
    case 3: return f(std::integral_constant<int, 3>{});
    default: return f(std::integral_constant<int, Eigen::Dynamic>{});
  }
}

template <int D>
Mat<D> identity(std::size_t m) {
  return Mat<D>::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
}

/// Largest singular value of a small matrix.
template <int D>
double op_norm(const Mat<D>& m) {
  if constexpr (D == 1) {
    return std::abs(m(0, 0));
  } else if constexpr (D == 2) {
    // sigma_1^2 is the largest eigenvalue of M^T M
    const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
    const double s = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::max(0.0, (s - 2.0 * det) * (s + 2.0 * det)));
    return std::sqrt(0.5 * (s + disc));
  } else {
    Eigen::JacobiSVD<Mat<D>> svd(m);
    return svd.singularValues()(0);
  }
}

}  // namespace cocyclab::detail
