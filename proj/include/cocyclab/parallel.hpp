// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace cocyclab {

/// Caps the number of worker threads used by `parallel_for`. Zero restores
/// the default (hardware concurrency).
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs `body(i)` for i in [0, count). Work is split into contiguous
/// chunks; each index is visited exactly once. Bodies must write only to
/// per-index storage so results do not depend on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Pairwise (fixed-shape tree) summation. The reduction shape depends only
/// on the length of the input.
double tree_sum(std::span<const double> values);

}  // namespace cocyclab
