// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace cocyclab {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer; used to mix stream identifiers.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Builds a stream identifier from a purpose tag and up to two indices.
/// Different (tag, a, b) give unrelated streams under the same seed.
std::uint64_t stream_id(std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0) noexcept;

/// Counter-based generator. The 64-bit seed is the Philox key, the 128-bit
/// counter is split into (position, stream). Stream splitting is therefore
/// exact: worker `w` draws from stream `w` and never overlaps any other
/// worker, regardless of how many threads run or in which order.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1), safe for logarithms.
  double uniform_open() noexcept;
  double normal() noexcept;
  double exponential() noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace cocyclab
