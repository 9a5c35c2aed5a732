// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cocyclab/parallel.hpp"
#include "cocyclab/rng.hpp"

using namespace cocyclab;

// Known-answer vectors for Philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const auto out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(CounterRng, Reproducible) {
  CounterRng a(42, 3), b(42, 3), c(42, 4);
  int same_as_c = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    same_as_c += x == c.next_u64();
  }
  EXPECT_EQ(same_as_c, 0);
}

TEST(CounterRng, UniformMoments) {
  CounterRng r(1, 0);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(s2 / n, 1.0 / 3.0, 0.005);
}

TEST(CounterRng, NormalMoments) {
  CounterRng r(9, 1);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(StreamId, Distinct) {
  std::set<std::uint64_t> ids;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 50; ++b) ids.insert(stream_id(7, a, b));
  EXPECT_EQ(ids.size(), 2500u);
  EXPECT_NE(stream_id(1, 0, 0), stream_id(2, 0, 0));
}

TEST(Parallel, ThreadCountInvariant) {
  auto run = [](std::size_t threads) {
    set_max_threads(threads);
    std::vector<double> v(1000);
    parallel_for(v.size(), [&](std::size_t i) {
      CounterRng r(5, stream_id(11, i));
      v[i] = r.uniform();
    });
    return tree_sum(v);
  };
  const double one = run(1);
  EXPECT_EQ(one, run(4));
  EXPECT_EQ(one, run(8));
  set_max_threads(0);
}

TEST(Parallel, TreeSumExact) {
  std::vector<double> v(1024, 0.5);
  EXPECT_EQ(tree_sum(v), 512.0);
  EXPECT_EQ(tree_sum(std::vector<double>{}), 0.0);
}
