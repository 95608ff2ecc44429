#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "specdeconf/parallel.hpp"
#include "specdeconf/rng.hpp"

using namespace specdeconf;

TEST(CounterRng, AddressableByKeyAndCounter) {
  CounterRng a(42);
  CounterRng b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(a.counter(), 100u);
  CounterRng c(43);
  EXPECT_NE(CounterRng(42).next_u64(), c.next_u64());
}

TEST(CounterRng, StreamKeysSeparateTagsSeedsAndReplicates) {
  std::set<std::uint64_t> keys;
  for (std::uint64_t seed : {0u, 1u, 2u})
    for (const char* tag : {"coefficients", "confounder", "covariate-noise", "response-noise"})
      for (std::uint64_t rep : {0u, 1u, 99u}) keys.insert(stream_key(seed, tag, rep));
  EXPECT_EQ(keys.size(), 3u * 4u * 3u);
  EXPECT_EQ(stream_key(5, "x", 2), stream_key(5, "x", 2));
}

TEST(CounterRng, UniformMoments) {
  auto rng = make_stream(7, "uniform");
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_NEAR(sq / n - 0.25, 1.0 / 12.0, 0.002);
}

TEST(CounterRng, NormalMoments) {
  auto rng = make_stream(8, "normal");
  const int n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  EXPECT_NEAR(m1 / n, 0.0, 0.01);
  EXPECT_NEAR(m2 / n, 1.0, 0.015);
  EXPECT_NEAR(m4 / n, 3.0, 0.1);
}

TEST(CounterRng, BelowIsUniform) {
  auto rng = make_stream(9, "below");
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(ParallelFor, RethrowsTaskException) {
  EXPECT_THROW(parallel_for(50, 3,
                            [](std::size_t i) {
                              if (i == 17) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
