#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "bilbao/rng.hpp"

using bilbao::RngStream;

TEST(RngStream, SameSeedSameSequence) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, StreamsDiffer) {
  RngStream a(42, 0), b(42, 1), c(43, 0);
  EXPECT_NE(a.next_u64(), b.next_u64());
  RngStream a2(42, 0);
  EXPECT_NE(a2.next_u64(), c.next_u64());
}

TEST(RngStream, ForkDoesNotAdvanceParent) {
  RngStream s(1, 2);
  const RngStream before = s;
  RngStream child = s.fork(5);
  EXPECT_EQ(s, before);
  EXPECT_NE(child.next_u64(), s.next_u64());
}

TEST(RngStream, ForkIsAddressedByTag) {
  const RngStream s(9, 9);
  EXPECT_EQ(s.fork(3), s.fork(3));
  EXPECT_NE(s.fork(3).key(), s.fork(4).key());
}

TEST(RngStream, CopyReplays) {
  RngStream s(5, 5);
  s.next_u64();
  RngStream copy = s;
  EXPECT_EQ(s.uniform(), copy.uniform());
  EXPECT_EQ(s.counter(), copy.counter());
}

TEST(RngStream, UniformRangeAndMean) {
  RngStream s(3, 3);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(RngStream, NormalMoments) {
  RngStream s(11, 0);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    ASSERT_TRUE(std::isfinite(z));
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sq / n - mean * mean, 1.0, 0.015);
}

TEST(RngStream, NoShortCycles) {
  RngStream s(0, 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) seen.insert(s.next_u64());
  EXPECT_EQ(seen.size(), 10000u);
}
