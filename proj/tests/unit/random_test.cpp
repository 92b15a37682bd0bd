#include <gtest/gtest.h>

#include <cmath>

#include "loec/random.hpp"

namespace {

TEST(Rng, SameSeedSameSequence) {
  loec::Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(Rng, UniformIntStaysInRange) {
  loec::Rng r(9);
  for (int i = 0; i < 1000; ++i) {
    const int v = r.uniform_int(7);
    EXPECT_GE(v, 0);
    EXPECT_LT(v, 7);
  }
}

TEST(Rng, NormalMoments) {
  loec::Rng r(11);
  double s = 0, s2 = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(std::sqrt(s2 / n), 1.0, 0.02);
}

TEST(CounterStream, OrderIndependent) {
  const double a = loec::counter_normal(3, 10);
  loec::counter_normal(3, 11);
  EXPECT_EQ(loec::counter_normal(3, 10), a);
  EXPECT_NE(loec::counter_normal(4, 10), a);
  const double u = loec::counter_uniform(3, 10);
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_NE(loec::derive_seed(1, 0), loec::derive_seed(1, 1));
  EXPECT_NE(loec::derive_seed(1, 0), loec::derive_seed(2, 0));
  EXPECT_EQ(loec::derive_seed(1, 5), loec::derive_seed(1, 5));
}

}  // namespace
