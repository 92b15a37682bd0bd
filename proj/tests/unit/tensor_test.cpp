#include <gtest/gtest.h>

#include <random>

#include "loec/error.hpp"
#include "loec/tensor.hpp"
#include "oracles.hpp"

namespace {

using loec::FeatureMap;

TEST(Conv2d, IdentityKernelReturnsInput) {
  std::mt19937_64 rng(1);
  const FeatureMap x = oracle::random_map(rng, {2, 3, 5, 6});
  EXPECT_EQ(loec::conv2d(x, loec::identity_kernel(3, 3)), x);
}

TEST(Conv2d, ZeroKernelGivesZeros) {
  std::mt19937_64 rng(2);
  const FeatureMap x = oracle::random_map(rng, {1, 2, 4, 4});
  const auto y = loec::conv2d(x, loec::same_kernel(FeatureMap({3, 2, 3, 3})));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, AllOnesOverOneToNine) {
  FeatureMap x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto y = loec::conv2d(x, loec::same_kernel(FeatureMap({1, 1, 3, 3}, 1.0)));
  EXPECT_EQ(y.at(0, 0, 1, 1), 45.0);
  EXPECT_EQ(y.at(0, 0, 0, 0), 12.0);
  EXPECT_EQ(y.at(0, 0, 0, 2), 16.0);
  EXPECT_EQ(y.at(0, 0, 2, 0), 24.0);
  EXPECT_EQ(y.at(0, 0, 2, 2), 28.0);
}

TEST(Conv2d, OutputSizeFormula) {
  EXPECT_EQ(loec::conv_output_size(32, 3, 2, 1), 16);
  EXPECT_EQ(loec::conv_output_size(7, 3, 2, 1), 4);
  EXPECT_EQ(loec::conv_output_size(5, 3, 1, 0), 3);
}

TEST(Conv2d, ChannelMismatchIsShapeError) {
  try {
    loec::conv2d(FeatureMap({1, 2, 4, 4}), loec::identity_kernel(3, 3));
    FAIL();
  } catch (const loec::Error& e) {
    EXPECT_EQ(e.code(), loec::ErrorCode::kShape);
  }
}

TEST(Conv2d, Linearity) {
  std::mt19937_64 rng(3);
  const auto x = oracle::random_map(rng, {1, 2, 6, 6});
  const auto y = oracle::random_map(rng, {1, 2, 6, 6});
  const auto k = loec::same_kernel(oracle::random_map(rng, {3, 2, 3, 3}));
  FeatureMap mix = loec::scaled(x, 1.5);
  loec::axpy(-0.25, y, mix);
  FeatureMap expect = loec::scaled(loec::conv2d(x, k), 1.5);
  loec::axpy(-0.25, loec::conv2d(y, k), expect);
  EXPECT_LT(loec::max_abs_diff(loec::conv2d(mix, k), expect), 1e-5);
}

TEST(Conv2d, MatchesOracleWithStrideAndBias) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const int c = oracle::uniform_int(rng, 1, 3), o = oracle::uniform_int(rng, 1, 3);
    const int stride = oracle::uniform_int(rng, 1, 2), pad = oracle::uniform_int(rng, 0, 1);
    const auto x = oracle::random_map(rng, {oracle::uniform_int(rng, 1, 2), c, oracle::uniform_int(rng, 3, 7), oracle::uniform_int(rng, 3, 7)});
    const auto w = oracle::random_map(rng, {o, c, 3, 3});
    std::vector<double> bias(static_cast<std::size_t>(o));
    for (auto& b : bias) b = std::uniform_real_distribution<double>(-1, 1)(rng);
    const auto got = loec::conv2d(x, {w, stride, pad}, bias);
    EXPECT_LT(loec::max_abs_diff(got, oracle::conv2d(x, w, stride, pad, bias)), 1e-12);
  }
}

// Finite-difference check of both conv2d adjoints against a random projection.
TEST(Conv2d, AdjointsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  const auto x = oracle::random_map(rng, {2, 2, 5, 5});
  loec::ConvKernel k{oracle::random_map(rng, {3, 2, 3, 3}), 2, 1};
  const auto probe = oracle::random_map(rng, loec::conv2d(x, k).shape());
  auto objective = [&](const FeatureMap& xx, const loec::ConvKernel& kk) {
    return loec::dot(loec::conv2d(xx, kk).data(), probe.data());
  };
  const auto gx = loec::conv2d_grad_input(probe, k, x.shape());
  FeatureMap gw(k.weights.shape());
  std::vector<double> gb(3, 0.0);
  loec::conv2d_accumulate_grad_weight(probe, x, k, gw, gb);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < x.size(); i += 7) {
    FeatureMap p = x, m = x;
    p.data()[i] += eps;
    m.data()[i] -= eps;
    EXPECT_NEAR(gx.data()[i], (objective(p, k) - objective(m, k)) / (2 * eps), 1e-6);
  }
  for (std::size_t i = 0; i < gw.size(); i += 5) {
    auto kp = k, km = k;
    kp.weights.data()[i] += eps;
    km.weights.data()[i] -= eps;
    EXPECT_NEAR(gw.data()[i], (objective(x, kp) - objective(x, km)) / (2 * eps), 1e-6);
  }
  // Bias gradient is the per-channel sum of the upstream gradient.
  for (int o = 0; o < 3; ++o) {
    double s = 0;
    for (int n = 0; n < probe.n(); ++n)
      for (double v : probe.plane(n, o)) s += v;
    EXPECT_NEAR(gb[static_cast<std::size_t>(o)], s, 1e-9);
  }
}

TEST(Bilinear, SameSizeIsExactIdentity) {
  std::mt19937_64 rng(6);
  const auto x = oracle::random_map(rng, {1, 3, 5, 7});
  EXPECT_EQ(loec::bilinear_resize(x, 5, 7), x);
}

TEST(Bilinear, ConstantStaysConstant) {
  const FeatureMap x({1, 2, 3, 3}, 0.75);
  const auto y = loec::bilinear_resize(x, 8, 5);
  for (double v : y.data()) EXPECT_DOUBLE_EQ(v, 0.75);
}

TEST(Bilinear, TwoByTwoToFourByFour) {
  const FeatureMap x({1, 1, 2, 2}, {0, 1, 2, 3});
  const auto y = loec::bilinear_resize(x, 4, 4);
  // Half-pixel centres: rows sample at -0.25 (clamped), 0.25, 0.75, 1.25.
  const double expect[4][4] = {{0, 0.25, 0.75, 1},
                               {0.5, 0.75, 1.25, 1.5},
                               {1.5, 1.75, 2.25, 2.5},
                               {2, 2.25, 2.75, 3}};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(y.at(0, 0, r, c), expect[r][c], 1e-12) << r << "," << c;
  EXPECT_LT(loec::max_abs_diff(y, oracle::bilinear_resize(x, 4, 4)), 1e-12);
}

TEST(Bilinear, BoundedByInputRange) {
  std::mt19937_64 rng(7);
  const auto x = oracle::random_map(rng, {1, 1, 4, 6});
  const auto y = loec::bilinear_resize(x, 13, 9);
  const auto [lo, hi] = std::minmax_element(x.data().begin(), x.data().end());
  for (double v : y.data()) {
    EXPECT_GE(v, *lo - 1e-12);
    EXPECT_LE(v, *hi + 1e-12);
  }
}

TEST(Bilinear, ZeroSizeIsShapeError) {
  EXPECT_THROW(loec::bilinear_resize(FeatureMap({1, 1, 2, 2}), 0, 3), loec::Error);
}

TEST(Bilinear, GradientIsAdjoint) {
  std::mt19937_64 rng(8);
  const auto x = oracle::random_map(rng, {1, 2, 3, 5});
  const auto g = oracle::random_map(rng, {1, 2, 8, 7});
  const auto gx = loec::bilinear_resize_grad(g, x.shape());
  EXPECT_NEAR(loec::dot(loec::bilinear_resize(x, 8, 7).data(), g.data()), loec::dot(x.data(), gx.data()), 1e-10);
}

TEST(Cosine, Conventions) {
  const std::vector<double> v{1, -2, 3}, neg{-1, 2, -3}, zero{0, 0, 0};
  EXPECT_DOUBLE_EQ(loec::cosine(v, v), 1.0);
  EXPECT_DOUBLE_EQ(loec::cosine(v, neg), -1.0);
  EXPECT_EQ(loec::cosine(zero, v), 0.0);
  EXPECT_THROW(loec::cosine(v, std::vector<double>{1, 2}), loec::Error);
}

TEST(Cosine, SymmetricScaleInvariantBounded) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-5, 5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(6), b(6);
    for (auto& v : a) v = d(rng);
    for (auto& v : b) v = d(rng);
    const double c = loec::cosine(a, b);
    EXPECT_EQ(c, loec::cosine(b, a));
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
    auto a3 = a;
    for (auto& v : a3) v *= 3.7;
    EXPECT_NEAR(loec::cosine(a3, b), c, 1e-12);
  }
}

}  // namespace
