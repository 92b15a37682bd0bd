#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "loec/encoder.hpp"
#include "loec/error.hpp"
#include "loec/lem.hpp"
#include "loec/training.hpp"
#include "oracles.hpp"

namespace {

using loec::FeatureMap;

double phase_gap(double a, double b) {
  double d = std::remainder(a - b, 2 * std::numbers::pi);
  return std::abs(d);
}

TEST(SampleTheta, ZeroSigmaGivesZeroKernel) {
  loec::LemConfig cfg;
  cfg.sigma = 0.0;
  const auto theta = loec::sample_theta(cfg, 4, 9);
  for (double v : theta.weights.data()) EXPECT_EQ(v, 0.0);
}

TEST(SampleTheta, DeterministicPerDraw) {
  loec::LemConfig cfg;
  cfg.seed = 17;
  const auto a = loec::sample_theta(cfg, 8, 3);
  EXPECT_EQ(a.weights, loec::sample_theta(cfg, 8, 3).weights);
  EXPECT_NE(a.weights, loec::sample_theta(cfg, 8, 4).weights);
  EXPECT_EQ(a.weights.shape(), (loec::Shape{8, 8, 3, 3}));
  EXPECT_EQ(a.stride, 1);
  EXPECT_EQ(a.padding, 1);
}

TEST(SampleTheta, WeightStatistics) {
  loec::LemConfig cfg;
  cfg.seed = 5;
  std::vector<double> all;
  for (std::uint64_t d = 0; all.size() < 100000; ++d) {
    const auto k = loec::sample_theta(cfg, 16, d);
    all.insert(all.end(), k.weights.data().begin(), k.weights.data().end());
  }
  all.resize(100000);
  double mean = 0.0;
  for (double v : all) mean += v;
  mean /= static_cast<double>(all.size());
  double var = 0.0;
  for (double v : all) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(all.size() - 1));
  EXPECT_LT(std::abs(mean), 3 * 0.1 / std::sqrt(1e5));
  EXPECT_LT(std::abs(sd - 0.1), 0.002);
}

TEST(LemConfig, Validation) {
  loec::LemConfig cfg;
  cfg.kernel_size = 4;
  EXPECT_THROW(cfg.validate(), loec::Error);
  cfg.kernel_size = 3;
  cfg.sigma = -0.1;
  EXPECT_THROW(cfg.validate(), loec::Error);
  cfg.sigma = 0.1;
  cfg.probability = 1.5;
  EXPECT_THROW(cfg.validate(), loec::Error);
}

TEST(Perturb, IdentityZeroAndOracle) {
  std::mt19937_64 rng(1);
  const auto f = oracle::random_map(rng, {2, 4, 6, 5});
  EXPECT_EQ(loec::perturb(f, loec::identity_kernel(4, 3)), f);
  const auto zeroed = loec::perturb(f, loec::same_kernel(FeatureMap({4, 4, 3, 3})));
  for (double v : zeroed.data()) EXPECT_EQ(v, 0.0);
  loec::LemConfig cfg;
  const auto theta = loec::sample_theta(cfg, 4, 2);
  const auto want = oracle::conv2d(f, theta.weights, 1, 1, {});
  EXPECT_LE(loec::max_abs_diff(loec::perturb(f, theta), want), 1e-12);
  EXPECT_THROW(loec::perturb(f, loec::sample_theta(cfg, 3, 2)), loec::Error);
}

TEST(FourierRecombine, SelfIsIdentity) {
  std::mt19937_64 rng(2);
  const auto f = oracle::random_map(rng, {1, 3, 8, 6});
  EXPECT_LE(loec::max_abs_diff(loec::fourier_recombine(f, f), f), 1e-5);
}

TEST(FourierRecombine, PositiveScalingCarriesThrough) {
  std::mt19937_64 rng(3);
  const auto f = oracle::random_map(rng, {1, 2, 8, 8});
  for (double c : {0.5, 3.0}) {
    EXPECT_LE(loec::max_abs_diff(loec::fourier_recombine(f, loec::scaled(f, c)), loec::scaled(f, c)), 1e-5);
  }
}

TEST(FourierRecombine, SpectrumTakesAmplitudeAndPhase) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto f = oracle::random_map(rng, {1, 2, 8, 8});
    const auto g = oracle::random_map(rng, {1, 2, 8, 8});
    const auto z = loec::fourier_recombine_complex(f, g);
    const auto spec = loec::to_polar(loec::dft2(z, false));
    const auto fs = loec::fft2(f);
    const auto gs = loec::fft2(g);
    for (std::size_t i = 0; i < spec.amplitude.size(); ++i) {
      EXPECT_NEAR(spec.amplitude[i], gs.amplitude[i], 1e-5);
      if (gs.amplitude[i] > 1e-6) EXPECT_LT(phase_gap(spec.phase[i], fs.phase[i]), 1e-4);
    }
  }
}

TEST(FourierRecombine, ShapeMismatch) {
  EXPECT_THROW(loec::fourier_recombine(FeatureMap({1, 1, 4, 4}), FeatureMap({1, 1, 4, 5})), loec::Error);
}

TEST(ApplyLem, ZeroSigmaGivesZeroMap) {
  std::mt19937_64 rng(5);
  const auto f = oracle::random_map(rng, {1, 3, 8, 8});
  loec::LemConfig cfg;
  cfg.sigma = 0.0;
  const auto out = loec::apply_lem(f, cfg, 0);
  EXPECT_EQ(out.shape(), f.shape());
  for (double v : out.data()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(ApplyLem, IdentityKernelIsNoOp) {
  std::mt19937_64 rng(6);
  const auto f = oracle::random_map(rng, {2, 8, 16, 16});
  EXPECT_LE(loec::max_abs_diff(loec::apply_lem_with_kernel(f, loec::identity_kernel(8, 3), true), f), 1e-5);
  EXPECT_EQ(loec::apply_lem_with_kernel(f, loec::identity_kernel(8, 3), false), f);
}

TEST(ApplyLem, WithoutFourierIsPlainConvolution) {
  std::mt19937_64 rng(7);
  const auto f = oracle::random_map(rng, {1, 4, 8, 8});
  loec::LemConfig cfg;
  cfg.apply_fourier = false;
  EXPECT_EQ(loec::apply_lem(f, cfg, 3), loec::perturb(f, loec::sample_theta(cfg, 4, 3)));
}

TEST(ApplyLem, PreservesPhase) {
  std::mt19937_64 rng(8);
  loec::LemConfig cfg;
  cfg.seed = 9;
  for (int t = 0; t < 10; ++t) {
    const auto f = oracle::random_map(rng, {1, 4, 8, 8});
    const auto out = loec::apply_lem(f, cfg, static_cast<std::uint64_t>(t));
    const auto before = loec::fft2(f);
    // phase of the complex result before its real part is taken
    const auto z = loec::to_polar(loec::dft2(
        loec::fourier_recombine_complex(f, loec::perturb(f, loec::sample_theta(cfg, 4, static_cast<std::uint64_t>(t)))),
        false));
    for (std::size_t i = 0; i < z.amplitude.size(); ++i) {
      if (z.amplitude[i] > 1e-6) EXPECT_LT(phase_gap(z.phase[i], before.phase[i]), 1e-4);
    }
    EXPECT_EQ(out.shape(), f.shape());
  }
}

TEST(ApplyLem, OneKernelPerEpisodeUnlessPerShot) {
  std::mt19937_64 rng(9);
  const auto one = oracle::random_map(rng, {1, 3, 8, 8});
  FeatureMap two({2, 3, 8, 8});
  std::copy(one.data().begin(), one.data().end(), two.data().begin());
  std::copy(one.data().begin(), one.data().end(), two.data().begin() + static_cast<std::ptrdiff_t>(one.size()));
  loec::LemConfig cfg;
  auto out = loec::apply_lem(two, cfg, 4);
  EXPECT_EQ(out.item(0), out.item(1));
  cfg.per_shot = true;
  out = loec::apply_lem(two, cfg, 4);
  EXPECT_NE(out.item(0), out.item(1));
}

TEST(ApplyLem, StatelessAndPinned) {
  std::mt19937_64 rng(10);
  const auto f = oracle::random_map(rng, {1, 8, 8, 8});
  loec::LemConfig cfg;
  cfg.seed = 42;
  const auto a = loec::apply_lem(f, cfg, 7);
  loec::apply_lem(f, cfg, 8);
  const auto b = loec::apply_lem(f, cfg, 7);
  EXPECT_EQ(a, b);
  std::uint64_t h = 1469598103934665603ull;
  for (double v : a.data()) {
    // rounded to float so the pin survives last-bit differences in libm
    h ^= std::bit_cast<std::uint32_t>(static_cast<float>(v));
    h *= 1099511628211ull;
  }
  EXPECT_EQ(h, 2981356148726016964ull) << h;
}

TEST(LemFires, ProbabilityBounds) {
  loec::LemConfig cfg;
  int fired = 0;
  for (std::uint64_t d = 0; d < 1000; ++d) fired += loec::lem_fires(cfg, d);
  EXPECT_EQ(fired, 1000);
  cfg.probability = 0.0;
  fired = 0;
  for (std::uint64_t d = 0; d < 1000; ++d) fired += loec::lem_fires(cfg, d);
  EXPECT_EQ(fired, 0);
  cfg.probability = 0.3;
  fired = 0;
  for (std::uint64_t d = 0; d < 10000; ++d) fired += loec::lem_fires(cfg, d);
  EXPECT_NEAR(fired / 1e4, 0.3, 0.02);
}

TEST(ApplyLem, QueryBranchUntouched) {
  // LEM is a support-side hook; the query forward never sees it
  const auto enc = loec::make_encoder(3);
  const auto ep = loec::generate_episode(3, loec::source_domain(), 1, 32, 32);
  loec::LemConfig cfg;
  auto opt = loec::SgdState::zeros_like(enc);
  auto with = enc;
  auto without = enc;
  loec::TrainConfig tc;
  tc.lr = 0.0;
  const auto a = loec::train_step(with, opt, ep, &cfg, 0, tc);
  const auto b = loec::train_step(without, opt, ep, nullptr, 0, tc);
  EXPECT_TRUE(a.perturbed);
  EXPECT_FALSE(b.perturbed);
  EXPECT_EQ(loec::forward(with, ep.query_image).deep, loec::forward(without, ep.query_image).deep);
}

}  // namespace
