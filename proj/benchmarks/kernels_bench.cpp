#include <benchmark/benchmark.h>

#include "loec/encoder.hpp"
#include "loec/episode.hpp"
#include "loec/lcm.hpp"
#include "loec/lem.hpp"
#include "loec/random.hpp"
#include "loec/spectral.hpp"
#include "loec/training.hpp"

namespace {

loec::FeatureMap noise(loec::Shape shape, std::uint64_t seed) {
  loec::FeatureMap f(shape);
  std::uint64_t i = 0;
  for (double& v : f.data()) v = loec::counter_normal(seed, i++);
  return f;
}

void BM_Conv2d(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int size = static_cast<int>(state.range(1));
  const auto x = noise({1, c, size, size}, 1);
  const auto k = loec::same_kernel(noise({c, c, 3, 3}, 2));
  for (auto _ : state) benchmark::DoNotOptimize(loec::conv2d(x, k));
  state.SetItemsProcessed(state.iterations() * c * c * 9 * size * size);
}
BENCHMARK(BM_Conv2d)->Args({8, 32})->Args({32, 16})->Args({32, 8});

void BM_Fft2(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const auto x = noise({1, 8, size, size}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(loec::fft2(x));
}
// 12 takes the direct-sum path
BENCHMARK(BM_Fft2)->Arg(8)->Arg(12)->Arg(32);

void BM_ApplyLem(benchmark::State& state) {
  const auto f = noise({static_cast<int>(state.range(0)), 8, 32, 32}, 4);
  loec::LemConfig cfg;
  std::uint64_t draw = 0;
  for (auto _ : state) benchmark::DoNotOptimize(loec::apply_lem(f, cfg, draw++));
}
BENCHMARK(BM_ApplyLem)->Arg(1)->Arg(5);

void BM_Calibrate(benchmark::State& state) {
  const loec::ScoreMap s(noise({1, 2, 32, 32}, 5));
  const auto low = noise({1, 8, 32, 32}, 6);
  loec::CalibConfig cfg;
  cfg.mode = state.range(0) ? loec::SimilarityMode::kPixel : loec::SimilarityMode::kPatch;
  for (auto _ : state) benchmark::DoNotOptimize(loec::calibrate(s, low, cfg));
}
BENCHMARK(BM_Calibrate)->Arg(0)->Arg(1);

void BM_TrainStep(benchmark::State& state) {
  const auto ep = loec::generate_episode(7, loec::source_domain(), static_cast<int>(state.range(0)), 32, 32);
  auto enc = loec::make_encoder(7);
  auto opt = loec::SgdState::zeros_like(enc);
  loec::LemConfig lem;
  const bool with_lem = state.range(1) != 0;
  std::uint64_t draw = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(loec::train_step(enc, opt, ep, with_lem ? &lem : nullptr, draw++, {}));
  }
}
BENCHMARK(BM_TrainStep)->Args({1, 0})->Args({1, 1})->Args({5, 0});

}  // namespace

BENCHMARK_MAIN();
