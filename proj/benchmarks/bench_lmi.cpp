#include <benchmark/benchmark.h>

#include <random>

#include "lmid/image.hpp"
#include "lmid/lmi.hpp"

namespace {

lmid::Image noise_image(int n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  lmid::Image img(n, n);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = u(g);
  return img;
}

// args: edge length, threads
void BM_LmiMap(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int threads = static_cast<int>(state.range(1));
  const auto a = noise_image(n, 1);
  const auto b = noise_image(n, 2);
  lmid::LmiConfig cfg;
  for (auto _ : state) {
    auto m = lmid::lmi_map(a, b, cfg, threads);
    benchmark::DoNotOptimize(m);
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_LmiMap)
    ->ArgsProduct({{32, 64}, {1, 2, 4}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

void BM_LmiPoint(benchmark::State& state) {
  const auto a = lmid::quantize(noise_image(64, 1), 16);
  const auto b = lmid::quantize(noise_image(64, 2), 16);
  for (auto _ : state) {
    auto p = lmid::lmi_point(a, b, {32, 32}, 3, 3);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_LmiPoint);

}  // namespace

BENCHMARK_MAIN();
