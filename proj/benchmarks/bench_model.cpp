#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lmid/score_model.hpp"

namespace {

lmid::Image noise_image(int n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  lmid::Image img(n, n);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = u(g);
  return img;
}

struct Fixture {
  lmid::ScoreModel model{lmid::ArchSpec{}, lmid::NoiseSchedule{}, 7};
  lmid::Image x = noise_image(32, 1);
  std::vector<lmid::Image> cond{noise_image(32, 2), noise_image(32, 3), noise_image(32, 4)};
};

void BM_Forward(benchmark::State& state) {
  Fixture f;
  for (auto _ : state) {
    auto out = f.model.forward(f.x, f.cond, 0.4);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  Fixture f;
  std::vector<float> grad(f.model.params().size());
  for (auto _ : state) {
    auto out = f.model.forward_backward(
        f.x, f.cond, 0.4, [](const lmid::ScoreField& o) { return o; }, grad);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_ForwardBackward)->Unit(benchmark::kMillisecond);

}  // namespace
