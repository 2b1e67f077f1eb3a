#include <benchmark/benchmark.h>

#include <random>

#include "ecnd/layers.hpp"
#include "ecnd/network.hpp"
#include "ecnd/parallel.hpp"

using namespace ecnd;

namespace {

void fill(Tensor4 &t, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (float &v : t.data) v = dist(gen);
}

void bm_conv_forward(benchmark::State &state) {
  const int channels = static_cast<int>(state.range(0));
  const int size = static_cast<int>(state.range(1));
  const int dilation = static_cast<int>(state.range(2));
  set_num_threads(1);

  Tensor4 input(1, channels, size, size);
  fill(input, 1);
  Conv2dParams p;
  p.in_channels = channels;
  p.out_channels = channels;
  p.dilation = dilation;
  p.weights = Tensor4(channels, channels, 3, 3);
  fill(p.weights, 2);

  for (auto _ : state) {
    auto [out, cache] = conv2d_forward(input, p);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(size) *
                          size * channels * channels * 9);
}

void bm_conv_backward(benchmark::State &state) {
  const int channels = static_cast<int>(state.range(0));
  const int size = static_cast<int>(state.range(1));
  set_num_threads(1);

  Tensor4 input(1, channels, size, size);
  fill(input, 3);
  Conv2dParams p;
  p.in_channels = channels;
  p.out_channels = channels;
  p.dilation = 1;
  p.weights = Tensor4(channels, channels, 3, 3);
  fill(p.weights, 4);
  auto [out, cache] = conv2d_forward(input, p);
  Tensor4 upstream(1, channels, size, size);
  fill(upstream, 5);

  for (auto _ : state) {
    ConvGrads g = conv2d_backward(upstream, cache, p);
    benchmark::DoNotOptimize(g.input.data.data());
  }
}

void bm_denoise(benchmark::State &state) {
  const int size = static_cast<int>(state.range(0));
  set_num_threads(1);

  Model m = build_variant(Variant::ECNDNet, 17, 64, 1);
  Tensor4 y(1, 1, size, size);
  fill(y, 6);
  for (float &v : y.data) v = 0.5f + 0.25f * v;

  for (auto _ : state) {
    Tensor4 out = denoise(m, y);
    benchmark::DoNotOptimize(out.data.data());
  }
}

} // namespace

BENCHMARK(bm_conv_forward)
    ->Args({64, 64, 1})
    ->Args({64, 64, 2})
    ->Args({64, 128, 1})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(bm_conv_backward)
    ->Args({64, 64})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(bm_denoise)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
