// Parallel layer kernels against the serial reference loops, at the shapes of
// the default network.

#include <benchmark/benchmark.h>

#include <random>

#include "noisecam/model.hpp"
#include "noisecam/network.hpp"
#include "noisecam/reference.hpp"

using namespace ncam;

namespace {

Tensor random(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// (side, in channels, filters) of the six conv layers.
constexpr int kConv[][3] = {{32, 3, 16}, {32, 16, 16}, {16, 16, 32}, {16, 32, 32}, {8, 32, 64}, {8, 64, 64}};

void args(benchmark::internal::Benchmark* b) {
  for (int i = 0; i < 6; ++i) b->Arg(i);
}

void BM_conv2d(benchmark::State& st) {
  const auto* c = kConv[st.range(0)];
  const Tensor x = random({std::size_t(c[0]), std::size_t(c[0]), std::size_t(c[1])}, 1);
  const Tensor k = random({3, 3, std::size_t(c[1]), std::size_t(c[2])}, 2);
  for (auto _ : st) benchmark::DoNotOptimize(conv2d(x, k, 1, 1));
}

void BM_conv2d_reference(benchmark::State& st) {
  const auto* c = kConv[st.range(0)];
  const Tensor x = random({std::size_t(c[0]), std::size_t(c[0]), std::size_t(c[1])}, 1);
  const Tensor k = random({3, 3, std::size_t(c[1]), std::size_t(c[2])}, 2);
  for (auto _ : st) benchmark::DoNotOptimize(reference::conv2d(x, k, 1, 1));
}

void BM_conv2d_backward_input(benchmark::State& st) {
  const auto* c = kConv[st.range(0)];
  const Shape in{std::size_t(c[0]), std::size_t(c[0]), std::size_t(c[1])};
  const Tensor k = random({3, 3, std::size_t(c[1]), std::size_t(c[2])}, 2);
  const Tensor g = random({std::size_t(c[0]), std::size_t(c[0]), std::size_t(c[2])}, 3);
  for (auto _ : st) benchmark::DoNotOptimize(conv2d_backward_input(g, k, in, 1, 1));
}

void BM_conv2d_backward_input_reference(benchmark::State& st) {
  const auto* c = kConv[st.range(0)];
  const Shape in{std::size_t(c[0]), std::size_t(c[0]), std::size_t(c[1])};
  const Tensor k = random({3, 3, std::size_t(c[1]), std::size_t(c[2])}, 2);
  const Tensor g = random({std::size_t(c[0]), std::size_t(c[0]), std::size_t(c[2])}, 3);
  for (auto _ : st) benchmark::DoNotOptimize(reference::conv2d_backward_input(g, k, in, 1, 1));
}

void BM_conv2d_backward_kernels(benchmark::State& st) {
  const auto* c = kConv[st.range(0)];
  const Tensor x = random({std::size_t(c[0]), std::size_t(c[0]), std::size_t(c[1])}, 1);
  const Tensor g = random({std::size_t(c[0]), std::size_t(c[0]), std::size_t(c[2])}, 3);
  Tensor gk({3, 3, std::size_t(c[1]), std::size_t(c[2])}), gb({std::size_t(c[2])});
  for (auto _ : st) {
    conv2d_backward_params(x, g, 1, 1, gk, gb);
    benchmark::DoNotOptimize(gk.data().data());
  }
}

void BM_conv2d_backward_kernels_reference(benchmark::State& st) {
  const auto* c = kConv[st.range(0)];
  const Tensor x = random({std::size_t(c[0]), std::size_t(c[0]), std::size_t(c[1])}, 1);
  const Tensor g = random({std::size_t(c[0]), std::size_t(c[0]), std::size_t(c[2])}, 3);
  const Shape ks{3, 3, std::size_t(c[1]), std::size_t(c[2])};
  for (auto _ : st) benchmark::DoNotOptimize(reference::conv2d_backward_kernels(x, g, ks, 1, 1));
}

void BM_maxpool(benchmark::State& st) {
  const Tensor x = random({32, 32, 16}, 4);
  for (auto _ : st) benchmark::DoNotOptimize(maxpool2d(x, 2, 2));
}

void BM_maxpool_reference(benchmark::State& st) {
  const Tensor x = random({32, 32, 16}, 4);
  for (auto _ : st) benchmark::DoNotOptimize(reference::maxpool2d(x, 2, 2));
}

void BM_forward_backward(benchmark::State& st) {
  const ModelWeights m = build_default_model();
  const Tensor x = random({32, 32, 3}, 5);
  for (auto _ : st) {
    const Tape tape = forward(m, x);
    benchmark::DoNotOptimize(backward_score(m, tape, 0));
  }
}

}  // namespace

BENCHMARK(BM_conv2d)->Apply(args);
BENCHMARK(BM_conv2d_reference)->Apply(args);
BENCHMARK(BM_conv2d_backward_input)->Apply(args);
BENCHMARK(BM_conv2d_backward_input_reference)->Apply(args);
BENCHMARK(BM_conv2d_backward_kernels)->Apply(args);
BENCHMARK(BM_conv2d_backward_kernels_reference)->Apply(args);
BENCHMARK(BM_maxpool);
BENCHMARK(BM_maxpool_reference);
BENCHMARK(BM_forward_backward);

BENCHMARK_MAIN();
