#include <benchmark/benchmark.h>

#include "inb/bagging.hpp"
#include "inb/layers.hpp"
#include "inb/ops.hpp"
#include "inb/rng.hpp"

namespace {

inb::Tensor<float> noise(const inb::Shape& shape, inb::Rng& rng) {
  inb::Tensor<float> t(shape);
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  inb::Rng rng(1);
  const auto a = noise({128, n}, rng), b = noise({n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(inb::ops::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(128 * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(784);

void BM_Conv2d(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  inb::Rng rng(2);
  const auto x = noise({16, channels, 16, 16}, rng), f = noise({channels, channels, 3, 3}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(inb::ops::conv2d(x, f, 1, inb::Padding::kSame));
}
BENCHMARK(BM_Conv2d)->Arg(16)->Arg(64);

void BM_GroupedDenseStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  inb::Rng rng(3);
  const inb::GroupSpec spec{64, n, inb::Method::kA, 0.5};
  auto layer = inb::DenseGrouped<float>::initialize(784, spec, inb::Activation::kRelu, rng);
  const auto x = noise({128, 784}, rng);
  const auto up = noise({128, 64}, rng);
  for (auto _ : state) {
    const auto mask = inb::sample_mask(spec, 128, rng);
    benchmark::DoNotOptimize(layer.forward_train(x, mask));
    benchmark::DoNotOptimize(layer.backward(up, false));
  }
}
BENCHMARK(BM_GroupedDenseStep)->Arg(1)->Arg(4);

void BM_SampleMask(benchmark::State& state) {
  inb::Rng rng(4);
  const inb::GroupSpec spec{256, 4, state.range(0) == 0 ? inb::Method::kA : inb::Method::kB, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(inb::sample_mask(spec, 128, rng));
}
BENCHMARK(BM_SampleMask)->Arg(0)->Arg(1);

void BM_Combine(benchmark::State& state) {
  inb::Rng rng(5);
  const inb::GroupSpec spec{256, 4, inb::Method::kA, 0.5};
  const auto layer = inb::DenseGrouped<float>::initialize(784, spec, inb::Activation::kRelu, rng);
  for (auto _ : state) benchmark::DoNotOptimize(layer.combine());
}
BENCHMARK(BM_Combine);

}  // namespace
BENCHMARK_MAIN();
