//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Serial reference kernels against the blocked OpenMP ones. Thread count
// follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "clod/mlp.hpp"
#include "clod/reference/mlp_reference.hpp"
#include "clod/sat.hpp"
#include "support.hpp"

using namespace clod;

namespace {

constexpr double kLod = 30.5;

void BM_ForwardReference(benchmark::State& state) {
  const auto model = test::random_model<float>(kDeskArch, 1);
  const auto x = test::random_matrix<float>(6, state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(reference::forward(model, x, kLod));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ForwardParallel(benchmark::State& state) {
  const auto model = test::random_model<float>(kDeskArch, 1);
  const auto x = test::random_matrix<float>(6, state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, x, kLod));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BackwardReference(benchmark::State& state) {
  const auto model = test::random_model<float>(kDeskArch, 1);
  const auto x = test::random_matrix<float>(6, state.range(0), 2);
  const auto g = test::random_matrix<float>(4, state.range(0), 3);
  ParamVector<float> grads(model.parameters().size());
  for (auto _ : state) {
    reference::backward(model, x, kLod, g, std::span<float>(grads));
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BackwardParallel(benchmark::State& state) {
  const auto model = test::random_model<float>(kDeskArch, 1);
  const auto x = test::random_matrix<float>(6, state.range(0), 2);
  const auto g = test::random_matrix<float>(4, state.range(0), 3);
  ParamVector<float> grads(model.parameters().size());
  ForwardCache<float> cache;
  for (auto _ : state) {
    forward(model, x, kLod, cache);
    backward(model, cache, g, std::span<float>(grads));
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<Image> bench_images() {
  std::vector<Image> images;
  for (int i = 0; i < 24; ++i) images.push_back(test::random_image(256, 256, 4, 100 + i));
  return images;
}

void BM_SatSerial(benchmark::State& state) {
  const auto images = bench_images();
  for (auto _ : state) {
    std::vector<SummedAreaTable> tables;
    for (const auto& img : images) tables.push_back(SummedAreaTable::build(img));
    benchmark::DoNotOptimize(tables);
  }
}

void BM_SatParallel(benchmark::State& state) {
  const auto images = bench_images();
  for (auto _ : state) benchmark::DoNotOptimize(build_tables(images));
}

}  // namespace

BENCHMARK(BM_ForwardReference)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardParallel)->Arg(4096)->Arg(65536)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackwardReference)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackwardParallel)->Arg(4096)->Arg(65536)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SatSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SatParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
