// SPDX-License-Identifier: Apache-2.0
// GRU forward/backward: OpenMP chunked kernel vs the same kernel run serially
// vs the loop-based reference. Sizes: batch (arg 0), hidden (arg 1).
#include <benchmark/benchmark.h>

#include <cstdio>

#include "chemrl/common/rng.hpp"
#include "chemrl/model/gru_kernels.hpp"
#include "chemrl/model/params.hpp"
#include "chemrl/model/reference.hpp"

using namespace chemrl;
using namespace chemrl::model;

namespace {

constexpr int kVocab = 40;
constexpr int kLen = 40;

PolicyParams make_params(int hidden) {
  Rng rng(1);
  return init_params(ModelShape{.vocab_size = kVocab, .embedding = hidden / 2, .hidden = hidden}, rng);
}

SequenceBatch make_batch(std::size_t batch) {
  Rng rng(2);
  SequenceBatch b;
  for (std::size_t i = 0; i < batch; ++i) {
    std::vector<int> s{1};
    const int len = 10 + static_cast<int>(uniform_index(rng, kLen - 10));
    for (int t = 1; t < len; ++t) s.push_back(3 + static_cast<int>(uniform_index(rng, kVocab - 3)));
    b.inputs.push_back(std::move(s));
  }
  return b;
}

LogitGrads unit_grads(const Forward& f) {
  LogitGrads g(f);
  for (auto& m : g.d_logits) m.setConstant(1e-3);
  return g;
}

void forward_exec(benchmark::State& st, Exec exec) {
  const auto p = make_params(static_cast<int>(st.range(1)));
  const auto b = make_batch(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(forward(p, b, exec));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void backward_exec(benchmark::State& st, Exec exec) {
  const auto p = make_params(static_cast<int>(st.range(1)));
  const auto b = make_batch(static_cast<std::size_t>(st.range(0)));
  const auto f = forward(p, b, exec);
  const auto g = unit_grads(f);
  for (auto _ : st) benchmark::DoNotOptimize(backward(p, f, g, exec));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_ForwardParallel(benchmark::State& st) { forward_exec(st, Exec::Parallel); }
void BM_ForwardSerial(benchmark::State& st) { forward_exec(st, Exec::Serial); }
void BM_BackwardParallel(benchmark::State& st) { backward_exec(st, Exec::Parallel); }
void BM_BackwardSerial(benchmark::State& st) { backward_exec(st, Exec::Serial); }

void BM_ForwardReference(benchmark::State& st) {
  const auto p = make_params(static_cast<int>(st.range(1)));
  const auto b = make_batch(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(reference::forward_batch(p, b.inputs));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int batch : {16, 64, 256})
    for (int hidden : {64, 256}) b->Args({batch, hidden});
  b->Unit(benchmark::kMillisecond);
}

BENCHMARK(BM_ForwardParallel)->Apply(sizes);
BENCHMARK(BM_ForwardSerial)->Apply(sizes);
BENCHMARK(BM_ForwardReference)->Apply(sizes);
BENCHMARK(BM_BackwardParallel)->Apply(sizes);
BENCHMARK(BM_BackwardSerial)->Apply(sizes);

}  // namespace

BENCHMARK_MAIN();
