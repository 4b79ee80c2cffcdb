#include <benchmark/benchmark.h>

#include "ddrop/algebra.hpp"

namespace {

void BM_derive_embedding_integers(benchmark::State& state) {
  auto src = ddrop::validate_pair(19, 24);
  auto tgt = ddrop::validate_pair(1829, 2280);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ddrop::derive_embedding_integers(src, tgt, 0.5));
  }
}
BENCHMARK(BM_derive_embedding_integers);

}  // namespace

BENCHMARK_MAIN();
