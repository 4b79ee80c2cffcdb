#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

#include "ddrop/ints.hpp"

namespace ddrop {

// Single knob for every subspace-membership / boundary test.
inline constexpr double kTolBoundary = 1e-9;
// Pure float-noise comparisons (exact identities evaluated in doubles).
inline constexpr double kTolExact = 1e-12;
// Default verification grid.
inline constexpr int kDefaultGrid = 101;

// Matrix-size ceilings.  Full dense morphism checks are cubic per grid point, so
// they stop at kDenseCap; between that and kBuildCap verification switches to
// block-diagonal defects (unitarily invariant, so nothing is lost) plus sparse
// permuted-entry membership tests; past kBuildCap everything is pattern-level.
inline constexpr i64 kDenseCap = 600;
inline constexpr i64 kBuildCap = 2000;
// Hard ceiling for materializing any single dense matrix.
inline constexpr i64 kMatCap = 4096;

// Minimum uniform gap for a strictness witness.
inline constexpr double kStrictnessMinGap = 1e-3;

inline int thread_budget() {
  static int budget = [] {
    if (const char* env = std::getenv("DDROP_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return budget;
}

// Deterministic static partition: results never depend on the thread count or
// scheduling, only on `n` and `body`.
inline void parallel_for(i64 n, const std::function<void(i64)>& body) {
  int workers = thread_budget();
  if (workers <= 1 || n < 4) {
    for (i64 i = 0; i < n; ++i) body(i);
    return;
  }
  if (static_cast<i64>(workers) > n) workers = static_cast<int>(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (i64 i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace ddrop
