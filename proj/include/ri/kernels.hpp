#pragma once

#include <cstdint>
#include <vector>

#include <omp.h>

#include "ri/common.hpp"

namespace ri {

// Execution mode for Monte Carlo kernels. Serial is the reference
// implementation: the parallel path must produce bit-identical results for
// any thread count, which the tests assert and the bench target times.
enum class RunMode { Serial, OpenMP };

struct KernelConfig {
  RunMode mode = RunMode::OpenMP;
  int threads = 0;  // 0 = library default
  uint64_t block = 4096;
};

// Runs fn(block_index, begin, end) over [0, n) split into fixed-size blocks.
// Block boundaries do not depend on the mode or thread count, and each block
// writes only to its own slot, so reductions done in block order afterwards
// are deterministic.
template <typename Fn>
void run_blocks(uint64_t n, const KernelConfig& cfg, Fn&& fn) {
  if (n == 0) return;
  uint64_t block = cfg.block ? cfg.block : 4096;
  uint64_t nblocks = (n + block - 1) / block;
  if (cfg.mode == RunMode::Serial || nblocks == 1) {
    for (uint64_t b = 0; b < nblocks; ++b) {
      uint64_t lo = b * block;
      fn(b, lo, std::min(n, lo + block));
    }
    return;
  }
  int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int64_t b = 0; b < int64_t(nblocks); ++b) {
    uint64_t lo = uint64_t(b) * block;
    fn(uint64_t(b), lo, std::min(n, lo + block));
  }
}

// Mean/stderr of per-item scores produced by item(i) -> double.
// The per-block partials are combined serially in block order.
template <typename Item>
MeanStat mc_mean(uint64_t n, const KernelConfig& cfg, Item&& item) {
  uint64_t block = cfg.block ? cfg.block : 4096;
  uint64_t nblocks = (n + block - 1) / block;
  std::vector<MeanStat> partial(nblocks);
  run_blocks(n, cfg, [&](uint64_t b, uint64_t lo, uint64_t hi) {
    MeanStat st;
    for (uint64_t i = lo; i < hi; ++i) st.add(item(i));
    partial[b] = st;
  });
  MeanStat total;
  for (const MeanStat& p : partial) total.merge(p);
  return total;
}

}  // namespace ri
