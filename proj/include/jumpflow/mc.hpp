#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "jumpflow/errors.hpp"
#include "jumpflow/rng.hpp"

namespace jumpflow {

/// Streaming mean/variance accumulator (Welford), mergeable in parallel.
struct MCEstimate {
  double mean = 0.0;
  double m2 = 0.0;  // running sum of squared deviations
  long long n = 0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  static MCEstimate merge(const MCEstimate& a, const MCEstimate& b) {
    if (a.n == 0) return b;
    if (b.n == 0) return a;
    MCEstimate out;
    out.n = a.n + b.n;
    const double d = b.mean - a.mean;
    const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n);
    out.mean = a.mean + d * nb / (na + nb);
    out.m2 = a.m2 + b.m2 + d * d * na * nb / (na + nb);
    return out;
  }

  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const {
    return n > 1 ? std::sqrt(m2 / (static_cast<double>(n) * static_cast<double>(n - 1))) : 0.0;
  }
  /// Half width of the confidence interval mean +/- mult * stderr.
  double half_width(double mult) const { return mult * std_error(); }
  /// z-score of the mean against zero.
  double z_score() const {
    const double se = std_error();
    return se > 0.0 ? mean / se : (mean == 0.0 ? 0.0 : std::copysign(1e308, mean));
  }
};

inline int default_thread_count() {
  if (const char* env = std::getenv("JUMPFLOW_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

struct FarmOptions {
  int threads = 0;             // 0: JUMPFLOW_THREADS or hardware concurrency
  double abort_budget = 1e-3;  // max tolerated fraction of aborted paths
  std::uint64_t block = 1024;  // indices per reduction block
};

namespace detail {

// Fixed-shape pairwise tree over per-block accumulators; the reduction order
// depends only on the block layout, never on thread scheduling.
inline MCEstimate tree_merge(const std::vector<MCEstimate>& blocks, std::size_t lo,
                             std::size_t hi) {
  if (hi - lo == 1) return blocks[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return MCEstimate::merge(tree_merge(blocks, lo, mid), tree_merge(blocks, mid, hi));
}

template <class Body>
void run_blocks(std::uint64_t n_blocks, int threads, Body body) {
  if (threads <= 1) {
    for (std::uint64_t b = 0; b < n_blocks; ++b) body(b);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      body(b);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Farms `task` over path indices [0, n).  `task` must be a pure function of
/// (stream, index); it receives a dedicated substream per index.  Paths whose
/// sample is non-finite (or that throw NonFiniteState) are excluded and
/// counted; more than `abort_budget * n` aborts raises AbortBudgetExceeded.
/// The returned estimate is bit-identical across thread counts.
template <class Task>
MCEstimate farm(std::uint64_t n_paths, std::uint64_t seed, Task task, FarmOptions opt = {}) {
  const int threads = opt.threads > 0 ? opt.threads : default_thread_count();
  const std::uint64_t nb = (n_paths + opt.block - 1) / opt.block;
  std::vector<MCEstimate> blocks(nb);
  std::vector<std::uint64_t> aborts(nb, 0);

  detail::run_blocks(nb, threads, [&](std::uint64_t b) {
    MCEstimate acc;
    std::uint64_t aborted = 0;
    const std::uint64_t lo = b * opt.block;
    const std::uint64_t hi = std::min(n_paths, lo + opt.block);
    for (std::uint64_t i = lo; i < hi; ++i) {
      RandomStream rs(seed, i);
      double x;
      try {
        x = task(rs, i);
      } catch (const NonFiniteState&) {
        ++aborted;
        continue;
      }
      if (!std::isfinite(x)) {
        ++aborted;
        continue;
      }
      acc.add(x);
    }
    blocks[b] = acc;
    aborts[b] = aborted;
  });

  std::uint64_t total_aborted = 0;
  for (auto a : aborts) total_aborted += a;
  if (static_cast<double>(total_aborted) > opt.abort_budget * static_cast<double>(n_paths))
    throw AbortBudgetExceeded("aborted " + std::to_string(total_aborted) + " of " +
                              std::to_string(n_paths) + " paths");
  return nb ? detail::tree_merge(blocks, 0, nb) : MCEstimate{};
}

/// Vector-valued variant: `task(stream, index, out)` fills `k` components per
/// path; each component is accumulated independently with the same fixed-tree
/// reduction.  A path aborts as a whole if any component is non-finite.
template <class Task>
std::vector<MCEstimate> farm_multi(std::uint64_t n_paths, std::uint64_t seed, std::size_t k,
                                   Task task, FarmOptions opt = {}) {
  const int threads = opt.threads > 0 ? opt.threads : default_thread_count();
  const std::uint64_t nb = (n_paths + opt.block - 1) / opt.block;
  std::vector<std::vector<MCEstimate>> blocks(k, std::vector<MCEstimate>(nb));
  std::vector<std::uint64_t> aborts(nb, 0);

  detail::run_blocks(nb, threads, [&](std::uint64_t b) {
    std::vector<MCEstimate> acc(k);
    std::vector<double> out(k);
    std::uint64_t aborted = 0;
    const std::uint64_t lo = b * opt.block;
    const std::uint64_t hi = std::min(n_paths, lo + opt.block);
    for (std::uint64_t i = lo; i < hi; ++i) {
      RandomStream rs(seed, i);
      bool ok = true;
      try {
        task(rs, i, std::span<double>(out));
      } catch (const NonFiniteState&) {
        ok = false;
      }
      for (std::size_t c = 0; ok && c < k; ++c)
        if (!std::isfinite(out[c])) ok = false;
      if (!ok) {
        ++aborted;
        continue;
      }
      for (std::size_t c = 0; c < k; ++c) acc[c].add(out[c]);
    }
    for (std::size_t c = 0; c < k; ++c) blocks[c][b] = acc[c];
    aborts[b] = aborted;
  });

  std::uint64_t total_aborted = 0;
  for (auto a : aborts) total_aborted += a;
  if (static_cast<double>(total_aborted) > opt.abort_budget * static_cast<double>(n_paths))
    throw AbortBudgetExceeded("aborted " + std::to_string(total_aborted) + " of " +
                              std::to_string(n_paths) + " paths");

  std::vector<MCEstimate> out(k);
  for (std::size_t c = 0; c < k; ++c)
    out[c] = nb ? detail::tree_merge(blocks[c], 0, nb) : MCEstimate{};
  return out;
}

/// Common-random-numbers difference: both tasks see the same substream per
/// index (each its own copy), and statistics are taken on the per-path
/// difference A - B.
template <class TaskA, class TaskB>
MCEstimate paired_difference(TaskA a, TaskB b, std::uint64_t n_paths, std::uint64_t seed,
                             FarmOptions opt = {}) {
  return farm(
      n_paths, seed,
      [&](RandomStream& rs, std::uint64_t i) {
        RandomStream rs_b = rs;  // identical stream state for both legs
        const double va = a(rs, i);
        const double vb = b(rs_b, i);
        return va - vb;
      },
      opt);
}

}  // namespace jumpflow
