#ifndef POLYMIX_MC_HPP
#define POLYMIX_MC_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "polymix/random.hpp"

namespace polymix {

struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  std::uint64_t discarded = 0;

  double discard_fraction() const {
    return n_samples ? static_cast<double>(discarded) / static_cast<double>(n_samples) : 0.0;
  }
};

inline MCEstimate exact_estimate(double v) { return {v, 0.0, 0, 0, 0}; }

inline double combined_stderr(double a, double b) { return std::sqrt(a * a + b * b); }

// Streaming mean/variance (Welford), mergeable (Chan et al.).
struct Accumulator {
  std::uint64_t n = 0;
  std::uint64_t discarded = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const Accumulator& o) {
    if (o.n == 0) return;
    discarded += o.discarded;
    if (n == 0) {
      n = o.n;
      mean = o.mean;
      m2 = o.m2;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double d = o.mean - mean;
    const double nt = na + nb;
    mean += d * nb / nt;
    m2 += o.m2 + d * d * na * nb / nt;
    n += o.n;
  }

  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }

  MCEstimate estimate(std::uint64_t seed) const {
    MCEstimate e;
    e.value = mean;
    e.std_error = n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    e.n_samples = n;
    e.seed = seed;
    e.discarded = discarded;
    return e;
  }
};

inline std::atomic<int>& default_jobs() {
  static std::atomic<int> jobs{1};
  return jobs;
}

inline constexpr std::uint64_t mc_block_size = 1u << 15;

// Runs `body` once per block b in [0, nblocks) with an engine seeded from
// (seed, stream, b). Blocks are distributed over worker threads but merged in
// block order, so the result does not depend on the number of jobs.
template <class Body>
void for_blocks(std::uint64_t nblocks, Body&& body) {
  const int jobs = std::max(1, default_jobs().load());
  const std::uint64_t threads = std::min<std::uint64_t>(static_cast<std::uint64_t>(jobs), nblocks);
  if (threads <= 1) {
    for (std::uint64_t b = 0; b < nblocks; ++b) body(b);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::uint64_t> next{0};
  for (std::uint64_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::uint64_t b = next++; b < nblocks; b = next++) body(b);
    });
  for (auto& th : pool) th.join();
}

// Sample mean of `sample(rng)` over n draws. A NaN sample marks a discarded
// draw: it contributes zero and is counted.
template <class Sample>
MCEstimate mc_mean(std::uint64_t n, std::uint64_t seed, std::uint64_t stream, Sample&& sample) {
  if (n == 0) throw DomainError("Monte Carlo estimate needs at least one sample");
  const std::uint64_t nblocks = (n + mc_block_size - 1) / mc_block_size;
  std::vector<Accumulator> acc(nblocks);
  for_blocks(nblocks, [&](std::uint64_t b) {
    Rng rng(derive_seed(seed, stream, b));
    const std::uint64_t count = std::min(mc_block_size, n - b * mc_block_size);
    Accumulator& a = acc[b];
    for (std::uint64_t k = 0; k < count; ++k) {
      double x = sample(rng);
      if (std::isnan(x)) {
        ++a.discarded;
        x = 0.0;
      }
      a.add(x);
    }
  });
  Accumulator total;
  for (const auto& a : acc) total.merge(a);
  return total.estimate(seed);
}

} // namespace polymix

#endif // POLYMIX_MC_HPP
