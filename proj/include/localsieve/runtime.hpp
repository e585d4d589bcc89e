#pragma once

#include <cstdint>
#include <functional>

namespace localsieve {

// Number of worker threads: min(LOCALSIEVE_THREADS, hardware_concurrency),
// at least 1. LOCALSIEVE_THREADS unset or invalid means hardware concurrency.
int workerThreads();

// Temporarily overrides the thread count (0 restores env/hardware default).
// Used by determinism checks that rerun an experiment at several levels.
void setWorkerThreadOverride(int threads);

// Runs fn(i) for i in [0, n). Work is split into contiguous index ranges,
// one per worker. fn must write only to slots owned by index i so results
// are identical at every parallelism level.
void parallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

// Deterministic 64-bit generator (xoshiro-style splitmix chain). We avoid
// std::uniform_real_distribution because its output is implementation
// defined; this mapping is fixed by the code itself.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t nextU64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1): 53 mantissa bits.
  double uniform() { return double(nextU64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [-1, 1].
  double symmetric() { return 2.0 * uniform() - 1.0; }

  // Log-uniform over [lo, hi], lo > 0.
  double logUniform(double lo, double hi);

  int uniformInt(int n) { return int(nextU64() % std::uint64_t(n)); }

 private:
  std::uint64_t state_;
};

// Stream seed for a numbered subtask (trial, shard); keeps per-trial
// results independent of scheduling.
inline std::uint64_t subSeed(std::uint64_t seed, std::uint64_t index) {
  Rng r(seed ^ (0x51d26a1837ff5a3bull + index * 0x2545f4914f6cdd1dull));
  return r.nextU64();
}

}  // namespace localsieve
