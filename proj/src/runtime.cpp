#include "localsieve/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

namespace localsieve {

namespace {
std::atomic<int> gThreadOverride{0};
}

void setWorkerThreadOverride(int threads) { gThreadOverride = threads; }

int workerThreads() {
  int override = gThreadOverride.load();
  if (override > 0) return override;
  unsigned hw = std::thread::hardware_concurrency();
  int n = hw == 0 ? 1 : int(hw);
  if (const char* env = std::getenv("LOCALSIEVE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) n = std::min(n, int(std::min(v, 256l)));
  }
  return std::max(1, n);
}

void parallelFor(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t workers = std::min<std::size_t>(std::size_t(workerThreads()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

double Rng::logUniform(double lo, double hi) {
  double u = uniform();
  return lo * std::exp(u * std::log(hi / lo));
}

}  // namespace localsieve
