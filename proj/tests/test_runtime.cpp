#include <atomic>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "localsieve/runtime.hpp"

using namespace localsieve;

TEST_CASE("parallelFor visits every index exactly once") {
  std::vector<std::atomic<int>> hits(1000);
  parallelFor(1000, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) REQUIRE(h.load() == 1);
}

TEST_CASE("parallelFor fills are identical at every thread count") {
  auto fill = [](int threads) {
    setWorkerThreadOverride(threads);
    std::vector<double> out(257);
    parallelFor(out.size(), [&](std::size_t i) {
      Rng rng(subSeed(42, i));
      out[i] = rng.uniform() + rng.symmetric();
    });
    setWorkerThreadOverride(0);
    return out;
  };
  REQUIRE(fill(1) == fill(4));
  REQUIRE(fill(1) == fill(3));
}

TEST_CASE("worker thread override is respected") {
  setWorkerThreadOverride(2);
  REQUIRE(workerThreads() == 2);
  setWorkerThreadOverride(0);
  REQUIRE(workerThreads() >= 1);
}

TEST_CASE("rng ranges and determinism") {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    double u = a.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(b.uniform() == u);
  }
  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    double s = c.symmetric();
    REQUIRE(s >= -1.0);
    REQUIRE(s <= 1.0);
  }
  Rng d(7);
  for (int i = 0; i < 1000; ++i) {
    double v = d.logUniform(0.5, 24.0);
    REQUIRE(v >= 0.5);
    REQUIRE(v <= 24.0);
  }
}

TEST_CASE("subSeed decorrelates consecutive indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(subSeed(99, i));
  REQUIRE(seen.size() == 1000);
  REQUIRE(subSeed(99, 1) != subSeed(100, 1));
}
