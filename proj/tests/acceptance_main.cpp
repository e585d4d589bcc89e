// Acceptance gate: runs the twelve pinned criteria and prints one line per
// criterion. Exit status is nonzero when any criterion fails.
#include <chrono>
#include <cstdio>

#include "localsieve/experiment.hpp"

int main() {
  int failed = 0;
  for (int id = 1; id <= 12; ++id) {
    auto t0 = std::chrono::steady_clock::now();
    localsieve::CriterionResult res;
    try {
      res = localsieve::runCriterion(id);
    } catch (const std::exception& e) {
      std::printf("criterion %02d: FAIL (exception: %s)\n", id, e.what());
      std::fflush(stdout);
      ++failed;
      continue;
    }
    auto t1 = std::chrono::steady_clock::now();
    double secs = std::chrono::duration<double>(t1 - t0).count();
    std::printf("criterion %02d: %s (%.1fs) - %s\n", id,
                res.passed ? "PASS" : "FAIL", secs, res.detail.c_str());
    std::fflush(stdout);
    if (!res.passed) ++failed;
  }
  if (failed == 0) {
    std::printf("acceptance: 12/12 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", failed);
  return 1;
}
