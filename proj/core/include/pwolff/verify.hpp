#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pwolff {

struct VerifyOptions {
  std::uint64_t seed = 1;
  int cases = 20;        // randomized measures per suite
  bool quick = false;    // smaller grids for smoke runs
  std::vector<std::string> suites;  // empty: run everything
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;  // failure reason or summary line
  std::vector<std::pair<std::string, double>> metrics;  // measured constants
};

// Names: autonomous, p2-exact, tau-scan, scaling, riesz, upper-bound,
// rearrangement, remark-bounds, km-zero, km-invariants.
std::vector<SuiteResult> run_verify_suites(const VerifyOptions& opt);

}  // namespace pwolff
