#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace thinbeam {

struct CriterionResult {
  int id = 0;
  std::string name;
  /// Numerical check passed.
  bool check = false;
  double seconds = 0.0;
  double budget = 0.0;
  std::string detail;

  bool passed() const { return check && seconds < budget; }
};

/// Runs the acceptance criteria (all when `only` is empty). Every random draw
/// comes from one mt19937_64 seeded with `seed`.
std::vector<CriterionResult> run_acceptance(std::uint64_t seed, const std::vector<int>& only = {});

/// "PASS  3 name: detail (1.23 s, budget 30 s)".
std::string format_result(const CriterionResult& r);

}  // namespace thinbeam
