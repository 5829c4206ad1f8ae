#pragma once

#include <string>
#include <vector>

namespace langgrid::checks {

/// Outcome of one acceptance check. `detail` carries the measured numbers.
struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;

  /// "PASS  3 solvability     <detail> [1.23 s]"
  std::string line() const;
};

inline constexpr int kNumChecks = 11;

/// Short name of check `id` (1..kNumChecks). Throws PreconditionError otherwise.
std::string check_name(int id);

/// Runs one check. Exceptions inside a check become a failing result.
CheckResult run_check(int id);

std::vector<CheckResult> run_all();

}  // namespace langgrid::checks
