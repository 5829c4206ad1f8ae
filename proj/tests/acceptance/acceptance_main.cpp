// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fail.

#include <iostream>

#include "langgrid/checks.hpp"

int main() {
  int failed = 0;
  for (int id = 1; id <= langgrid::checks::kNumChecks; ++id) {
    const langgrid::checks::CheckResult r = langgrid::checks::run_check(id);
    std::cout << r.line() << std::endl;
    failed += r.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria fail") << std::endl;
  return failed == 0 ? 0 : 1;
}
