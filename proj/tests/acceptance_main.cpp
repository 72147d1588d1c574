#include <iostream>

#include "enkf/verify.hpp"

int main() {
  const auto results = enkf::verify::run_acceptance({}, std::cout);
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
