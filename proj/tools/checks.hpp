#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nlab::cli {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed;
  std::string detail;
};

/// Invariant suites behind `nlab check`. `suite` is one of all, model, band,
/// phases, dynamics.
std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed);

bool known_suite(const std::string& suite);

}  // namespace nlab::cli
