#pragma once

// Property suites run by `pfpinn check` and the acceptance binary.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pfpinn::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Every AD primitive and 100 random 3-layer networks (tape and batched
/// routes) against central finite differences with step 1e-5.
std::vector<CheckResult> check_ad(std::uint64_t seed = 1);

/// Gauss-Legendre exactness for n = 1..16, quarter-disc area, senp point count.
std::vector<CheckResult> check_quadrature();

/// Split identity over 100 random strains per dimension and rotation invariance.
std::vector<CheckResult> check_split(std::uint64_t seed = 1);

/// 10^3 random Dirichlet samples per preset under random network parameters.
std::vector<CheckResult> check_bc(std::uint64_t seed = 1);

/// Runs a suite by name ("ad", "quadrature", "split", "bc").
std::vector<CheckResult> run_suite(const std::string& name, std::uint64_t seed = 1);

/// One "PASS|FAIL name: detail" line per result; returns true when all pass.
bool report(std::ostream& os, const std::vector<CheckResult>& results);

}  // namespace pfpinn::checks
