#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sgpr::harness {

struct OracleResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Independent checks of the library against dense refactorization, exact
/// k-DPP enumeration, dense eigendecompositions and scalar closed forms.
std::vector<OracleResult> run_oracle_suite(std::uint64_t seed = 1);

}  // namespace sgpr::harness
