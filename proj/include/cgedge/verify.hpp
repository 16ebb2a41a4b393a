#pragma once

#include <cstdint>
#include <iosfwd>

namespace cgedge {

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  bool corrupt_hermite = false;  // test fixture: perturb the Hermite table
};

struct VerifyResult {
  int passed = 0;
  int failed = 0;
  bool ok() const { return failed == 0; }
};

// Invariant suite: Hermite identities, combinatorial counts, dual-path
// equivalences, mass checks. One line per check; deterministic given seed.
VerifyResult run_verify(const VerifyOptions& opts, std::ostream& log);

}  // namespace cgedge
