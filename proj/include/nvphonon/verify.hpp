#pragma once

// End-to-end oracle checks: frozen reference numbers, closed form versus
// integrator cross-checks, fit self-consistency and determinism.

#include <string>
#include <vector>

#include "nvphonon/units.hpp"

namespace nvp::verify {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Report {
  std::vector<Check> checks;
  bool passed() const;
  /// Names of the failing checks.
  std::vector<std::string> failures() const;
};

/// Runs every check. `constants` replaces the physical constants wherever a
/// check depends on them, so a perturbed set shows up as named failures.
Report run(const Constants& constants = kConstants);

}  // namespace nvp::verify
