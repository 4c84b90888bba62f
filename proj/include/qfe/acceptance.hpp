#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qfe {

struct AcceptanceOptions {
  /// Base seed; experiment runs use seeds base .. base + runs - 1.
  std::uint64_t seed = 1;
  /// Noisy experiment repetitions per criterion.
  int runs = 10;
  /// Multiplies every tolerance. Values below 1 tighten the suite.
  double tolerance_scale = 1.0;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  /// Measured values against their thresholds.
  std::string detail;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options = {});

/// One line per criterion followed by a totals line. Contains no timing,
/// so repeated runs with the same options are byte-identical.
std::string format_acceptance(const std::vector<CriterionResult>& results);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace qfe
