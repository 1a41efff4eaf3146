#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "greybox/dataset.hpp"
#include "greybox/model.hpp"

namespace greybox {

/// Tolerances for the conformance checks, grouped by derivative order.
struct CheckTolerances {
  double first_order = 1e-6;  ///< gradients, first partials, Φ/Θ
  double second_order = 1e-5; ///< Hessians, second partials, rank-3 tensors
  double symmetry = 1e-9;     ///< exact structural identities
};

/// Outcome of one named conformance check, aggregated over every evaluation
/// point. `passed` is exactly `max_error <= tolerance`; a non-empty `note`
/// explains failures that were recorded instead of thrown (for example an
/// integration abort at one of the points).
struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  int points = 0;
  std::string note;
};

/// Machine-readable conformance report: one entry per check, reproducible
/// bit-for-bit from (model, dataset, seed, tolerances).
struct CheckReport {
  std::uint64_t seed = 0;
  CheckTolerances tolerances;
  std::vector<CheckResult> checks;

  bool all_passed() const;
  int failures() const;
  const CheckResult* find(std::string_view name) const;
};

/// Runs every analytic-vs-FD comparison the toolkit relies on, at 10 seeded
/// evaluation points drawn from the interior of the model's declared
/// plausible region (staying clear of clamp boundaries):
///
///   - model partials, first and second order, against the FD oracle;
///   - transition tensors against re-integrated finite differences;
///   - cost gradient against central FD of the cost;
///   - cost Hessian against central FD of the analytic gradient;
///   - Hessian symmetry and the structural tensor symmetries
///     (Φ¹ and Θ¹ trailing pairs, χ² as the transpose of χ¹).
///
/// Badly scaled coordinates are handled by comparing in scaled units: every
/// difference is weighted by the coordinate scales max(|coordinate|,
/// half-width of the plausible range), so a six-decade parameter span cannot
/// hide errors in its small entries. Check failures are report entries, never
/// exceptions; only structurally invalid inputs (null model, malformed
/// dataset) throw.
CheckReport run_all_checks(std::shared_ptr<const DynamicsModel> model, const Dataset& dataset,
                           std::uint64_t seed, const CheckTolerances& tolerances = {});

/// Convenience overload: generates the scenario's synthetic dataset, then
/// checks the scenario's model over it.
CheckReport run_all_checks(const SyntheticScenario& scenario, std::uint64_t seed,
                           const CheckTolerances& tolerances = {});

}  // namespace greybox
