#pragma once

#include <string>

#include "greybox/config.hpp"
#include "greybox/reports.hpp"

namespace greybox {

/// Simulate the model at (x0, p) over the dataset grid and sample the output
/// map; first-order sensitivities only.
Mat simulate_outputs(const DynamicsModel& model, const Vec& x0, const Vec& p,
                     const Dataset& dataset, const IntegratorConfig& cfg);

/// Overwrite each directly observed state with the first observation (exact
/// for output maps that read a single state, as both benchmarks do).
void pin_x0_to_first_observation(const DynamicsModel& model, const Dataset& dataset,
                                 DecisionVector& decision);

/// The restart study behind `sweep`: perturb the guess `count` times, solve
/// every copy with both drivers at each tolerance, tally the cells. The same
/// perturbed guesses are shared across all cells.
SweepOutcome run_sweep(const RunConfig& cfg);

int cmd_simulate(const RunConfig& cfg);
int cmd_check(const RunConfig& cfg);
int cmd_identify(const RunConfig& cfg);
int cmd_validate(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

/// Route a subcommand name to its handler; throws ConfigError for unknown
/// names. Returns the process exit code.
int dispatch_command(const std::string& command, const RunConfig& cfg);

}  // namespace greybox
