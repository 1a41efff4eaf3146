#pragma once

#include <string>

#include "greybox/config.hpp"
#include "greybox/optimizer.hpp"
#include "greybox/verify.hpp"

namespace greybox {

/// Shortest round-trip decimal form of v (std::to_chars), so reports are
/// byte-identical across runs with the same config and seed.
std::string format_number(double v);

/// Goodness-of-fit values rounded to 9 significant digits: the resolution at
/// which the sweep table reports and compares fits.
std::string format_gof(double v);

/// Context shared by every report: what ran, on which model, on what data.
struct ReportHeader {
  std::string command;
  std::string model;
  std::string solver; ///< empty for commands without a solver
  Index samples = 0;
  std::uint64_t clamp_events = 0;
};

/// Key/value report for identify and validate runs. `solved` distinguishes an
/// optimizer run (full history) from a plain simulation at the guess.
std::string render_run_report(const ReportHeader& header, const RunReport& run,
                              double gof_value, bool solved,
                              const OptimizerConfig& cfg);

std::string render_check_report(const ReportHeader& header, const CheckReport& report);

struct SweepCell {
  SolverKind solver = SolverKind::analytic;
  double tolerance = 0.0;
  int initiated = 0;
  int converged = 0;
  int aborted = 0;
  double best_gof = 0.0; ///< NaN when no run produced a usable trajectory
};

struct SweepOutcome {
  std::string model;
  int count = 0;
  double perturbation = 0.0;
  std::uint64_t seed = 0;
  std::vector<SweepCell> cells; ///< tolerance-major; analytic row before fd

  const SweepCell* find(SolverKind kind, double tolerance) const;
};

std::string render_sweep_report(const ReportHeader& header, const SweepOutcome& outcome);

/// Flat delimited trajectory: t, then per output channel y_sim, y_obs,
/// residual (observed minus simulated).
std::string render_trajectory_csv(const Dataset& dataset, const Mat& y_sim);

/// Write text to path, or to stdout when path is empty.
void write_output(const std::string& path, const std::string& text);

}  // namespace greybox
