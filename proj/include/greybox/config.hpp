#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "greybox/dataset.hpp"
#include "greybox/optimizer.hpp"
#include "greybox/verify.hpp"

namespace greybox {

/// Restart study: K perturbed copies of the same identification problem,
/// solved by both drivers at each tolerance setting.
struct SweepConfig {
  double perturbation = 0.2; ///< relative half-width applied to free coordinates
  int count = 100;           ///< restarts per (solver, tolerance) cell
  std::uint64_t seed = 1;    ///< seeds the shared perturbation draws
  std::vector<double> tolerances = {1e-14, 1e-12, 1e-10};

  void validate() const;
};

/// Settings for the conformance-check command.
struct CheckConfig {
  std::uint64_t seed = 1;
  CheckTolerances tolerances;

  void validate() const;
};

/// Observations read from a delimited recording on disk.
struct DatasetConfig {
  std::string path;
  ColumnFormat format;
};

/// Observations produced by simulating a known truth.
struct ScenarioConfig {
  Vec x0;
  Vec p;
  InputSignal input;
  std::vector<double> times;  ///< explicit grid; empty when samples/period used
  int samples = 0;            ///< uniform-grid alternative to `times`
  double sample_period = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int substep_factor = 4;
};

/// Starting point for the decision variables. Empty x0 means zeros; an empty
/// mask defaults to all-fixed for x0 and all-free for p.
struct GuessConfig {
  Vec x0;
  Vec p;
  std::vector<bool> free_x0;
  std::vector<bool> free_p;
};

enum class SolverKind { analytic, fd_baseline };

std::string to_string(SolverKind kind);

/// One fully described experiment, parsed from a JSON config file. Unknown
/// keys are rejected at every nesting level so typos fail loudly instead of
/// silently running defaults. All structural validation happens before any
/// numerical work.
struct RunConfig {
  std::string model;                     ///< registry name
  std::optional<DatasetConfig> dataset;  ///< exactly one of dataset/scenario
  std::optional<ScenarioConfig> scenario;
  std::optional<GuessConfig> guess;
  bool x0_from_observation = false; ///< pin observed state(s) to the first sample
  IntegratorConfig integrator;
  OptimizerConfig optimizer; ///< integrator member kept in sync at parse time
  SolverKind solver = SolverKind::analytic;
  SweepConfig sweep;
  CheckConfig check;
  std::string output; ///< report path; empty writes to stdout

  static RunConfig from_file(const std::string& path);
  static RunConfig from_json_text(const std::string& text,
                                  const std::string& origin = "<config>");

  /// Structural checks that need no model evaluation; throws ConfigError.
  void validate() const;

  std::shared_ptr<DynamicsModel> build_model() const;

  /// Load the recording or synthesize the scenario, then validate it against
  /// the model's output count.
  Dataset load(const std::shared_ptr<const DynamicsModel>& model) const;

  /// Assemble the decision vector from the guess block; throws ConfigError
  /// when the command needs a guess and none was given.
  DecisionVector decision(const ModelDims& dims) const;
};

}  // namespace greybox
