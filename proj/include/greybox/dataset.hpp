#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "greybox/cost.hpp"
#include "greybox/model.hpp"
#include "greybox/sensitivity.hpp"

namespace greybox {

/// How to read a delimited-text recording (comma or whitespace separated).
/// Column and row indices are 1-based; rows are counted after the skipped
/// header lines, matching the way benchmark archives document their windows.
struct ColumnFormat {
  int time_col = 0;           ///< 0: no time column, build a uniform grid
  int input_col = 1;
  int output_col = 2;
  int skip_header = 0;        ///< lines discarded before data starts
  double sample_period = 0.0; ///< required (> 0) when time_col == 0
  std::int64_t first_row = 1; ///< 1-based, inclusive
  std::int64_t last_row = 0;  ///< 0: through the final row

  void validate() const;
};

/// Parse a delimited text file into a Dataset. With no time column the grid
/// is t_h = h * sample_period starting at 0 for the selected row window, so
/// sliced windows always begin at t = 0. Malformed rows report their actual
/// line number in the file.
Dataset load_dataset(const std::string& path, const ColumnFormat& fmt);

/// Recipe for a self-contained synthetic experiment.
struct SyntheticScenario {
  std::shared_ptr<const DynamicsModel> model;
  Vec x0_true;
  Vec p_true;
  InputSignal input;
  std::vector<double> times;
  double noise = 0.0;          ///< std deviation of seeded additive noise
  std::uint64_t seed = 0;
  int substep_factor = 4;      ///< generator substeps = factor * base substeps
};

/// Integrate the scenario's model at its truth and sample the output map,
/// optionally adding seeded observation noise. Same scenario, same bytes.
Dataset generate_synthetic(const SyntheticScenario& scenario,
                           const IntegratorConfig& base = {});

/// Benchmark model registry: "silverbox" or "twotank".
std::shared_ptr<DynamicsModel> make_model(const std::string& name, double clamp_epsilon = 1e-12);
std::vector<std::string> model_names();

}  // namespace greybox
