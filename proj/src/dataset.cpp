#include "greybox/dataset.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

#include "greybox/models/silverbox.hpp"
#include "greybox/models/twotank.hpp"

namespace greybox {

void ColumnFormat::validate() const {
  if (time_col < 0 || input_col < 1 || output_col < 1) {
    throw ConfigError("ColumnFormat: column indices are 1-based (0 only for a missing time "
                      "column)");
  }
  if (time_col == 0 && !(sample_period > 0.0)) {
    throw ConfigError("ColumnFormat: sample_period must be positive when there is no time "
                      "column");
  }
  if (skip_header < 0) throw ConfigError("ColumnFormat: negative header skip");
  if (first_row < 1) throw ConfigError("ColumnFormat: first_row is 1-based");
  if (last_row != 0 && last_row < first_row) {
    throw ConfigError("ColumnFormat: last_row precedes first_row");
  }
}

namespace {

/// Split a delimited line on commas and/or whitespace.
std::vector<double> parse_row(const std::string& line, std::int64_t line_number) {
  std::string normalized = line;
  for (char& ch : normalized) {
    if (ch == ',' || ch == ';' || ch == '\t' || ch == '\r') ch = ' ';
  }
  std::vector<double> fields;
  std::istringstream cells(normalized);
  std::string token;
  while (cells >> token) {
    const char* begin = token.data();
    const char* end = token.data() + token.size();
    if (begin != end && *begin == '+') ++begin; // from_chars rejects a leading plus
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || begin == end) {
      throw DataError("line " + std::to_string(line_number) + ": cannot parse field '" + token +
                      "' as a number");
    }
    fields.push_back(value);
  }
  return fields;
}

bool blank(const std::string& line) {
  for (char ch : line) {
    if (!std::isspace(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

}  // namespace

Dataset load_dataset(const std::string& path, const ColumnFormat& fmt) {
  fmt.validate();
  std::ifstream file(path);
  if (!file) throw DataError("cannot open dataset file: " + path);

  std::string line;
  std::int64_t line_number = 0;
  for (int h = 0; h < fmt.skip_header; ++h) {
    if (!std::getline(file, line)) {
      throw DataError(path + ": file ends inside the " + std::to_string(fmt.skip_header) +
                      "-line header");
    }
    ++line_number;
  }

  const int max_col = std::max({fmt.time_col, fmt.input_col, fmt.output_col});
  std::vector<double> times, inputs, outputs;
  std::int64_t data_row = 0; // 1-based over non-blank data rows
  while (std::getline(file, line)) {
    ++line_number;
    if (blank(line)) continue;
    ++data_row;
    if (data_row < fmt.first_row) continue;
    if (fmt.last_row != 0 && data_row > fmt.last_row) break;

    const std::vector<double> fields = parse_row(line, line_number);
    if (static_cast<int>(fields.size()) < max_col) {
      throw DataError("line " + std::to_string(line_number) + ": " +
                      std::to_string(fields.size()) + " fields, need at least " +
                      std::to_string(max_col));
    }
    if (fmt.time_col > 0) times.push_back(fields[static_cast<std::size_t>(fmt.time_col - 1)]);
    inputs.push_back(fields[static_cast<std::size_t>(fmt.input_col - 1)]);
    outputs.push_back(fields[static_cast<std::size_t>(fmt.output_col - 1)]);
  }
  if (outputs.empty()) {
    throw DataError(path + ": no data rows in the requested window");
  }
  if (fmt.last_row != 0 && data_row < fmt.last_row) {
    throw DataError(path + ": file has only " + std::to_string(data_row) +
                    " data rows, window ends at " + std::to_string(fmt.last_row));
  }

  Dataset ds;
  const std::size_t count = outputs.size();
  if (fmt.time_col > 0) {
    ds.times = std::move(times);
    for (std::size_t h = 1; h < ds.times.size(); ++h) {
      if (!(ds.times[h] > ds.times[h - 1])) {
        throw DataError(path + ": time column is not strictly increasing at sample " +
                        std::to_string(h));
      }
    }
    if (count > 1) ds.sample_period = (ds.times.back() - ds.times.front()) / (count - 1);
  } else {
    ds.times.resize(count);
    for (std::size_t h = 0; h < count; ++h) {
      ds.times[h] = static_cast<double>(h) * fmt.sample_period;
    }
    ds.sample_period = fmt.sample_period;
  }

  ds.observations = Mat(static_cast<Index>(count), 1);
  for (std::size_t h = 0; h < count; ++h) {
    ds.observations(static_cast<Index>(h), 0) = outputs[h];
  }
  ds.input = InputSignal(ds.times, std::move(inputs));
  ds.validate(1);
  return ds;
}

Dataset generate_synthetic(const SyntheticScenario& scenario, const IntegratorConfig& base) {
  if (scenario.model == nullptr) throw ConfigError("SyntheticScenario: no model");
  if (scenario.substep_factor < 1) {
    throw ConfigError("SyntheticScenario: substep_factor must be at least 1");
  }
  const DynamicsModel& model = *scenario.model;
  IntegratorConfig cfg = base;
  cfg.substeps *= scenario.substep_factor;

  const Trajectory traj = integrate(model, scenario.x0_true, scenario.p_true, scenario.input,
                                    scenario.times, SensitivityOrder::FirstOrder, cfg);

  Dataset ds;
  ds.times = scenario.times;
  ds.input = scenario.input;
  if (ds.times.size() > 1) {
    ds.sample_period = (ds.times.back() - ds.times.front()) /
                       (static_cast<double>(ds.times.size()) - 1.0);
  }
  const Index s_out = model.dims().n_outputs;
  ds.observations = Mat(static_cast<Index>(ds.times.size()), s_out);
  Rng rng(scenario.seed);
  for (std::size_t h = 0; h < ds.times.size(); ++h) {
    const double t = ds.times[h];
    Vec y = model.c(t, traj.states[h].x, scenario.p_true, scenario.input.value_at(t));
    if (scenario.noise > 0.0) {
      for (Index g = 0; g < s_out; ++g) y[g] += rng.normal(0.0, scenario.noise);
    }
    ds.observations.row(static_cast<Index>(h)) = y.transpose();
  }
  ds.validate(s_out);
  return ds;
}

std::shared_ptr<DynamicsModel> make_model(const std::string& name, double clamp_epsilon) {
  if (name == "silverbox") return std::make_shared<SilverboxModel>();
  if (name == "twotank") return std::make_shared<TwoTankModel>(clamp_epsilon);
  throw ConfigError("unknown model '" + name + "' (available: silverbox, twotank)");
}

std::vector<std::string> model_names() { return {"silverbox", "twotank"}; }

}  // namespace greybox
