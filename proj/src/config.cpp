#include "greybox/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include "json.hpp"

namespace greybox {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config: " + msg); }

void expect_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) bad(ctx + " must be a JSON object");
}

void reject_unknown(const json& j, const std::string& ctx,
                    std::initializer_list<std::string_view> allowed) {
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      bad("unknown key '" + item.key() + "' in " + ctx);
    }
  }
}

double require_number(const json& v, const std::string& where) {
  if (!v.is_number()) bad(where + " must be a number");
  return v.get<double>();
}

double num_or(const json& j, const char* key, const std::string& ctx, double fallback) {
  if (!j.contains(key)) return fallback;
  return require_number(j.at(key), ctx + "." + key);
}

int int_or(const json& j, const char* key, const std::string& ctx, int fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) bad(ctx + "." + key + " must be an integer");
  return v.get<int>();
}

std::int64_t int64_or(const json& j, const char* key, const std::string& ctx,
                      std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) bad(ctx + "." + key + " must be an integer");
  return v.get<std::int64_t>();
}

std::uint64_t seed_or(const json& j, const char* key, const std::string& ctx,
                      std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 &&
                                 !v.is_number_unsigned())) {
    bad(ctx + "." + key + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool bool_or(const json& j, const char* key, const std::string& ctx, bool fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean()) bad(ctx + "." + key + " must be a boolean");
  return v.get<bool>();
}

std::string string_or(const json& j, const char* key, const std::string& ctx,
                      const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_string()) bad(ctx + "." + key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) bad(where + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& e : v) out.push_back(require_number(e, where + " entry"));
  return out;
}

Vec vec_or_empty(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) return Vec();
  const std::vector<double> values = number_list(j.at(key), ctx + "." + key);
  return Eigen::Map<const Vec>(values.data(), static_cast<Index>(values.size()));
}

std::vector<bool> mask_or_empty(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) return {};
  const json& v = j.at(key);
  if (!v.is_array()) bad(ctx + "." + key + " must be an array of booleans");
  std::vector<bool> out;
  out.reserve(v.size());
  for (const json& e : v) {
    if (!e.is_boolean()) bad(ctx + "." + key + " entries must be booleans");
    out.push_back(e.get<bool>());
  }
  return out;
}

DatasetConfig parse_dataset(const json& j) {
  const std::string ctx = "dataset";
  expect_object(j, ctx);
  reject_unknown(j, ctx,
                 {"path", "time_col", "input_col", "output_col", "skip_header",
                  "sample_period", "first_row", "last_row"});
  DatasetConfig out;
  out.path = string_or(j, "path", ctx, "");
  if (out.path.empty()) bad("dataset.path is required");
  out.format.time_col = int_or(j, "time_col", ctx, out.format.time_col);
  out.format.input_col = int_or(j, "input_col", ctx, out.format.input_col);
  out.format.output_col = int_or(j, "output_col", ctx, out.format.output_col);
  out.format.skip_header = int_or(j, "skip_header", ctx, out.format.skip_header);
  out.format.sample_period = num_or(j, "sample_period", ctx, out.format.sample_period);
  out.format.first_row = int64_or(j, "first_row", ctx, out.format.first_row);
  out.format.last_row = int64_or(j, "last_row", ctx, out.format.last_row);
  return out;
}

InputSignal parse_input(const json& j) {
  const std::string ctx = "scenario.input";
  expect_object(j, ctx);
  reject_unknown(j, ctx, {"times", "values", "constant", "start"});
  if (j.contains("constant")) {
    if (j.contains("times") || j.contains("values")) {
      bad(ctx + ": give either 'constant' or 'times'+'values', not both");
    }
    const double value = require_number(j.at("constant"), ctx + ".constant");
    const double start = num_or(j, "start", ctx, 0.0);
    return InputSignal::constant(value, start);
  }
  if (!j.contains("times") || !j.contains("values")) {
    bad(ctx + " needs 'constant' or both 'times' and 'values'");
  }
  if (j.contains("start")) bad(ctx + ".start only applies to 'constant'");
  return InputSignal(number_list(j.at("times"), ctx + ".times"),
                     number_list(j.at("values"), ctx + ".values"));
}

ScenarioConfig parse_scenario(const json& j) {
  const std::string ctx = "scenario";
  expect_object(j, ctx);
  reject_unknown(j, ctx,
                 {"x0", "p", "input", "times", "samples", "sample_period", "noise",
                  "seed", "substep_factor"});
  ScenarioConfig out;
  out.x0 = vec_or_empty(j, "x0", ctx);
  out.p = vec_or_empty(j, "p", ctx);
  if (!j.contains("input")) bad(ctx + ".input is required");
  out.input = parse_input(j.at("input"));
  if (j.contains("times")) {
    if (j.contains("samples") || j.contains("sample_period")) {
      bad(ctx + ": give either 'times' or 'samples'+'sample_period', not both");
    }
    out.times = number_list(j.at("times"), ctx + ".times");
  } else {
    out.samples = int_or(j, "samples", ctx, 0);
    out.sample_period = num_or(j, "sample_period", ctx, 0.0);
  }
  out.noise = num_or(j, "noise", ctx, 0.0);
  out.seed = seed_or(j, "seed", ctx, 0);
  out.substep_factor = int_or(j, "substep_factor", ctx, 4);
  return out;
}

GuessConfig parse_guess(const json& j) {
  const std::string ctx = "guess";
  expect_object(j, ctx);
  reject_unknown(j, ctx, {"x0", "p", "free_x0", "free_p"});
  GuessConfig out;
  out.x0 = vec_or_empty(j, "x0", ctx);
  out.p = vec_or_empty(j, "p", ctx);
  out.free_x0 = mask_or_empty(j, "free_x0", ctx);
  out.free_p = mask_or_empty(j, "free_p", ctx);
  return out;
}

IntegratorConfig parse_integrator(const json& j) {
  const std::string ctx = "integrator";
  expect_object(j, ctx);
  reject_unknown(j, ctx, {"substeps", "clamp_epsilon"});
  IntegratorConfig out;
  out.substeps = int_or(j, "substeps", ctx, out.substeps);
  out.clamp_epsilon = num_or(j, "clamp_epsilon", ctx, out.clamp_epsilon);
  return out;
}

OptimizerConfig parse_optimizer(const json& j) {
  const std::string ctx = "optimizer";
  expect_object(j, ctx);
  reject_unknown(j, ctx,
                 {"rel_tol", "abs_tol", "grad_tol", "max_iter", "armijo_c",
                  "backtrack_factor", "min_step", "damping_init", "fd_gradient_step",
                  "fd_hessian_step"});
  OptimizerConfig out;
  out.rel_tol = num_or(j, "rel_tol", ctx, out.rel_tol);
  out.abs_tol = num_or(j, "abs_tol", ctx, out.abs_tol);
  out.grad_tol = num_or(j, "grad_tol", ctx, out.grad_tol);
  out.max_iter = int_or(j, "max_iter", ctx, out.max_iter);
  out.armijo_c = num_or(j, "armijo_c", ctx, out.armijo_c);
  out.backtrack_factor = num_or(j, "backtrack_factor", ctx, out.backtrack_factor);
  out.min_step = num_or(j, "min_step", ctx, out.min_step);
  out.damping_init = num_or(j, "damping_init", ctx, out.damping_init);
  out.fd_gradient_step = num_or(j, "fd_gradient_step", ctx, out.fd_gradient_step);
  out.fd_hessian_step = num_or(j, "fd_hessian_step", ctx, out.fd_hessian_step);
  return out;
}

SolverKind parse_solver(const std::string& name) {
  if (name == "analytic") return SolverKind::analytic;
  if (name == "fd") return SolverKind::fd_baseline;
  bad("solver must be 'analytic' or 'fd', got '" + name + "'");
}

SweepConfig parse_sweep(const json& j) {
  const std::string ctx = "sweep";
  expect_object(j, ctx);
  reject_unknown(j, ctx, {"perturbation", "count", "seed", "tolerances"});
  SweepConfig out;
  out.perturbation = num_or(j, "perturbation", ctx, out.perturbation);
  out.count = int_or(j, "count", ctx, out.count);
  out.seed = seed_or(j, "seed", ctx, out.seed);
  if (j.contains("tolerances")) {
    out.tolerances = number_list(j.at("tolerances"), ctx + ".tolerances");
  }
  return out;
}

CheckConfig parse_check(const json& j) {
  const std::string ctx = "check";
  expect_object(j, ctx);
  reject_unknown(j, ctx, {"seed", "first_order_tol", "second_order_tol", "symmetry_tol"});
  CheckConfig out;
  out.seed = seed_or(j, "seed", ctx, out.seed);
  out.tolerances.first_order = num_or(j, "first_order_tol", ctx, out.tolerances.first_order);
  out.tolerances.second_order = num_or(j, "second_order_tol", ctx, out.tolerances.second_order);
  out.tolerances.symmetry = num_or(j, "symmetry_tol", ctx, out.tolerances.symmetry);
  return out;
}

}  // namespace

std::string to_string(SolverKind kind) {
  return kind == SolverKind::analytic ? "analytic" : "fd";
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str(), path);
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    bad(origin + ": " + e.what());
  }
  expect_object(j, "top level");
  reject_unknown(j, "top level",
                 {"model", "dataset", "scenario", "guess", "x0_from_observation",
                  "integrator", "optimizer", "solver", "sweep", "check", "output"});

  RunConfig cfg;
  cfg.model = string_or(j, "model", "top level", "");
  if (cfg.model.empty()) bad("'model' is required");
  if (j.contains("dataset")) cfg.dataset = parse_dataset(j.at("dataset"));
  if (j.contains("scenario")) cfg.scenario = parse_scenario(j.at("scenario"));
  if (j.contains("guess")) cfg.guess = parse_guess(j.at("guess"));
  cfg.x0_from_observation = bool_or(j, "x0_from_observation", "top level", false);
  if (j.contains("integrator")) cfg.integrator = parse_integrator(j.at("integrator"));
  if (j.contains("optimizer")) cfg.optimizer = parse_optimizer(j.at("optimizer"));
  cfg.solver = parse_solver(string_or(j, "solver", "top level", "analytic"));
  if (j.contains("sweep")) cfg.sweep = parse_sweep(j.at("sweep"));
  if (j.contains("check")) cfg.check = parse_check(j.at("check"));
  cfg.output = string_or(j, "output", "top level", "");
  cfg.optimizer.integrator = cfg.integrator;
  return cfg;
}

void SweepConfig::validate() const {
  if (count < 1) throw ConfigError("config: sweep.count must be at least 1");
  if (!(perturbation >= 0.0) || !std::isfinite(perturbation)) {
    throw ConfigError("config: sweep.perturbation must be finite and non-negative");
  }
  if (tolerances.empty()) throw ConfigError("config: sweep.tolerances must not be empty");
  for (double tol : tolerances) {
    if (!(tol > 0.0) || !std::isfinite(tol)) {
      throw ConfigError("config: sweep.tolerances entries must be positive");
    }
  }
}

void CheckConfig::validate() const {
  if (!(tolerances.first_order > 0.0) || !(tolerances.second_order > 0.0) ||
      !(tolerances.symmetry > 0.0)) {
    throw ConfigError("config: check tolerances must be positive");
  }
}

void RunConfig::validate() const {
  const std::vector<std::string> names = model_names();
  if (std::find(names.begin(), names.end(), model) == names.end()) {
    std::string known;
    for (const std::string& n : names) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("config: unknown model '" + model + "' (known: " + known + ")");
  }
  if (dataset.has_value() == scenario.has_value()) {
    throw ConfigError("config: give exactly one of 'dataset' or 'scenario'");
  }
  if (dataset) dataset->format.validate();
  if (scenario) {
    if (scenario->x0.size() == 0) throw ConfigError("config: scenario.x0 is required");
    if (scenario->p.size() == 0) throw ConfigError("config: scenario.p is required");
    if (scenario->input.empty()) throw ConfigError("config: scenario.input is required");
    if (scenario->times.empty()) {
      if (scenario->samples < 2) {
        throw ConfigError("config: scenario needs 'times' or 'samples' >= 2");
      }
      if (!(scenario->sample_period > 0.0)) {
        throw ConfigError("config: scenario.sample_period must be positive");
      }
    }
    if (!(scenario->noise >= 0.0)) throw ConfigError("config: scenario.noise must be >= 0");
    if (scenario->substep_factor < 1) {
      throw ConfigError("config: scenario.substep_factor must be at least 1");
    }
  }
  if (integrator.substeps < 1) throw ConfigError("config: integrator.substeps must be >= 1");
  if (!(integrator.clamp_epsilon > 0.0)) {
    throw ConfigError("config: integrator.clamp_epsilon must be positive");
  }
  optimizer.validate();
  sweep.validate();
  check.validate();
}

std::shared_ptr<DynamicsModel> RunConfig::build_model() const {
  return make_model(model, integrator.clamp_epsilon);
}

Dataset RunConfig::load(const std::shared_ptr<const DynamicsModel>& model_ptr) const {
  if (!model_ptr) throw ConfigError("config: load needs a model");
  Dataset ds;
  if (dataset) {
    ds = load_dataset(dataset->path, dataset->format);
  } else if (scenario) {
    SyntheticScenario sc;
    sc.model = model_ptr;
    sc.x0_true = scenario->x0;
    sc.p_true = scenario->p;
    sc.input = scenario->input;
    if (!scenario->times.empty()) {
      sc.times = scenario->times;
    } else {
      sc.times.reserve(static_cast<std::size_t>(scenario->samples));
      for (int h = 0; h < scenario->samples; ++h) sc.times.push_back(h * scenario->sample_period);
    }
    sc.noise = scenario->noise;
    sc.seed = scenario->seed;
    sc.substep_factor = scenario->substep_factor;
    ds = generate_synthetic(sc, integrator);
  } else {
    throw ConfigError("config: no dataset or scenario given");
  }
  ds.validate(model_ptr->dims().n_outputs);
  return ds;
}

DecisionVector RunConfig::decision(const ModelDims& dims) const {
  if (!guess) throw ConfigError("config: this command needs a 'guess' block");
  DecisionVector dv;
  dv.x0 = guess->x0.size() > 0 ? guess->x0 : Vec(Vec::Zero(dims.n_states));
  if (guess->p.size() == 0) throw ConfigError("config: guess.p is required");
  dv.p = guess->p;
  dv.free_x0 = guess->free_x0.empty() ? std::vector<bool>(static_cast<std::size_t>(dims.n_states), false)
                                      : guess->free_x0;
  dv.free_p = guess->free_p.empty() ? std::vector<bool>(static_cast<std::size_t>(dims.n_params), true)
                                    : guess->free_p;
  dv.validate(dims);
  return dv;
}

}  // namespace greybox
