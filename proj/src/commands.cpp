#include "greybox/commands.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>
#include <vector>

#include "greybox/sensitivity.hpp"

namespace greybox {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

/// "report.txt" -> "report_trajectory.csv"; path without extension gets the
/// suffix appended.
std::string trajectory_path(const std::string& report_path) {
  const std::size_t slash = report_path.find_last_of("/\\");
  const std::size_t dot = report_path.find_last_of('.');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  const std::string stem = has_ext ? report_path.substr(0, dot) : report_path;
  return stem + "_trajectory.csv";
}

ReportHeader make_header(const std::string& command, const RunConfig& cfg,
                         const DynamicsModel& model, const Dataset& dataset,
                         bool with_solver) {
  ReportHeader header;
  header.command = command;
  header.model = cfg.model;
  if (with_solver) header.solver = to_string(cfg.solver);
  header.samples = dataset.samples();
  header.clamp_events = model.clamp_events();
  return header;
}

double guarded_gof(const DynamicsModel& model, const Vec& x0, const Vec& p,
                   const Dataset& dataset, const IntegratorConfig& icfg,
                   Mat* y_sim_out = nullptr) {
  try {
    const Mat y_sim = simulate_outputs(model, x0, p, dataset, icfg);
    if (y_sim_out) *y_sim_out = y_sim;
    return gof(dataset.observations, y_sim);
  } catch (const Error&) {
    return kNan;
  }
}

bool is_converged(SolveStatus status) {
  return status == SolveStatus::converged_abs || status == SolveStatus::converged_rel ||
         status == SolveStatus::converged_grad;
}

struct SweepRun {
  bool initiated = false;
  bool converged = false;
  bool aborted = false;
  double gof_value = kNan;
};

SweepRun one_sweep_run(const DynamicsModel& model, const Dataset& dataset,
                       const DecisionVector& guess, const OptimizerConfig& ocfg,
                       SolverKind solver) {
  SweepRun out;
  try {
    const RunReport report = solver == SolverKind::analytic
                                 ? newton_solve(model, dataset, guess, ocfg)
                                 : fd_baseline_solve(model, dataset, guess, ocfg);
    out.initiated = report.iterations >= 1;
    out.converged = is_converged(report.status);
    out.aborted = report.status == SolveStatus::aborted;
    out.gof_value =
        guarded_gof(model, report.estimate.x0, report.estimate.p, dataset, ocfg.integrator);
  } catch (const Error&) {
    out.aborted = true;
  }
  return out;
}

void write_report_and_trajectory(const RunConfig& cfg, const std::string& report_text,
                                 const Dataset& dataset, const Mat* y_sim) {
  write_output(cfg.output, report_text);
  if (!cfg.output.empty() && y_sim && y_sim->size() > 0) {
    write_output(trajectory_path(cfg.output), render_trajectory_csv(dataset, *y_sim));
  }
}

}  // namespace

Mat simulate_outputs(const DynamicsModel& model, const Vec& x0, const Vec& p,
                     const Dataset& dataset, const IntegratorConfig& cfg) {
  const Trajectory traj = integrate(model, x0, p, dataset.input, dataset.times,
                                    SensitivityOrder::FirstOrder, cfg);
  const ModelDims dims = model.dims();
  Mat y_sim(dataset.samples(), dims.n_outputs);
  for (Index k = 0; k < dataset.samples(); ++k) {
    const AugmentedState& state = traj.states[static_cast<std::size_t>(k)];
    const double u = dataset.input.value_at(state.t);
    y_sim.row(k) = model.c(state.t, state.x, p, u).transpose();
  }
  return y_sim;
}

void pin_x0_to_first_observation(const DynamicsModel& model, const Dataset& dataset,
                                 DecisionVector& decision) {
  const double t0 = dataset.times.front();
  const double u0 = dataset.input.value_at(t0);
  const Mat cx = model.c_x(t0, decision.x0, decision.p, u0);
  for (Index s = 0; s < cx.rows(); ++s) {
    Index hit = -1;
    for (Index j = 0; j < cx.cols(); ++j) {
      if (cx(s, j) != 0.0) {
        if (hit >= 0) {
          throw ConfigError("x0_from_observation: output " + std::to_string(s) +
                            " reads more than one state");
        }
        hit = j;
      }
    }
    if (hit < 0) {
      throw ConfigError("x0_from_observation: output " + std::to_string(s) +
                        " reads no state at the first sample");
    }
    const Vec y = model.c(t0, decision.x0, decision.p, u0);
    decision.x0[hit] += (dataset.observations(0, s) - y[s]) / cx(s, hit);
  }
}

SweepOutcome run_sweep(const RunConfig& cfg) {
  const std::shared_ptr<DynamicsModel> model = cfg.build_model();
  const Dataset dataset = cfg.load(model);
  DecisionVector base = cfg.decision(model->dims());
  if (cfg.x0_from_observation) pin_x0_to_first_observation(*model, dataset, base);

  const SweepConfig& sw = cfg.sweep;
  Rng rng(sw.seed);
  std::vector<DecisionVector> guesses;
  guesses.reserve(static_cast<std::size_t>(sw.count));
  for (int k = 0; k < sw.count; ++k) {
    DecisionVector dv = base;
    for (Index i = 0; i < dv.x0.size(); ++i) {
      const double draw = rng.uniform(-1.0, 1.0);
      if (dv.free_x0[static_cast<std::size_t>(i)]) dv.x0[i] *= 1.0 + sw.perturbation * draw;
    }
    for (Index i = 0; i < dv.p.size(); ++i) {
      const double draw = rng.uniform(-1.0, 1.0);
      if (dv.free_p[static_cast<std::size_t>(i)]) dv.p[i] *= 1.0 + sw.perturbation * draw;
    }
    guesses.push_back(std::move(dv));
  }

  SweepOutcome outcome;
  outcome.model = cfg.model;
  outcome.count = sw.count;
  outcome.perturbation = sw.perturbation;
  outcome.seed = sw.seed;

  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  for (double tolerance : sw.tolerances) {
    for (SolverKind solver : {SolverKind::analytic, SolverKind::fd_baseline}) {
      OptimizerConfig ocfg = cfg.optimizer;
      ocfg.rel_tol = tolerance;
      ocfg.abs_tol = tolerance;
      ocfg.grad_tol = tolerance;

      std::vector<SweepRun> runs(guesses.size());
      std::size_t next = 0;
      while (next < guesses.size()) {
        const std::size_t end = std::min(guesses.size(), next + workers);
        std::vector<std::future<SweepRun>> batch;
        batch.reserve(end - next);
        for (std::size_t k = next; k < end; ++k) {
          batch.push_back(std::async(std::launch::async, [&, k] {
            return one_sweep_run(*model, dataset, guesses[k], ocfg, solver);
          }));
        }
        for (std::size_t k = next; k < end; ++k) runs[k] = batch[k - next].get();
        next = end;
      }

      SweepCell cell;
      cell.solver = solver;
      cell.tolerance = tolerance;
      cell.best_gof = kNan;
      for (const SweepRun& run : runs) {
        cell.initiated += run.initiated ? 1 : 0;
        cell.converged += run.converged ? 1 : 0;
        cell.aborted += run.aborted ? 1 : 0;
        if (std::isfinite(run.gof_value) &&
            (!std::isfinite(cell.best_gof) || run.gof_value > cell.best_gof)) {
          cell.best_gof = run.gof_value;
        }
      }
      outcome.cells.push_back(cell);
    }
  }
  return outcome;
}

int cmd_simulate(const RunConfig& cfg) {
  const std::shared_ptr<DynamicsModel> model = cfg.build_model();
  const Dataset dataset = cfg.load(model);
  DecisionVector dv = cfg.decision(model->dims());
  if (cfg.x0_from_observation) pin_x0_to_first_observation(*model, dataset, dv);
  const Mat y_sim = simulate_outputs(*model, dv.x0, dv.p, dataset, cfg.integrator);
  write_output(cfg.output, render_trajectory_csv(dataset, y_sim));
  return 0;
}

int cmd_check(const RunConfig& cfg) {
  const std::shared_ptr<DynamicsModel> model = cfg.build_model();
  const Dataset dataset = cfg.load(model);
  const CheckReport report = run_all_checks(model, dataset, cfg.check.seed, cfg.check.tolerances);
  const ReportHeader header = make_header("check", cfg, *model, dataset, false);
  write_output(cfg.output, render_check_report(header, report));
  return report.all_passed() ? 0 : 3;
}

int cmd_identify(const RunConfig& cfg) {
  const std::shared_ptr<DynamicsModel> model = cfg.build_model();
  const Dataset dataset = cfg.load(model);
  DecisionVector guess = cfg.decision(model->dims());
  if (cfg.x0_from_observation) pin_x0_to_first_observation(*model, dataset, guess);

  const RunReport report = cfg.solver == SolverKind::analytic
                               ? newton_solve(*model, dataset, guess, cfg.optimizer)
                               : fd_baseline_solve(*model, dataset, guess, cfg.optimizer);

  Mat y_sim;
  const double gof_value = guarded_gof(*model, report.estimate.x0, report.estimate.p, dataset,
                                       cfg.integrator, &y_sim);
  const ReportHeader header = make_header("identify", cfg, *model, dataset, true);
  const std::string text = render_run_report(header, report, gof_value, true, cfg.optimizer);
  write_report_and_trajectory(cfg, text, dataset, &y_sim);
  return report.status == SolveStatus::aborted ? 3 : 0;
}

int cmd_validate(const RunConfig& cfg) {
  const std::shared_ptr<DynamicsModel> model = cfg.build_model();
  const Dataset dataset = cfg.load(model);
  DecisionVector dv = cfg.decision(model->dims());
  if (cfg.x0_from_observation) pin_x0_to_first_observation(*model, dataset, dv);

  const Mat y_sim = simulate_outputs(*model, dv.x0, dv.p, dataset, cfg.integrator);
  const double gof_value = gof(dataset.observations, y_sim);
  const Trajectory traj = integrate(*model, dv.x0, dv.p, dataset.input, dataset.times,
                                    SensitivityOrder::FirstOrder, cfg.integrator);
  RunReport stub;
  stub.estimate = dv;
  stub.j_final = evaluate_cost(traj, *model, dv.p, dataset);

  const ReportHeader header = make_header("validate", cfg, *model, dataset, false);
  const std::string text = render_run_report(header, stub, gof_value, false, cfg.optimizer);
  write_report_and_trajectory(cfg, text, dataset, &y_sim);
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  const SweepOutcome outcome = run_sweep(cfg);
  const std::shared_ptr<DynamicsModel> model = cfg.build_model();
  const Dataset dataset = cfg.load(model);
  ReportHeader header = make_header("sweep", cfg, *model, dataset, false);
  write_output(cfg.output, render_sweep_report(header, outcome));
  return 0;
}

int dispatch_command(const std::string& command, const RunConfig& cfg) {
  cfg.validate();
  if (command == "simulate") return cmd_simulate(cfg);
  if (command == "check") return cmd_check(cfg);
  if (command == "identify") return cmd_identify(cfg);
  if (command == "validate") return cmd_validate(cfg);
  if (command == "sweep") return cmd_sweep(cfg);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace greybox
