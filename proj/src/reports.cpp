#include "greybox/reports.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace greybox {

namespace {

std::string vec_text(const Vec& v) {
  std::string out = "[";
  for (Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_number(v[i]);
  }
  out += "]";
  return out;
}

std::string mask_text(const std::vector<bool>& mask) {
  std::string out = "[";
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (i > 0) out += ", ";
    out += mask[i] ? "true" : "false";
  }
  out += "]";
  return out;
}

void header_lines(std::ostringstream& out, const ReportHeader& header) {
  out << "report: " << header.command << "\n";
  out << "model: " << header.model << "\n";
  if (!header.solver.empty()) out << "solver: " << header.solver << "\n";
  out << "samples: " << header.samples << "\n";
  out << "clamp_events: " << header.clamp_events << "\n";
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_gof(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  // Nine significant digits: differences below that are far beneath the
  // statistical resolution of the fit metric, and stray terminal-precision
  // noise should not reorder solver comparisons read from the table.
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string render_run_report(const ReportHeader& header, const RunReport& run,
                              double gof_value, bool solved,
                              const OptimizerConfig& cfg) {
  std::ostringstream out;
  header_lines(out, header);
  if (solved) {
    out << "status: " << to_string(run.status) << "\n";
    out << "initiated: " << (run.iterations >= 1 ? "true" : "false") << "\n";
    out << "iterations: " << run.iterations << "\n";
    out << "j_initial: " << format_number(run.j_initial) << "\n";
    out << "j_final: " << format_number(run.j_final) << "\n";
    out << "grad_norm_final: " << format_number(run.grad_norm_final) << "\n";
  } else {
    out << "j_final: " << format_number(run.j_final) << "\n";
  }
  out << "gof: " << format_number(gof_value) << "\n";
  out << "estimate_x0: " << vec_text(run.estimate.x0) << "\n";
  out << "estimate_p: " << vec_text(run.estimate.p) << "\n";
  out << "free_x0: " << mask_text(run.estimate.free_x0) << "\n";
  out << "free_p: " << mask_text(run.estimate.free_p) << "\n";
  if (solved) {
    out << "settings:\n";
    out << "  rel_tol: " << format_number(cfg.rel_tol) << "\n";
    out << "  abs_tol: " << format_number(cfg.abs_tol) << "\n";
    out << "  grad_tol: " << format_number(cfg.grad_tol) << "\n";
    out << "  max_iter: " << cfg.max_iter << "\n";
    out << "  substeps: " << cfg.integrator.substeps << "\n";
    if (!run.message.empty()) out << "message: " << run.message << "\n";
    out << "history:\n";
    for (const IterationRecord& rec : run.history) {
      out << "  - {iter: " << rec.iteration << ", J: " << format_number(rec.J)
          << ", grad_norm: " << format_number(rec.grad_norm)
          << ", step: " << format_number(rec.step_length)
          << ", damping: " << format_number(rec.damping) << "}\n";
    }
  }
  return out.str();
}

std::string render_check_report(const ReportHeader& header, const CheckReport& report) {
  std::ostringstream out;
  header_lines(out, header);
  out << "seed: " << report.seed << "\n";
  out << "result: " << (report.all_passed() ? "pass" : "fail") << "\n";
  out << "checks:\n";
  for (const CheckResult& check : report.checks) {
    out << "  - {name: \"" << check.name << "\", max_error: " << format_number(check.max_error)
        << ", tolerance: " << format_number(check.tolerance)
        << ", passed: " << (check.passed ? "true" : "false");
    if (!check.note.empty()) out << ", note: \"" << check.note << "\"";
    out << "}\n";
  }
  return out.str();
}

const SweepCell* SweepOutcome::find(SolverKind kind, double tolerance) const {
  for (const SweepCell& cell : cells) {
    if (cell.solver == kind && cell.tolerance == tolerance) return &cell;
  }
  return nullptr;
}

std::string render_sweep_report(const ReportHeader& header, const SweepOutcome& outcome) {
  std::ostringstream out;
  header_lines(out, header);
  out << "count: " << outcome.count << "\n";
  out << "perturbation: " << format_number(outcome.perturbation) << "\n";
  out << "seed: " << outcome.seed << "\n";
  out << "columns: [solver, tolerance, initiated, converged, aborted, best_gof]\n";
  out << "cells:\n";
  for (const SweepCell& cell : outcome.cells) {
    out << "  - {solver: " << to_string(cell.solver)
        << ", tolerance: " << format_number(cell.tolerance)
        << ", initiated: " << cell.initiated << ", converged: " << cell.converged
        << ", aborted: " << cell.aborted << ", best_gof: " << format_gof(cell.best_gof)
        << "}\n";
  }
  return out.str();
}

std::string render_trajectory_csv(const Dataset& dataset, const Mat& y_sim) {
  if (y_sim.rows() != dataset.observations.rows() ||
      y_sim.cols() != dataset.observations.cols()) {
    throw DimensionError("trajectory csv: simulated outputs sized " +
                         std::to_string(y_sim.rows()) + "x" + std::to_string(y_sim.cols()) +
                         ", observations " + std::to_string(dataset.observations.rows()) + "x" +
                         std::to_string(dataset.observations.cols()));
  }
  std::ostringstream out;
  out << "t";
  for (Index s = 0; s < y_sim.cols(); ++s) {
    const std::string ch = std::to_string(s + 1);
    out << ",y_sim_" << ch << ",y_obs_" << ch << ",residual_" << ch;
  }
  out << "\n";
  for (Index k = 0; k < y_sim.rows(); ++k) {
    out << format_number(dataset.times[static_cast<std::size_t>(k)]);
    for (Index s = 0; s < y_sim.cols(); ++s) {
      const double sim = y_sim(k, s);
      const double obs = dataset.observations(k, s);
      out << "," << format_number(sim) << "," << format_number(obs) << ","
          << format_number(obs - sim);
    }
    out << "\n";
  }
  return out.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output file '" + path + "'");
  out << text;
  if (!out) throw DataError("failed writing output file '" + path + "'");
}

}  // namespace greybox
