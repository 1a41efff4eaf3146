#pragma once

#include <string>
#include <vector>

#include "greybox/cost.hpp"

namespace greybox {

/// Free/fixed split of the joint decision space (x0, p). Masked-out
/// coordinates keep the stored values; pack()/unpack() move only the free
/// ones, ordered x0 coordinates first, then parameters.
struct DecisionVector {
  std::vector<bool> free_x0; ///< length N
  std::vector<bool> free_p;  ///< length M
  Vec x0;                    ///< length N, full values
  Vec p;                     ///< length M, full values

  static DecisionVector all_free(Vec x0, Vec p);
  /// x0 held fixed, every parameter free.
  static DecisionVector params_only(Vec x0, Vec p);

  Index free_count() const;
  Vec pack() const;
  void unpack(const Vec& values);
  void validate(const ModelDims& dims) const;
};

struct OptimizerConfig {
  double rel_tol = 1e-12;          ///< stop when |dJ|/max(J, tiny) falls below
  double abs_tol = 1e-14;          ///< stop when |dJ| falls below
  double grad_tol = 1e-9;          ///< stop on scaled-gradient infinity norm
  int max_iter = 100;
  double armijo_c = 1e-4;          ///< sufficient-decrease fraction
  double backtrack_factor = 0.5;
  double min_step = 1e-12;         ///< line search gives up below this alpha
  double damping_init = 1e-8;      ///< first nonzero Hessian damping candidate
  double fd_gradient_step = 1e-6;  ///< baseline solver: relative gradient step
  double fd_hessian_step = 1e-4;   ///< baseline solver: relative Hessian step
  IntegratorConfig integrator;

  void validate() const;
};

enum class SolveStatus {
  converged_abs,       ///< absolute cost decrease below abs_tol
  converged_rel,       ///< relative cost decrease below rel_tol
  converged_grad,      ///< scaled gradient below grad_tol
  max_iter,            ///< iteration budget exhausted
  line_search_failure, ///< no acceptable step above min_step; best-so-far kept
  aborted              ///< non-finite trajectory, cost, or derivatives
};

std::string to_string(SolveStatus status);

/// One accepted Newton iteration.
struct IterationRecord {
  int iteration = 0;
  double J = 0.0;          ///< cost after the accepted step
  double grad_norm = 0.0;  ///< scaled-gradient infinity norm where the step started
  double step_length = 0.0;
  double damping = 0.0;
  Vec decision;            ///< unscaled free coordinates after the step
};

struct RunReport {
  SolveStatus status = SolveStatus::aborted;
  DecisionVector estimate; ///< full x0/p at the best accepted iterate
  double j_initial = 0.0;
  double j_final = 0.0;
  double grad_norm_final = 0.0;
  int iterations = 0;      ///< accepted iterations
  std::vector<IterationRecord> history;
  double wall_seconds = 0.0;
  std::string message;     ///< failure detail for aborted runs
};

struct Regularized {
  Mat h;
  double damping = 0.0;
};

/// Symmetrize H and add the smallest damping mu from {0, damping_init * 2^k}
/// that makes it numerically positive definite.
Regularized regularize_hessian(const Mat& h, double damping_init);

/// Damped Newton on the output-error cost with the exact gradient and
/// Hessian from the propagated sensitivities.
RunReport newton_solve(const DynamicsModel& model, const Dataset& dataset,
                       const DecisionVector& guess, const OptimizerConfig& cfg = {});

/// Same driver, but gradient and Hessian come from central finite differences
/// of the cost itself — the robustness-comparison baseline.
RunReport fd_baseline_solve(const DynamicsModel& model, const Dataset& dataset,
                            const DecisionVector& guess, const OptimizerConfig& cfg = {});

}  // namespace greybox
