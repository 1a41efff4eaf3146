#pragma once

#include <utility>
#include <vector>

#include "greybox/model.hpp"
#include "greybox/sensitivity.hpp"
#include "greybox/tensor.hpp"

namespace greybox {

/// Time-stamped observations driving the output-error cost. Row h of
/// `observations` is the measured output vector at `times[h]`; `input` is the
/// exogenous signal the experiment was driven with.
struct Dataset {
  std::vector<double> times;
  Mat observations;           ///< samples x outputs
  InputSignal input;
  double sample_period = 0.0; ///< seconds; 0 when unknown or irregular

  Index samples() const { return static_cast<Index>(times.size()); }

  /// Structural invariants: matching sample counts, strictly increasing
  /// finite times, finite observations with `n_outputs` columns, and an input
  /// signal that covers the sample window.
  void validate(Index n_outputs) const;
};

/// Cost value with every derivative block assembled from one trajectory pass.
struct CostReport {
  double J = 0.0;
  Vec grad_x0;   ///< N
  Vec grad_p;    ///< M
  Mat H_x0x0;    ///< N x N
  Mat H_x0p;     ///< N x M
  Mat H_px0;     ///< M x N
  Mat H_pp;      ///< M x M
  Mat residuals; ///< samples x outputs, row h = y_obs(t_h) - y_sim(t_h)

  /// [[H_x0x0, H_x0p], [H_px0, H_pp]] as one (N+M) x (N+M) matrix.
  Mat full_hessian() const;
};

struct GradientBlocks {
  Vec x0; ///< N
  Vec p;  ///< M
};

struct HessianBlocks {
  Mat x0x0; ///< N x N
  Mat x0p;  ///< N x M
  Mat px0;  ///< M x N
  Mat pp;   ///< M x M
};

/// Sum of squared output residuals over all samples. Any trajectory order.
/// When `residuals` is non-null it receives the samples x outputs residual
/// matrix. The trajectory's sample times must equal the dataset's exactly.
double evaluate_cost(const Trajectory& traj, const DynamicsModel& model, const Vec& p,
                     const Dataset& dataset, Mat* residuals = nullptr);

/// Exact cost gradient with respect to the initial state and the parameters.
/// A FirstOrder trajectory suffices.
GradientBlocks gradient(const Trajectory& traj, const DynamicsModel& model, const Vec& p,
                        const Dataset& dataset);

/// Exact Hessian blocks of the cost. Requires a SecondOrder trajectory;
/// throws ConfigError when the second-order tensors are absent.
HessianBlocks hessian(const Trajectory& traj, const DynamicsModel& model, const Vec& p,
                      const Dataset& dataset);

/// Cost, gradient, Hessian, and residuals in a single pass over the
/// trajectory. Requires a SecondOrder trajectory.
CostReport cost_report(const Trajectory& traj, const DynamicsModel& model, const Vec& p,
                       const Dataset& dataset);

/// Goodness of fit: 1 - ||y_obs - y_sim|| / ||y_obs - mean(y_obs)||, with the
/// Euclidean norm over the flattened sequence and each output channel
/// centered by its own mean. Returns 1 for a perfect match; throws DataError
/// when the observations are constant (undefined denominator).
double gof(const Mat& y_obs, const Mat& y_sim);

}  // namespace greybox
