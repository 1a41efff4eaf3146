#pragma once

#include <algorithm>
#include <vector>

#include "greybox/model.hpp"
#include "greybox/tensor.hpp"

namespace greybox {

/// FirstOrder propagates x, Φ, Θ only and never touches the model's second
/// derivatives; SecondOrder adds the rank-3 transition tensors.
enum class SensitivityOrder { FirstOrder, SecondOrder };

/// The augmented system at one instant: the state x together with the
/// transition matrices and second-order transition tensors
///   phi    N x N      ∂x_i/∂x0_j
///   theta  N x M      ∂x_i/∂p_j
///   phi1   N x N x N  ∂²x_i/∂x0_j∂x0_k
///   theta1 N x M x M  ∂²x_i/∂p_j∂p_k
///   chi1   N x N x M  ∂²x_i/∂x0_j∂p_k
///   chi2   N x M x N  ∂²x_i/∂p_j∂x0_k
/// phi1 and theta1 are symmetric in their trailing index pair, and
/// chi2(i,j,k) == chi1(i,k,j); the integrator propagates the full tensors so
/// asymmetry stays observable as a bug signal.
struct AugmentedState {
  double t = 0.0;
  Vec x;
  Mat phi;
  Mat theta;
  Tens3 phi1;
  Tens3 theta1;
  Tens3 chi1;
  Tens3 chi2;
};

/// Augmented states emitted at the requested sample times. States of a
/// FirstOrder trajectory leave the rank-3 tensors empty (size 0).
struct Trajectory {
  std::vector<AugmentedState> states;
  SensitivityOrder order = SensitivityOrder::SecondOrder;
  /// Domain clamps the model reported during this integration (e.g. square
  /// roots evaluated near zero); nonzero counts warrant a warning.
  std::uint64_t clamp_events = 0;
};

/// Fixed-step integrator settings. clamp_epsilon is plumbing for models with
/// guarded domains (see make_model); the stepper itself only reads substeps.
struct IntegratorConfig {
  int substeps = 8;
  double clamp_epsilon = 1e-12;
};

/// Augmented initial condition: x = x0, phi = I, theta = 0, every rank-3
/// tensor zero (initial state and parameters are treated as uncorrelated, so
/// no cross coupling enters at t0).
AugmentedState init_augmented(const Vec& x0, const ModelDims& dims);

/// Time derivative of every block of `s`:
///   dx/dt  = f
///   dΦ/dt  = f_x Φ
///   dΘ/dt  = f_x Θ + f_p
///   dΦ¹/dt = f_xx·(Φ,Φ) + f_x Φ¹
///   dΘ¹/dt = f_xx·(Θ,Θ) + f_px·Θ + f_xp·Θ + f_x Θ¹ + f_pp
///   dχ¹/dt = f_xx·(Φ,Θ) + f_xp·Φ + f_x χ¹
///   dχ²/dt = f_xx·(Θ,Φ) + f_px·Φ + f_x χ²
/// With order == FirstOrder only the first three lines are evaluated and the
/// returned rank-3 blocks are empty. Model evaluation failures are rethrown
/// with the evaluation time attached.
AugmentedState augmented_rhs(const DynamicsModel& model, const AugmentedState& s, const Vec& p,
                             double u, SensitivityOrder order = SensitivityOrder::SecondOrder);

/// Integrates the augmented system with classical fixed-step RK4, using
/// cfg.substeps uniform substeps per inter-sample interval and emitting one
/// AugmentedState per sample time (the first equals init_augmented at t0).
/// For stepping, the whole augmented state is flattened into one vector in
/// the order (x, Φ, Θ, Φ¹, Θ¹, χ¹, χ²), each block in tensor-core layout.
/// The input is sampled at each substep's start and held through its stages,
/// so the discrete flow map stays differentiable in (x0, p) and the
/// integrated tensors are its exact derivatives. A non-finite state aborts
/// with the failing time and substep.
Trajectory integrate(const DynamicsModel& model, const Vec& x0, const Vec& p,
                     const InputSignal& input, const std::vector<double>& sample_times,
                     SensitivityOrder order, const IntegratorConfig& cfg = {});

/// Worst relative mismatch per transition tensor between the integrated
/// values and central finite differences of re-integrated trajectories.
/// Errors are ‖A − FD‖_max / max(1, ‖FD‖_max).
struct TransitionCheckReport {
  double phi_error = 0.0;
  double theta_error = 0.0;
  double phi1_error = 0.0;
  double theta1_error = 0.0;
  double chi1_error = 0.0;
  double chi2_error = 0.0;

  double worst_first_order() const { return std::max(phi_error, theta_error); }
  double worst_second_order() const {
    return std::max(std::max(phi1_error, theta1_error), std::max(chi1_error, chi2_error));
  }
  double worst() const { return std::max(worst_first_order(), worst_second_order()); }
};

/// Integrates nominally over [t0, t_end] (t0 = first input sample), then
/// re-integrates with each coordinate of x0 and p bumped by
/// ±bump·max(1, |coord|) and compares: Φ and Θ against differences of x,
/// the rank-3 tensors against differences of the first-order Φ and Θ.
/// A bumped integration that fails reports the offending coordinate.
TransitionCheckReport fd_transition_check(const DynamicsModel& model, const Vec& x0, const Vec& p,
                                          const InputSignal& input, double t_end, double bump,
                                          const IntegratorConfig& cfg = {});

}  // namespace greybox
