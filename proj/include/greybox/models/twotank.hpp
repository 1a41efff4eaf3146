#pragma once

#include <atomic>
#include <cstdint>

#include "greybox/model.hpp"

namespace greybox {

/// Cascaded water tanks: the pump feeds tank 1, which drains into tank 2.
/// States x1, x2 are the water levels; parameters p1..p4 are the outflow and
/// inflow coefficients; the scalar output is the level of tank 2.
///
///   dx1/dt = -p1 sqrt(x1) + p2 u
///   dx2/dt = -p3 sqrt(x2) + p4 sqrt(x1)
///
/// The square root is singular at zero, so levels are clamped from below at
/// `clamp_epsilon` before evaluation; each clamped argument increments the
/// clamp_events() counter (a warning signal, not an error).
class TwoTankModel final : public DynamicsModel {
 public:
  explicit TwoTankModel(double clamp_epsilon = 1e-12);

  /// Sampling period of the benchmark recordings, in seconds.
  static constexpr double sample_period = 5.0;

  ModelDims dims() const override { return {2, 4, 1}; }
  EvalDomain domain() const override;
  std::uint64_t clamp_events() const override { return clamps_.load(); }

  Vec f(double t, const Vec& x, const Vec& p, double u) const override;
  Vec c(double t, const Vec& x, const Vec& p, double u) const override;
  Mat f_x(double t, const Vec& x, const Vec& p, double u) const override;
  Mat f_p(double t, const Vec& x, const Vec& p, double u) const override;
  Tens3 f_xx(double t, const Vec& x, const Vec& p, double u) const override;
  Tens3 f_xp(double t, const Vec& x, const Vec& p, double u) const override;
  Tens3 f_px(double t, const Vec& x, const Vec& p, double u) const override;
  Tens3 f_pp(double t, const Vec& x, const Vec& p, double u) const override;
  Mat c_x(double t, const Vec& x, const Vec& p, double u) const override;
  Mat c_p(double t, const Vec& x, const Vec& p, double u) const override;
  Tens3 c_xx(double t, const Vec& x, const Vec& p, double u) const override;
  Tens3 c_xp(double t, const Vec& x, const Vec& p, double u) const override;
  Tens3 c_px(double t, const Vec& x, const Vec& p, double u) const override;
  Tens3 c_pp(double t, const Vec& x, const Vec& p, double u) const override;

 private:
  /// Levels clamped from below, counting how many entries needed it.
  Vec clamped(const Vec& x) const;

  double clamp_epsilon_;
  mutable std::atomic<std::uint64_t> clamps_{0};
};

}  // namespace greybox
