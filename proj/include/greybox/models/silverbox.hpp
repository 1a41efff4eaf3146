#pragma once

#include "greybox/model.hpp"

namespace greybox {

/// Forced Duffing oscillator realized as an electrical circuit: a mass-spring
/// system with a cubic hardening spring. States x1 = y (position) and
/// x2 = dy/dt; parameters p = (m, d, a, b) for mass, viscous damping, and the
/// linear/cubic spring coefficients; scalar output y = x1.
///
///   dx1/dt = x2
///   dx2/dt = u - (d/m) x2 - (a/m) x1 - (b/m) x1^3
class SilverboxModel final : public DynamicsModel {
 public:
  /// Sampling period of the benchmark recordings: 2^14 / 10^7 seconds.
  static constexpr double sample_period = 16384.0 / 1.0e7;

  ModelDims dims() const override { return {2, 4, 1}; }
  EvalDomain domain() const override;

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
};

}  // namespace greybox
