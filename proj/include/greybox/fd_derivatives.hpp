#pragma once

#include <cmath>
#include <memory>

#include "greybox/model.hpp"

namespace greybox {

/// Central-difference step scales. First derivatives use cbrt(eps), second
/// derivatives the wider eps^(1/4) so the nested stencil stays above the
/// round-off floor. The actual step for a coordinate is
/// scale * max(|coordinate|, floor), where the floor is the half-width of the
/// model's declared plausible range for that coordinate (1 when undeclared),
/// keeping stencils commensurate with badly scaled coordinates such as
/// parameters of order 1e-6.
struct FdSteps {
  double first = std::cbrt(std::numeric_limits<double>::epsilon());
  double second = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
};

/// Wraps a model that supplies only f and c, filling every partial by central
/// differences: first derivatives from f/c, second derivatives by central
/// differences of the finite-difference first derivatives. Also serves as the
/// independent oracle for models with analytic partials (it never reads them).
class FdDerivatives final : public DynamicsModel {
 public:
  FdDerivatives(std::shared_ptr<const BasicDynamics> inner, FdSteps steps = {});

  ModelDims dims() const override { return inner_->dims(); }
  EvalDomain domain() const override { return inner_->domain(); }
  std::uint64_t clamp_events() const override { return inner_->clamp_events(); }

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
  std::shared_ptr<const BasicDynamics> inner_;
  FdSteps steps_;
  Vec x_floor_;
  Vec p_floor_;
};

/// Convenience wrapper matching the one-step signature: `step` overrides the
/// first-derivative scale; the second-derivative scale keeps its default.
std::shared_ptr<FdDerivatives> fd_fill_derivatives(std::shared_ptr<const BasicDynamics> model,
                                                   double step);

std::shared_ptr<FdDerivatives> fd_fill_derivatives(std::shared_ptr<const BasicDynamics> model);

}  // namespace greybox
