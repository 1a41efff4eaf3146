#include <cmath>
#include <memory>

#include "doctest.h"

#include "greybox/fd_derivatives.hpp"
#include "greybox/model.hpp"
#include "support/oracles.hpp"
#include "support/test_models.hpp"

using namespace greybox;
using namespace greybox::testing;

namespace {

/// One-state tank leg: f = -p1*sqrt(x1) + p2*u with identity output.
class MiniTank final : public BasicDynamics {
 public:
  ModelDims dims() const override { return {1, 2, 1}; }

  EvalDomain domain() const override {
    EvalDomain box;
    box.x_lo = Vec::Constant(1, 0.5);
    box.x_hi = Vec::Constant(1, 2.0);
    box.p_lo = Vec::Constant(2, 0.01);
    box.p_hi = Vec::Constant(2, 0.08);
    return box;
  }

  Vec f(double, const Vec& x, const Vec& p, double u) const override {
    return Vec::Constant(1, -p[0] * std::sqrt(x[0]) + p[1] * u);
  }
  Vec c(double, const Vec& x, const Vec&, double) const override { return x; }
};

class ConstantDynamics final : public BasicDynamics {
 public:
  ModelDims dims() const override { return {2, 1, 1}; }
  Vec f(double, const Vec&, const Vec&, double) const override {
    Vec v(2);
    v << 0.7, -1.3;
    return v;
  }
  Vec c(double, const Vec&, const Vec&, double) const override {
    return Vec::Constant(1, 4.2);
  }
};

/// Deliberately returns f_x with the wrong shape.
class BrokenShapes final : public DynamicsModel {
 public:
  ModelDims dims() const override { return {2, 1, 1}; }
  Vec f(double, const Vec&, const Vec&, double) const override { return Vec::Zero(2); }
  Vec c(double, const Vec& x, const Vec&, double) const override {
    return Vec::Constant(1, x[0]);
  }
  Mat f_x(double, const Vec&, const Vec&, double) const override { return Mat::Zero(1, 2); }
  Mat f_p(double, const Vec&, const Vec&, double) const override { return Mat::Zero(2, 1); }
  Tens3 f_xx(double, const Vec&, const Vec&, double) const override { return Tens3(2, 2, 2); }
  Tens3 f_xp(double, const Vec&, const Vec&, double) const override { return Tens3(2, 2, 1); }
  Tens3 f_px(double, const Vec&, const Vec&, double) const override { return Tens3(2, 1, 2); }
  Tens3 f_pp(double, const Vec&, const Vec&, double) const override { return Tens3(2, 1, 1); }
  Mat c_x(double, const Vec&, const Vec&, double) const override { return Mat::Zero(1, 2); }
  Mat c_p(double, const Vec&, const Vec&, double) const override { return Mat::Zero(1, 1); }
  Tens3 c_xx(double, const Vec&, const Vec&, double) const override { return Tens3(1, 2, 2); }
  Tens3 c_xp(double, const Vec&, const Vec&, double) const override { return Tens3(1, 2, 1); }
  Tens3 c_px(double, const Vec&, const Vec&, double) const override { return Tens3(1, 1, 2); }
  Tens3 c_pp(double, const Vec&, const Vec&, double) const override { return Tens3(1, 1, 1); }
};

double rel_gap(double got, double want, double floor = 1.0) {
  return std::abs(got - want) / std::max(floor, std::abs(want));
}

}  // namespace

TEST_CASE("ModelDims validation") {
  CHECK_NOTHROW(ModelDims{1, 0, 1}.validate());
  CHECK_NOTHROW(ModelDims{3, 5, 2}.validate());
  CHECK_THROWS_AS((ModelDims{0, 1, 1}).validate(), DimensionError);
  CHECK_THROWS_AS((ModelDims{1, -1, 1}).validate(), DimensionError);
  CHECK_THROWS_AS((ModelDims{1, 1, 0}).validate(), DimensionError);
}

TEST_CASE("InputSignal zero-order hold") {
  InputSignal u({0.0, 1.0, 2.5}, {10.0, 20.0, 30.0});
  CHECK(u.value_at(0.0) == 10.0);
  CHECK(u.value_at(0.999) == 10.0);
  CHECK(u.value_at(1.0) == 20.0);
  CHECK(u.value_at(2.4) == 20.0);
  CHECK(u.value_at(2.5) == 30.0);
  CHECK(u.value_at(99.0) == 30.0);  // held beyond the last sample
  CHECK_THROWS_AS(u.value_at(-0.1), DataError);

  CHECK_THROWS_AS(InputSignal({0.0, 0.0}, {1.0, 2.0}), DataError);
  CHECK_THROWS_AS(InputSignal({0.0, 1.0}, {1.0}), DimensionError);
  CHECK_THROWS_AS(InputSignal({0.0}, {std::nan("")}), DataError);

  const InputSignal k = InputSignal::constant(0.75);
  CHECK(k.value_at(0.0) == 0.75);
  CHECK(k.value_at(1e6) == 0.75);
}

TEST_CASE("fd_fill_derivatives recovers a linear model's coefficients") {
  auto model = std::make_shared<AffineModel>();
  auto fd = fd_fill_derivatives(model);
  Vec x(2);
  x << 0.3, -0.8;
  Vec p(2);
  p << 1.2, 0.7;
  const double u = 0.4;

  const Mat a_want = model->f_x(0.0, x, p, u);
  const Mat a_got = fd->f_x(0.0, x, p, u);
  CHECK((a_got - a_want).cwiseAbs().maxCoeff() <= 1e-8);

  const Mat b_want = model->f_p(0.0, x, p, u);
  CHECK((fd->f_p(0.0, x, p, u) - b_want).cwiseAbs().maxCoeff() <= 1e-8);

  CHECK(fd->f_xx(0.0, x, p, u).max_abs() <= 1e-6);
  CHECK(fd->f_xp(0.0, x, p, u).max_abs() <= 1e-6);
  CHECK(fd->f_pp(0.0, x, p, u).max_abs() <= 1e-6);
  CHECK(fd->c_xx(0.0, x, p, u).max_abs() <= 1e-6);
}

TEST_CASE("fd_fill_derivatives on a square-root leg matches the closed form") {
  auto fd = fd_fill_derivatives(std::make_shared<MiniTank>(), 1e-5);
  Vec x = Vec::Constant(1, 1.0);
  Vec p(2);
  p << 0.04, 0.02;
  // d f1 / d x1 = -p1 / (2 sqrt(x1)) = -0.02 at x1 = 1.
  const double got = fd->f_x(0.0, x, p, 0.0)(0, 0);
  CHECK(std::abs(got - (-0.02)) <= 1e-8);
}

TEST_CASE("fd_fill_derivatives on a constant model gives zeros") {
  auto fd = fd_fill_derivatives(std::make_shared<ConstantDynamics>());
  Vec x(2);
  x << 0.1, 0.2;
  Vec p = Vec::Constant(1, 1.0);
  CHECK(fd->f_x(0.0, x, p, 0.0).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(fd->f_p(0.0, x, p, 0.0).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(fd->c_x(0.0, x, p, 0.0).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(fd->f_xx(0.0, x, p, 0.0).max_abs() <= 1e-8);
  CHECK(fd->c_pp(0.0, x, p, 0.0).max_abs() <= 1e-8);
}

TEST_CASE("analytic partials of the cross-coupled model agree with the FD oracle") {
  auto model = std::make_shared<CrossCoupled>();
  auto fd = fd_fill_derivatives(std::static_pointer_cast<const BasicDynamics>(model));
  const EvalDomain box = model->domain();
  Rng rng(202);

  double worst_first = 0.0;
  double worst_second = 0.0;
  for (int pt = 0; pt < 100; ++pt) {
    Vec x(2);
    Vec p(3);
    for (Index i = 0; i < 2; ++i) x[i] = rng.uniform(box.x_lo[i], box.x_hi[i]);
    for (Index i = 0; i < 3; ++i) p[i] = rng.uniform(box.p_lo[i], box.p_hi[i]);
    const double u = rng.uniform(box.u_lo, box.u_hi);
    const double t = 0.0;

    worst_first = std::max(
        worst_first,
        (model->f_x(t, x, p, u) - fd->f_x(t, x, p, u)).cwiseAbs().maxCoeff());
    worst_first = std::max(
        worst_first,
        (model->f_p(t, x, p, u) - fd->f_p(t, x, p, u)).cwiseAbs().maxCoeff());
    worst_first = std::max(
        worst_first,
        (model->c_x(t, x, p, u) - fd->c_x(t, x, p, u)).cwiseAbs().maxCoeff());
    worst_first = std::max(
        worst_first,
        (model->c_p(t, x, p, u) - fd->c_p(t, x, p, u)).cwiseAbs().maxCoeff());

    worst_second =
        std::max(worst_second, tens3_max_abs_diff(model->f_xx(t, x, p, u), fd->f_xx(t, x, p, u)));
    worst_second =
        std::max(worst_second, tens3_max_abs_diff(model->f_xp(t, x, p, u), fd->f_xp(t, x, p, u)));
    worst_second =
        std::max(worst_second, tens3_max_abs_diff(model->f_px(t, x, p, u), fd->f_px(t, x, p, u)));
    worst_second =
        std::max(worst_second, tens3_max_abs_diff(model->f_pp(t, x, p, u), fd->f_pp(t, x, p, u)));
    worst_second =
        std::max(worst_second, tens3_max_abs_diff(model->c_xx(t, x, p, u), fd->c_xx(t, x, p, u)));
    worst_second =
        std::max(worst_second, tens3_max_abs_diff(model->c_xp(t, x, p, u), fd->c_xp(t, x, p, u)));
    worst_second =
        std::max(worst_second, tens3_max_abs_diff(model->c_px(t, x, p, u), fd->c_px(t, x, p, u)));
    worst_second =
        std::max(worst_second, tens3_max_abs_diff(model->c_pp(t, x, p, u), fd->c_pp(t, x, p, u)));
  }
  // All magnitudes here are O(1), so the absolute gap is the relative one.
  CHECK(worst_first <= 1e-6);
  CHECK(worst_second <= 1e-5);
}

TEST_CASE("mixed partials are mutually consistent") {
  CrossCoupled model;
  Rng rng(7);
  const EvalDomain box = model.domain();
  for (int pt = 0; pt < 20; ++pt) {
    Vec x(2);
    Vec p(3);
    for (Index i = 0; i < 2; ++i) x[i] = rng.uniform(box.x_lo[i], box.x_hi[i]);
    for (Index i = 0; i < 3; ++i) p[i] = rng.uniform(box.p_lo[i], box.p_hi[i]);
    const Tens3 xp = model.f_xp(0.0, x, p, 0.0);
    const Tens3 px = model.f_px(0.0, x, p, 0.0);
    for (Index i = 0; i < 2; ++i) {
      for (Index m = 0; m < 2; ++m) {
        for (Index k = 0; k < 3; ++k) CHECK(xp(i, m, k) == px(i, k, m));
      }
    }
  }
}

TEST_CASE("validate_model_shapes accepts good models and rejects bad ones") {
  const Vec x2 = Vec::Zero(2);
  const Vec p3 = Vec::Constant(3, 1.0);
  CHECK_NOTHROW(validate_model_shapes(CrossCoupled(), 0.0, x2, p3, 0.0));
  CHECK_NOTHROW(
      validate_model_shapes(RotationModel(), 0.0, x2, Vec(Vec::Zero(0)), 0.0));
  CHECK_THROWS_AS(validate_model_shapes(BrokenShapes(), 0.0, x2, Vec(Vec::Ones(1)), 0.0),
                  DimensionError);
}

TEST_CASE("scalar exponential analytic partials match the FD oracle") {
  auto model = std::make_shared<ScalarExponential>();
  auto fd = fd_fill_derivatives(std::static_pointer_cast<const BasicDynamics>(model));
  Rng rng(99);
  for (int pt = 0; pt < 20; ++pt) {
    Vec x = Vec::Constant(1, rng.uniform(-1.0, 1.0));
    Vec p = Vec::Constant(1, rng.uniform(0.5, 1.5));
    CHECK(rel_gap(fd->f_x(0.0, x, p, 0.0)(0, 0), p[0]) <= 1e-8);
    CHECK(rel_gap(fd->f_p(0.0, x, p, 0.0)(0, 0), x[0]) <= 1e-8);
    CHECK(rel_gap(fd->f_xp(0.0, x, p, 0.0)(0, 0, 0), 1.0) <= 1e-6);
    CHECK(std::abs(fd->f_xx(0.0, x, p, 0.0)(0, 0, 0)) <= 1e-6);
  }
}
