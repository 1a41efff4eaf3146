#include <cmath>

#include "doctest.h"

#include "greybox/optimizer.hpp"
#include "support/test_models.hpp"

using namespace greybox;
using namespace greybox::testing;

namespace {

/// ẋ = x² diverges in finite time from x0 = 1; used to exercise the abort path.
class Divergent final : public DynamicsModel {
 public:
  ModelDims dims() const override { return {1, 0, 1}; }
  Vec f(double, const Vec& x, const Vec&, double) const override {
    return Vec::Constant(1, x[0] * x[0]);
  }
  Vec c(double, const Vec& x, const Vec&, double) const override { return x; }
  Mat f_x(double, const Vec& x, const Vec&, double) const override {
    return Mat::Constant(1, 1, 2.0 * x[0]);
  }
  Mat f_p(double, const Vec&, const Vec&, double) const override { return Mat(1, 0); }
  Tens3 f_xx(double, const Vec&, const Vec&, double) const override {
    Tens3 t(1, 1, 1);
    t(0, 0, 0) = 2.0;
    return t;
  }
  Tens3 f_xp(double, const Vec&, const Vec&, double) const override { return Tens3(1, 1, 0); }
  Tens3 f_px(double, const Vec&, const Vec&, double) const override { return Tens3(1, 0, 1); }
  Tens3 f_pp(double, const Vec&, const Vec&, double) const override { return Tens3(1, 0, 0); }
  Mat c_x(double, const Vec&, const Vec&, double) const override { return Mat::Ones(1, 1); }
  Mat c_p(double, const Vec&, const Vec&, double) const override { return Mat(1, 0); }
  Tens3 c_xx(double, const Vec&, const Vec&, double) const override { return Tens3(1, 1, 1); }
  Tens3 c_xp(double, const Vec&, const Vec&, double) const override { return Tens3(1, 1, 0); }
  Tens3 c_px(double, const Vec&, const Vec&, double) const override { return Tens3(1, 0, 1); }
  Tens3 c_pp(double, const Vec&, const Vec&, double) const override { return Tens3(1, 0, 0); }
};

std::vector<double> grid(double t0, double t1, int points) {
  std::vector<double> ts(points);
  for (int i = 0; i < points; ++i) ts[i] = t0 + (t1 - t0) * i / (points - 1);
  return ts;
}

/// Noiseless observations generated by the same integrator configuration the
/// solver uses, so the truth is an exact global minimum with J = 0.
Dataset make_dataset(const DynamicsModel& model, const Vec& x0, const Vec& p,
                     const InputSignal& input, const std::vector<double>& times) {
  Dataset ds;
  ds.times = times;
  ds.input = input;
  const Trajectory tr = integrate(model, x0, p, input, times, SensitivityOrder::FirstOrder, {});
  ds.observations = Mat(static_cast<Index>(times.size()), model.dims().n_outputs);
  for (std::size_t h = 0; h < times.size(); ++h) {
    ds.observations.row(static_cast<Index>(h)) =
        model.c(times[h], tr.states[h].x, p, input.value_at(times[h])).transpose();
  }
  return ds;
}

}  // namespace

TEST_CASE("decision vector pack/unpack round-trips and respects masks") {
  DecisionVector d;
  d.free_x0 = {true, false, true};
  d.free_p = {false, true};
  d.x0 = Vec(3);
  d.x0 << 1.0, 2.0, 3.0;
  d.p = Vec(2);
  d.p << 4.0, 5.0;

  CHECK(d.free_count() == 3);
  const Vec packed = d.pack();
  REQUIRE(packed.size() == 3);
  CHECK(packed[0] == 1.0);
  CHECK(packed[1] == 3.0);
  CHECK(packed[2] == 5.0);

  Vec moved(3);
  moved << -1.0, -3.0, -5.0;
  d.unpack(moved);
  CHECK(d.x0[0] == -1.0);
  CHECK(d.x0[1] == 2.0);  // fixed coordinate untouched
  CHECK(d.x0[2] == -3.0);
  CHECK(d.p[0] == 4.0);   // fixed coordinate untouched
  CHECK(d.p[1] == -5.0);
  CHECK(d.pack() == moved);

  CHECK_THROWS_AS(d.unpack(Vec::Zero(2)), DimensionError);
  CHECK_THROWS_AS(d.validate(ModelDims{2, 2, 1}), DimensionError);
  CHECK_NOTHROW(d.validate(ModelDims{3, 2, 1}));

  DecisionVector params = DecisionVector::params_only(d.x0, d.p);
  CHECK(params.free_count() == 2);
  CHECK_FALSE(params.free_x0[0]);

  DecisionVector none = params;
  none.free_p = {false, false};
  CHECK_THROWS_AS(none.validate(ModelDims{3, 2, 1}), ConfigError);
}

TEST_CASE("hessian regularization picks the smallest workable damping") {
  Mat pd(2, 2);
  pd << 2.0, 0.0, 0.0, 3.0;
  const Regularized r0 = regularize_hessian(pd, 1.0);
  CHECK(r0.damping == 0.0);
  CHECK((r0.h - pd).cwiseAbs().maxCoeff() == 0.0);

  Mat indefinite(2, 2);
  indefinite << -1.0, 0.0, 0.0, 1.0;
  const Regularized r1 = regularize_hessian(indefinite, 1.0);
  CHECK(r1.damping == 2.0);  // candidates 0, 1 leave a non-positive eigenvalue
  CHECK(r1.h(0, 0) == doctest::Approx(1.0));
  CHECK(r1.h(1, 1) == doctest::Approx(3.0));

  const Regularized rz = regularize_hessian(Mat::Zero(2, 2), 0.5);
  CHECK(rz.damping == 0.5);  // zero matrix is not positive definite

  Mat skewed(2, 2);
  skewed << 1.0, 4.0, 0.0, 1.0;  // symmetrized to [[1,2],[2,1]], eigenvalues -1 and 3
  const Regularized rs = regularize_hessian(skewed, 1.0);
  CHECK(rs.damping == 2.0);
  CHECK(rs.h(0, 1) == doctest::Approx(2.0));

  CHECK_THROWS_AS(regularize_hessian(Mat::Zero(2, 3), 1.0), DimensionError);
  CHECK_THROWS_AS(regularize_hessian(pd, 0.0), ConfigError);
  Mat bad = pd;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(regularize_hessian(bad, 1.0), NumericalError);
}

TEST_CASE("optimizer config validation") {
  OptimizerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  OptimizerConfig bad = cfg;
  bad.armijo_c = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.rel_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.max_iter = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.backtrack_factor = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK(to_string(SolveStatus::converged_grad) == "converged_grad");
  CHECK(to_string(SolveStatus::aborted) == "aborted");
}

TEST_CASE("quadratic cost: one Newton iteration, and the baseline agrees") {
  AffineModel model;
  Vec x0_true(2);
  x0_true << 0.2, -0.1;
  Vec p_true(2);
  p_true << 1.0, 0.5;
  const Dataset ds =
      make_dataset(model, x0_true, p_true, InputSignal::constant(0.4), grid(0.0, 2.0, 6));

  Vec x0_guess(2);
  x0_guess << 0.25, -0.06;
  Vec p_guess(2);
  p_guess << 0.93, 0.55;
  const DecisionVector guess = DecisionVector::all_free(x0_guess, p_guess);

  OptimizerConfig cfg;
  cfg.grad_tol = 1e-12;
  const RunReport newton = newton_solve(model, ds, guess, cfg);
  CHECK(newton.status == SolveStatus::converged_grad);
  CHECK(newton.iterations == 1);
  CHECK(newton.j_final <= 1e-20);
  CHECK((newton.estimate.x0 - x0_true).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((newton.estimate.p - p_true).cwiseAbs().maxCoeff() <= 1e-8);

  // First iterates of the exact and finite-difference drivers coincide. On a
  // quadratic cost wider stencils have no truncation error and less roundoff,
  // so the comparison runs with a coarse Hessian step.
  OptimizerConfig one_iter = cfg;
  one_iter.max_iter = 1;
  one_iter.fd_hessian_step = 1e-2;
  const RunReport n1 = newton_solve(model, ds, guess, one_iter);
  const RunReport f1 = fd_baseline_solve(model, ds, guess, one_iter);
  REQUIRE(n1.history.size() == 1);
  REQUIRE(f1.history.size() == 1);
  CHECK((n1.history[0].decision - f1.history[0].decision).cwiseAbs().maxCoeff() <= 1e-8);

  // The baseline converges to the same estimates at looser gradient demands.
  OptimizerConfig fd_cfg = cfg;
  fd_cfg.grad_tol = 1e-7;
  fd_cfg.fd_hessian_step = 1e-2;
  const RunReport fd = fd_baseline_solve(model, ds, guess, fd_cfg);
  CHECK(fd.status == SolveStatus::converged_grad);
  CHECK((fd.estimate.x0 - newton.estimate.x0).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((fd.estimate.p - newton.estimate.p).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("scalar exponential: decreasing cost and superlinear tail") {
  ScalarExponential model;
  const Vec x0_true = Vec::Constant(1, 2.0);
  const Vec p_true = Vec::Constant(1, 0.5);
  const Dataset ds =
      make_dataset(model, x0_true, p_true, InputSignal::constant(0.0), grid(0.0, 1.0, 6));

  const DecisionVector guess =
      DecisionVector::all_free(Vec::Constant(1, 1.5), Vec::Constant(1, 0.3));
  OptimizerConfig cfg;
  cfg.max_iter = 50;
  cfg.grad_tol = 1e-12;
  cfg.abs_tol = 1e-30;
  cfg.rel_tol = 1e-30;
  const RunReport rep = newton_solve(model, ds, guess, cfg);

  CHECK(rep.status == SolveStatus::converged_grad);
  REQUIRE(rep.history.size() >= 4);
  CHECK(rep.j_initial > rep.history.front().J);
  for (std::size_t k = 1; k < rep.history.size(); ++k) {
    CHECK(rep.history[k].J < rep.history[k - 1].J);
  }

  Vec truth(2);
  truth << 2.0, 0.5;
  std::vector<double> err;
  for (const IterationRecord& rec : rep.history) {
    const double e = (rec.decision - truth).norm();
    if (e > 1e-12) err.push_back(e);
  }
  REQUIRE(err.size() >= 3);
  const double r_prev = err[err.size() - 2] / err[err.size() - 3];
  const double r_last = err[err.size() - 1] / err[err.size() - 2];
  CHECK(r_last < r_prev);  // contraction accelerates near the minimum
  CHECK(r_last < 0.1);

  CHECK((rep.estimate.x0 - x0_true).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((rep.estimate.p - p_true).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("masked coordinates never move") {
  ScalarExponential model;
  const Vec x0_true = Vec::Constant(1, 2.0);
  const Vec p_true = Vec::Constant(1, 0.5);
  const Dataset ds =
      make_dataset(model, x0_true, p_true, InputSignal::constant(0.0), grid(0.0, 1.0, 6));

  // x0 fixed at the truth, only p free.
  const DecisionVector guess = DecisionVector::params_only(x0_true, Vec::Constant(1, 0.35));
  const RunReport rep = newton_solve(model, ds, guess, {});
  CHECK(rep.estimate.x0[0] == 2.0);
  CHECK(rep.estimate.p[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(rep.iterations >= 1);
}

TEST_CASE("divergence at the initial guess is an abort, not a throw") {
  Divergent model;
  Dataset ds;
  ds.times = {0.0, 4.0};  // the trajectory from x0 = 1 blows up before t = 4
  ds.input = InputSignal::constant(0.0);
  ds.observations = Mat::Zero(2, 1);

  const DecisionVector guess = DecisionVector::all_free(Vec::Constant(1, 1.0), Vec::Zero(0));
  const RunReport newton = newton_solve(model, ds, guess, {});
  CHECK(newton.status == SolveStatus::aborted);
  CHECK_FALSE(newton.message.empty());
  CHECK(newton.iterations == 0);

  const RunReport fd = fd_baseline_solve(model, ds, guess, {});
  CHECK(fd.status == SolveStatus::aborted);
}
