// Conformance harness: every analytic-vs-FD comparison aggregated into one
// seeded, deterministic report. The mutation cases plant a sign flip in each
// nonzero second-derivative entry of the benchmark models and demand that at
// least one check notices.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "greybox/dataset.hpp"
#include "greybox/models/silverbox.hpp"
#include "greybox/models/twotank.hpp"
#include "greybox/verify.hpp"
#include "support/test_models.hpp"

using namespace greybox;
using namespace greybox::testing;

namespace {

SyntheticScenario tank_check_scenario() {
  SyntheticScenario scenario;
  scenario.model = std::make_shared<TwoTankModel>();
  scenario.x0_true = Vec(2);
  scenario.x0_true << 0.3, 0.3;
  scenario.p_true = Vec(4);
  scenario.p_true << 0.0418, 0.0235, 0.0221, 0.0590;
  scenario.input = InputSignal::constant(1.5);
  scenario.times.resize(9);
  for (std::size_t h = 0; h < scenario.times.size(); ++h) {
    scenario.times[h] = static_cast<double>(h) * TwoTankModel::sample_period;
  }
  return scenario;
}

SyntheticScenario oscillator_check_scenario() {
  SyntheticScenario scenario;
  scenario.model = std::make_shared<SilverboxModel>();
  scenario.x0_true = Vec(2);
  scenario.x0_true << 0.02, 0.0;
  scenario.p_true = Vec(4);
  scenario.p_true << 5.271e-6, 2.1491e-4, 0.9675, 3.975;
  const double ts = SilverboxModel::sample_period;
  scenario.input = InputSignal({0.0, 4.0 * ts, 8.0 * ts}, {0.1, -0.08, 0.12});
  scenario.times.resize(13);
  for (std::size_t h = 0; h < scenario.times.size(); ++h) {
    scenario.times[h] = static_cast<double>(h) * ts;
  }
  return scenario;
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "model partials: first order vs FD",
      "model partials: second order vs FD",
      "transition tensors: first order vs FD",
      "transition tensors: second order vs FD",
      "cost gradient vs FD of cost",
      "cost Hessian vs FD of gradient",
      "Hessian symmetry",
      "Phi1 trailing-pair symmetry",
      "Theta1 trailing-pair symmetry",
      "chi2 duality with chi1",
  };
  return names;
}

/// Plants a sign flip in every nonzero second-derivative entry of `model`
/// (probed at a reference point) and counts the mutants that slip through
/// all checks unnoticed.
int undetected_mutants(const std::shared_ptr<const DynamicsModel>& model, const Dataset& data,
                       const Vec& x_ref, const Vec& p_ref, double u_ref, std::uint64_t seed,
                       int* total) {
  const std::vector<std::pair<Surface, Tens3>> probes = {
      {Surface::FXX, model->f_xx(0.0, x_ref, p_ref, u_ref)},
      {Surface::FXP, model->f_xp(0.0, x_ref, p_ref, u_ref)},
      {Surface::FPX, model->f_px(0.0, x_ref, p_ref, u_ref)},
      {Surface::FPP, model->f_pp(0.0, x_ref, p_ref, u_ref)},
      {Surface::CXX, model->c_xx(0.0, x_ref, p_ref, u_ref)},
      {Surface::CXP, model->c_xp(0.0, x_ref, p_ref, u_ref)},
      {Surface::CPX, model->c_px(0.0, x_ref, p_ref, u_ref)},
      {Surface::CPP, model->c_pp(0.0, x_ref, p_ref, u_ref)},
  };

  int missed = 0;
  *total = 0;
  for (const auto& [surface, probe] : probes) {
    for (Index i = 0; i < probe.d1(); ++i) {
      for (Index j = 0; j < probe.d2(); ++j) {
        for (Index k = 0; k < probe.d3(); ++k) {
          if (probe(i, j, k) == 0.0) continue;
          ++*total;
          auto mutant = std::make_shared<MutantModel>(model, surface, i, j, k);
          const CheckReport report = run_all_checks(mutant, data, seed);
          if (report.all_passed()) ++missed;
        }
      }
    }
  }
  return missed;
}

/// One-state quadratic drift: trajectories from the upper end of the state
/// box blow up in finite time, so cost-level checks abort at every point.
class FiniteEscape final : public DynamicsModel {
 public:
  ModelDims dims() const override { return {1, 1, 1}; }
  EvalDomain domain() const override {
    EvalDomain box;
    box.x_lo = Vec::Constant(1, 2.0);
    box.x_hi = Vec::Constant(1, 4.0);
    box.p_lo = Vec::Constant(1, 1.0);
    box.p_hi = Vec::Constant(1, 2.0);
    return box;
  }
  Vec f(double, const Vec& x, const Vec& p, double) const override {
    return Vec::Constant(1, p[0] * x[0] * x[0]);
  }
  Vec c(double, const Vec& x, const Vec&, double) const override { return x; }
  Mat f_x(double, const Vec& x, const Vec& p, double) const override {
    return Mat::Constant(1, 1, 2.0 * p[0] * x[0]);
  }
  Mat f_p(double, const Vec& x, const Vec&, double) const override {
    return Mat::Constant(1, 1, x[0] * x[0]);
  }
  Tens3 f_xx(double, const Vec&, const Vec& p, double) const override {
    Tens3 t(1, 1, 1);
    t(0, 0, 0) = 2.0 * p[0];
    return t;
  }
  Tens3 f_xp(double, const Vec& x, const Vec&, double) const override {
    Tens3 t(1, 1, 1);
    t(0, 0, 0) = 2.0 * x[0];
    return t;
  }
  Tens3 f_px(double, const Vec& x, const Vec&, double) const override {
    Tens3 t(1, 1, 1);
    t(0, 0, 0) = 2.0 * x[0];
    return t;
  }
  Tens3 f_pp(double, const Vec&, const Vec&, double) const override { return Tens3(1, 1, 1); }
  Mat c_x(double, const Vec&, const Vec&, double) const override { return Mat::Identity(1, 1); }
  Mat c_p(double, const Vec&, const Vec&, double) const override { return Mat::Zero(1, 1); }
  Tens3 c_xx(double, const Vec&, const Vec&, double) const override { return Tens3(1, 1, 1); }
  Tens3 c_xp(double, const Vec&, const Vec&, double) const override { return Tens3(1, 1, 1); }
  Tens3 c_px(double, const Vec&, const Vec&, double) const override { return Tens3(1, 1, 1); }
  Tens3 c_pp(double, const Vec&, const Vec&, double) const override { return Tens3(1, 1, 1); }
};

}  // namespace

TEST_CASE("all checks pass on the two-tank model at default tolerances") {
  const CheckReport report = run_all_checks(tank_check_scenario(), 91);

  REQUIRE(report.checks.size() == check_names().size());
  for (std::size_t i = 0; i < check_names().size(); ++i) {
    CAPTURE(report.checks[i].name);
    CAPTURE(report.checks[i].max_error);
    CHECK(report.checks[i].name == check_names()[i]);
    CHECK(report.checks[i].passed);
    CHECK(report.checks[i].passed == (report.checks[i].max_error <= report.checks[i].tolerance));
    CHECK(report.checks[i].points == 10);
    CHECK(report.checks[i].note.empty());
  }
  CHECK(report.all_passed());
  CHECK(report.failures() == 0);
  CHECK(report.seed == 91);
}

TEST_CASE("all checks pass on the oscillator despite six-decade parameter scales") {
  const CheckReport report = run_all_checks(oscillator_check_scenario(), 92);
  for (const CheckResult& c : report.checks) {
    CAPTURE(c.name);
    CAPTURE(c.max_error);
    CHECK(c.passed);
  }
  CHECK(report.all_passed());
}

TEST_CASE("reports are reproducible bit-for-bit from model, seed, and tolerances") {
  const SyntheticScenario scenario = tank_check_scenario();
  const CheckReport a = run_all_checks(scenario, 5);
  const CheckReport b = run_all_checks(scenario, 5);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].name == b.checks[i].name);
    CHECK(a.checks[i].max_error == b.checks[i].max_error); // exact, not approximate
    CHECK(a.checks[i].passed == b.checks[i].passed);
  }

  // A different seed draws different points, which moves the measured errors.
  const CheckReport c = run_all_checks(scenario, 6);
  bool any_differs = false;
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    if (a.checks[i].max_error != c.checks[i].max_error) any_differs = true;
  }
  CHECK(any_differs);
}

TEST_CASE("linear model second-order checks sit at the FD noise floor") {
  SyntheticScenario scenario;
  scenario.model = std::make_shared<AffineModel>();
  scenario.x0_true = Vec(2);
  scenario.x0_true << 0.2, -0.1;
  scenario.p_true = Vec(2);
  scenario.p_true << 1.0, 0.5;
  scenario.input = InputSignal::constant(0.4);
  scenario.times = {0.0, 0.4, 0.8, 1.2, 1.6, 2.0};

  const CheckReport report = run_all_checks(scenario, 17);
  CHECK(report.all_passed());
  // The true rank-3 tensors vanish for affine dynamics, so the measured
  // transition errors are pure FD noise.
  const CheckResult* second = report.find("transition tensors: second order vs FD");
  REQUIRE(second != nullptr);
  CHECK(second->max_error <= 1e-8);
  const CheckResult* phi1 = report.find("Phi1 trailing-pair symmetry");
  REQUIRE(phi1 != nullptr);
  CHECK(phi1->max_error == 0.0);
}

TEST_CASE("integration failures become report entries instead of exceptions") {
  auto model = std::make_shared<FiniteEscape>();
  // Escape time from the box is at most 1/(p x0) <= 0.5, so a horizon of 0.6
  // aborts the trajectory at every evaluation point.
  Dataset data;
  data.times = {0.0, 0.6};
  data.observations = Mat::Zero(2, 1);
  data.input = InputSignal::constant(0.0);

  CheckReport report;
  REQUIRE_NOTHROW(report = run_all_checks(model, data, 3));
  CHECK(!report.all_passed());

  // Pointwise partial checks are untouched by the blow-up...
  const CheckResult* partials = report.find("model partials: second order vs FD");
  REQUIRE(partials != nullptr);
  CHECK(partials->passed);
  // ...but everything that integrates the full horizon records the abort.
  const CheckResult* grad = report.find("cost gradient vs FD of cost");
  REQUIRE(grad != nullptr);
  CHECK(!grad->passed);
  CHECK(!grad->note.empty());
  CHECK(std::isinf(grad->max_error));
}

TEST_CASE("structurally invalid inputs still throw") {
  CHECK_THROWS_AS(run_all_checks(nullptr, Dataset{}, 0), ConfigError);

  auto model = std::make_shared<TwoTankModel>();
  Dataset bad;
  bad.times = {0.0, 5.0};
  bad.observations = Mat::Zero(2, 3); // wrong output count
  bad.input = InputSignal::constant(1.0);
  CHECK_THROWS_AS(run_all_checks(model, bad, 0), Error);
}

TEST_CASE("custom tolerances change the verdict, not the measurements") {
  const SyntheticScenario scenario = tank_check_scenario();
  CheckTolerances absurd;
  absurd.first_order = 1e-300;
  absurd.second_order = 1e-300;
  absurd.symmetry = 1e-300;
  const CheckReport strict = run_all_checks(scenario, 91, absurd);
  const CheckReport loose = run_all_checks(scenario, 91);
  REQUIRE(strict.checks.size() == loose.checks.size());
  bool any_failed = false;
  for (std::size_t i = 0; i < strict.checks.size(); ++i) {
    CHECK(strict.checks[i].max_error == loose.checks[i].max_error);
    if (!strict.checks[i].passed) any_failed = true;
  }
  CHECK(any_failed); // finite FD noise can never meet an impossible tolerance
}

TEST_CASE("sign flips in two-tank second derivatives are always caught") {
  const SyntheticScenario scenario = tank_check_scenario();
  const Dataset data = generate_synthetic(scenario);

  Vec x_ref(2);
  x_ref << 0.4, 0.7;
  Vec p_ref(4);
  p_ref << 0.045, 0.045, 0.045, 0.045;

  int total = 0;
  const int missed =
      undetected_mutants(scenario.model, data, x_ref, p_ref, 1.0, 91, &total);
  CHECK(total == 9); // three nonzero entries in each of f_xx, f_xp, f_px
  CHECK(missed == 0);
}

TEST_CASE("sign flips in oscillator second derivatives are always caught") {
  const SyntheticScenario scenario = oscillator_check_scenario();
  const Dataset data = generate_synthetic(scenario);

  Vec x_ref(2);
  x_ref << 0.05, -0.1;
  Vec p_ref(4);
  p_ref << 5.1025e-6, 2.15e-4, 0.968, 3.976;

  int total = 0;
  const int missed =
      undetected_mutants(scenario.model, data, x_ref, p_ref, 0.05, 92, &total);
  // f_xx has one nonzero entry, f_xp and f_px five each, f_pp seven.
  CHECK(total == 18);
  CHECK(missed == 0);
}
