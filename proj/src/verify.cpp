#include "greybox/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "greybox/cost.hpp"
#include "greybox/fd_derivatives.hpp"
#include "greybox/sensitivity.hpp"
#include "greybox/tensor.hpp"

namespace greybox {

bool CheckReport::all_passed() const {
  for (const CheckResult& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

int CheckReport::failures() const {
  int n = 0;
  for (const CheckResult& c : checks) {
    if (!c.passed) ++n;
  }
  return n;
}

const CheckResult* CheckReport::find(std::string_view name) const {
  for (const CheckResult& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

constexpr int kPoints = 10;
/// Finite-difference bump for the re-integrated transition check. The check
/// runs on a rescaled shadow system whose coordinates are all of order one,
/// so one bump suits every model regardless of its native scales.
constexpr double kTransitionBump = 1e-6;
/// Transition and tensor-symmetry checks integrate over at most this many
/// sampling intervals; local derivative agreement does not improve with
/// horizon length, while cost checks always use the full dataset.
constexpr std::size_t kTransitionCap = 12;

Vec half_widths(const Vec& lo, const Vec& hi) {
  Vec w(lo.size());
  for (Index i = 0; i < lo.size(); ++i) {
    const double h = 0.5 * (hi[i] - lo[i]);
    w[i] = h > 0.0 ? h : 1.0;
  }
  return w;
}

/// Draws from the middle 80% of a box, keeping FD stencils and short
/// trajectories away from the boundary (and any clamp region beyond it).
Vec draw_interior(Rng& rng, const Vec& lo, const Vec& hi) {
  Vec v(lo.size());
  for (Index i = 0; i < lo.size(); ++i) {
    const double w = hi[i] - lo[i];
    v[i] = rng.uniform(lo[i] + 0.1 * w, hi[i] - 0.1 * w);
  }
  return v;
}

/// One named check being accumulated across evaluation points.
struct Gauge {
  std::string name;
  double tolerance = 0.0;
  double err = 0.0;
  std::string note;

  Gauge(std::string n, double tol) : name(std::move(n)), tolerance(tol) {}

  void absorb(double e) { err = std::max(err, e); }
  void fail(const std::string& why) {
    err = std::numeric_limits<double>::infinity();
    if (note.empty()) note = why;
  }
  CheckResult finish(int points) const {
    CheckResult r;
    r.name = name;
    r.max_error = err;
    r.tolerance = tolerance;
    r.passed = err <= tolerance;
    r.points = points;
    r.note = note;
    return r;
  }
};

/// Worst entry gap between two matrices, measured in scaled units: the
/// difference in entry (i, j) is multiplied by the scale of differentiation
/// direction j and divided by the scale of function component i.
double scaled_mat_gap(const Mat& a, const Mat& b, const Vec& fun_scale, const Vec& dir_scale) {
  double worst = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) * dir_scale[j] / fun_scale[i]);
    }
  }
  return worst;
}

double scaled_tens_gap(const Tens3& a, const Tens3& b, const Vec& fun_scale, const Vec& mid_scale,
                       const Vec& last_scale) {
  double worst = 0.0;
  for (Index i = 0; i < a.d1(); ++i) {
    for (Index j = 0; j < a.d2(); ++j) {
      for (Index k = 0; k < a.d3(); ++k) {
        worst = std::max(worst, std::abs(a(i, j, k) - b(i, j, k)) * mid_scale[j] * last_scale[k] /
                                    fun_scale[i]);
      }
    }
  }
  return worst;
}

/// Trailing-pair asymmetry of a rank-3 tensor, relative to its own size.
double trailing_pair_asymmetry(const Tens3& t) {
  double worst = 0.0;
  for (Index i = 0; i < t.d1(); ++i) {
    for (Index j = 0; j < t.d2(); ++j) {
      for (Index k = 0; k < t.d3(); ++k) {
        worst = std::max(worst, std::abs(t(i, j, k) - t(i, k, j)));
      }
    }
  }
  return worst / std::max(1.0, t.max_abs());
}

double chi_duality_gap(const Tens3& chi1, const Tens3& chi2) {
  double worst = 0.0;
  for (Index i = 0; i < chi2.d1(); ++i) {
    for (Index j = 0; j < chi2.d2(); ++j) {
      for (Index k = 0; k < chi2.d3(); ++k) {
        worst = std::max(worst, std::abs(chi2(i, j, k) - chi1(i, k, j)));
      }
    }
  }
  return worst / std::max(1.0, chi1.max_abs());
}

/// Exact diagonal reparametrization x = Dx x~, p = Dp p~ of a wrapped model:
/// with every shadow coordinate of order one, the re-integrated transition
/// check can use a single bump size without either truncation (bumps too
/// coarse for 1e-6-sized coordinates) or round-off (bumps too fine for
/// order-one ones) taking over. The change of variables is exact, so the
/// shadow's transition tensors are correct iff the wrapped model's are.
class ScaledShadow final : public DynamicsModel {
 public:
  ScaledShadow(std::shared_ptr<const DynamicsModel> inner, Vec dx, Vec dp)
      : inner_(std::move(inner)), dx_(std::move(dx)), dp_(std::move(dp)) {}

  ModelDims dims() const override { return inner_->dims(); }
  std::uint64_t clamp_events() const override { return inner_->clamp_events(); }
  EvalDomain domain() const override {
    EvalDomain box = inner_->domain();
    box.x_lo = box.x_lo.cwiseQuotient(dx_);
    box.x_hi = box.x_hi.cwiseQuotient(dx_);
    box.p_lo = box.p_lo.cwiseQuotient(dp_);
    box.p_hi = box.p_hi.cwiseQuotient(dp_);
    return box;
  }

  Vec f(double t, const Vec& x, const Vec& p, double u) const override {
    return inner_->f(t, raw_x(x), raw_p(p), u).cwiseQuotient(dx_);
  }
  Vec c(double t, const Vec& x, const Vec& p, double u) const override {
    return inner_->c(t, raw_x(x), raw_p(p), u);
  }
  Mat f_x(double t, const Vec& x, const Vec& p, double u) const override {
    return dx_.cwiseInverse().asDiagonal() * inner_->f_x(t, raw_x(x), raw_p(p), u) *
           dx_.asDiagonal();
  }
  Mat f_p(double t, const Vec& x, const Vec& p, double u) const override {
    return dx_.cwiseInverse().asDiagonal() * inner_->f_p(t, raw_x(x), raw_p(p), u) *
           dp_.asDiagonal();
  }
  Tens3 f_xx(double t, const Vec& x, const Vec& p, double u) const override {
    return rescale(inner_->f_xx(t, raw_x(x), raw_p(p), u), dx_, dx_, true);
  }
  Tens3 f_xp(double t, const Vec& x, const Vec& p, double u) const override {
    return rescale(inner_->f_xp(t, raw_x(x), raw_p(p), u), dx_, dp_, true);
  }
  Tens3 f_px(double t, const Vec& x, const Vec& p, double u) const override {
    return rescale(inner_->f_px(t, raw_x(x), raw_p(p), u), dp_, dx_, true);
  }
  Tens3 f_pp(double t, const Vec& x, const Vec& p, double u) const override {
    return rescale(inner_->f_pp(t, raw_x(x), raw_p(p), u), dp_, dp_, true);
  }
  Mat c_x(double t, const Vec& x, const Vec& p, double u) const override {
    return inner_->c_x(t, raw_x(x), raw_p(p), u) * dx_.asDiagonal();
  }
  Mat c_p(double t, const Vec& x, const Vec& p, double u) const override {
    return inner_->c_p(t, raw_x(x), raw_p(p), u) * dp_.asDiagonal();
  }
  Tens3 c_xx(double t, const Vec& x, const Vec& p, double u) const override {
    return rescale(inner_->c_xx(t, raw_x(x), raw_p(p), u), dx_, dx_, false);
  }
  Tens3 c_xp(double t, const Vec& x, const Vec& p, double u) const override {
    return rescale(inner_->c_xp(t, raw_x(x), raw_p(p), u), dx_, dp_, false);
  }
  Tens3 c_px(double t, const Vec& x, const Vec& p, double u) const override {
    return rescale(inner_->c_px(t, raw_x(x), raw_p(p), u), dp_, dx_, false);
  }
  Tens3 c_pp(double t, const Vec& x, const Vec& p, double u) const override {
    return rescale(inner_->c_pp(t, raw_x(x), raw_p(p), u), dp_, dp_, false);
  }

 private:
  Vec raw_x(const Vec& x) const { return x.cwiseProduct(dx_); }
  Vec raw_p(const Vec& p) const { return p.cwiseProduct(dp_); }

  Tens3 rescale(Tens3 t, const Vec& mid, const Vec& last, bool divide_rows) const {
    for (Index i = 0; i < t.d1(); ++i) {
      const double row = divide_rows ? dx_[i] : 1.0;
      for (Index j = 0; j < t.d2(); ++j) {
        for (Index k = 0; k < t.d3(); ++k) {
          t(i, j, k) *= mid[j] * last[k] / row;
        }
      }
    }
    return t;
  }

  std::shared_ptr<const DynamicsModel> inner_;
  Vec dx_;
  Vec dp_;
};

}  // namespace

CheckReport run_all_checks(std::shared_ptr<const DynamicsModel> model, const Dataset& dataset,
                           std::uint64_t seed, const CheckTolerances& tolerances) {
  if (model == nullptr) throw ConfigError("run_all_checks: no model");
  const ModelDims dims = model->dims();
  dims.validate();
  dataset.validate(dims.n_outputs);

  const EvalDomain box = model->domain();
  const Vec x_floor = half_widths(box.x_lo, box.x_hi);
  const Vec p_floor = half_widths(box.p_lo, box.p_hi);
  const auto oracle = fd_fill_derivatives(model);

  Gauge partials_first("model partials: first order vs FD", tolerances.first_order);
  Gauge partials_second("model partials: second order vs FD", tolerances.second_order);
  Gauge transition_first("transition tensors: first order vs FD", tolerances.first_order);
  Gauge transition_second("transition tensors: second order vs FD", tolerances.second_order);
  Gauge grad_check("cost gradient vs FD of cost", tolerances.first_order);
  Gauge hess_check("cost Hessian vs FD of gradient", tolerances.second_order);
  Gauge hess_sym("Hessian symmetry", tolerances.symmetry);
  Gauge phi1_sym("Phi1 trailing-pair symmetry", tolerances.symmetry);
  Gauge theta1_sym("Theta1 trailing-pair symmetry", tolerances.symmetry);
  Gauge chi_dual("chi2 duality with chi1", tolerances.symmetry);

  Rng rng(seed);
  const IntegratorConfig icfg;
  const std::size_t last = dataset.times.size() - 1;
  const std::size_t tcap = std::min(last, kTransitionCap);
  const std::vector<double> short_times(dataset.times.begin(),
                                        dataset.times.begin() + static_cast<std::ptrdiff_t>(tcap) + 1);
  const double fd_step = std::cbrt(std::numeric_limits<double>::epsilon());

  for (int pt = 0; pt < kPoints; ++pt) {
    const Vec x0 = draw_interior(rng, box.x_lo, box.x_hi);
    const Vec p = draw_interior(rng, box.p_lo, box.p_hi);
    const double u_span = box.u_hi - box.u_lo;
    const double u = rng.uniform(box.u_lo + 0.1 * u_span, box.u_hi - 0.1 * u_span);
    const double t = dataset.times.front();

    // Per-coordinate scales: the coordinate itself, floored by the plausible
    // half-width, so scaled differences are commensurate across six decades.
    Vec sx(dims.n_states), sp(dims.n_params);
    for (Index i = 0; i < dims.n_states; ++i) sx[i] = std::max(std::abs(x0[i]), x_floor[i]);
    for (Index i = 0; i < dims.n_params; ++i) sp[i] = std::max(std::abs(p[i]), p_floor[i]);

    // --- model partials against the FD oracle ------------------------------
    try {
      Vec ff(dims.n_states), cf(dims.n_outputs);
      const Vec f0 = model->f(t, x0, p, u);
      const Vec c0 = model->c(t, x0, p, u);
      for (Index i = 0; i < dims.n_states; ++i) ff[i] = std::max(1.0, std::abs(f0[i]));
      for (Index i = 0; i < dims.n_outputs; ++i) cf[i] = std::max(1.0, std::abs(c0[i]));

      partials_first.absorb(scaled_mat_gap(model->f_x(t, x0, p, u), oracle->f_x(t, x0, p, u), ff, sx));
      partials_first.absorb(scaled_mat_gap(model->f_p(t, x0, p, u), oracle->f_p(t, x0, p, u), ff, sp));
      partials_first.absorb(scaled_mat_gap(model->c_x(t, x0, p, u), oracle->c_x(t, x0, p, u), cf, sx));
      partials_first.absorb(scaled_mat_gap(model->c_p(t, x0, p, u), oracle->c_p(t, x0, p, u), cf, sp));

      partials_second.absorb(
          scaled_tens_gap(model->f_xx(t, x0, p, u), oracle->f_xx(t, x0, p, u), ff, sx, sx));
      partials_second.absorb(
          scaled_tens_gap(model->f_xp(t, x0, p, u), oracle->f_xp(t, x0, p, u), ff, sx, sp));
      partials_second.absorb(
          scaled_tens_gap(model->f_px(t, x0, p, u), oracle->f_px(t, x0, p, u), ff, sp, sx));
      partials_second.absorb(
          scaled_tens_gap(model->f_pp(t, x0, p, u), oracle->f_pp(t, x0, p, u), ff, sp, sp));
      partials_second.absorb(
          scaled_tens_gap(model->c_xx(t, x0, p, u), oracle->c_xx(t, x0, p, u), cf, sx, sx));
      partials_second.absorb(
          scaled_tens_gap(model->c_xp(t, x0, p, u), oracle->c_xp(t, x0, p, u), cf, sx, sp));
      partials_second.absorb(
          scaled_tens_gap(model->c_px(t, x0, p, u), oracle->c_px(t, x0, p, u), cf, sp, sx));
      partials_second.absorb(
          scaled_tens_gap(model->c_pp(t, x0, p, u), oracle->c_pp(t, x0, p, u), cf, sp, sp));
    } catch (const Error& e) {
      partials_first.fail(std::string("point ") + std::to_string(pt) + ": " + e.what());
      partials_second.fail(std::string("point ") + std::to_string(pt) + ": " + e.what());
    }

    // --- transition tensors against re-integrated FD -----------------------
    if (last >= 1) {
      try {
        const ScaledShadow shadow(model, sx, sp);
        const TransitionCheckReport tr =
            fd_transition_check(shadow, Vec(x0.cwiseQuotient(sx)), Vec(p.cwiseQuotient(sp)),
                                dataset.input, dataset.times[tcap], kTransitionBump, icfg);
        transition_first.absorb(tr.worst_first_order());
        transition_second.absorb(tr.worst_second_order());
      } catch (const Error& e) {
        transition_first.fail(std::string("point ") + std::to_string(pt) + ": " + e.what());
        transition_second.fail(std::string("point ") + std::to_string(pt) + ": " + e.what());
      }
    } else {
      transition_first.fail("dataset too short for a transition check");
      transition_second.fail("dataset too short for a transition check");
    }

    // --- cost derivatives over the full dataset ----------------------------
    try {
      const Index n_free = dims.n_states + dims.n_params;
      Vec scale(n_free);
      scale.head(dims.n_states) = sx;
      scale.tail(dims.n_params) = sp;

      const auto unpack = [&](const Vec& scaled) {
        Vec v = scaled.cwiseProduct(scale);
        return std::make_pair(Vec(v.head(dims.n_states)), Vec(v.tail(dims.n_params)));
      };
      Vec v0(n_free);
      v0.head(dims.n_states) = x0;
      v0.tail(dims.n_params) = p;
      const Vec s0 = v0.cwiseQuotient(scale);

      const auto cost_at = [&](const Vec& scaled) {
        const auto [cx0, cp] = unpack(scaled);
        const Trajectory tr = integrate(*model, cx0, cp, dataset.input, dataset.times,
                                        SensitivityOrder::FirstOrder, icfg);
        return evaluate_cost(tr, *model, cp, dataset);
      };
      const auto grad_at = [&](const Vec& scaled) {
        const auto [cx0, cp] = unpack(scaled);
        const Trajectory tr = integrate(*model, cx0, cp, dataset.input, dataset.times,
                                        SensitivityOrder::FirstOrder, icfg);
        const GradientBlocks g = gradient(tr, *model, cp, dataset);
        Vec out(n_free);
        out.head(dims.n_states) = g.x0;
        out.tail(dims.n_params) = g.p;
        return Vec(out.cwiseProduct(scale)); // chain rule: d/d(scaled) = scale * d/d(raw)
      };

      // Analytic gradient and Hessian (scaled), plus the trajectory whose
      // integrated tensors feed the structural symmetry checks.
      const Trajectory traj = integrate(*model, x0, p, dataset.input, short_times,
                                        SensitivityOrder::SecondOrder, icfg);
      for (const AugmentedState& st : traj.states) {
        phi1_sym.absorb(trailing_pair_asymmetry(st.phi1));
        theta1_sym.absorb(trailing_pair_asymmetry(st.theta1));
        chi_dual.absorb(chi_duality_gap(st.chi1, st.chi2));
      }

      const Trajectory full = integrate(*model, x0, p, dataset.input, dataset.times,
                                        SensitivityOrder::SecondOrder, icfg);
      const CostReport rep = cost_report(full, *model, p, dataset);
      Vec g_analytic(n_free);
      g_analytic.head(dims.n_states) = rep.grad_x0;
      g_analytic.tail(dims.n_params) = rep.grad_p;
      g_analytic = g_analytic.cwiseProduct(scale);
      Mat h_analytic = rep.full_hessian();
      h_analytic = scale.asDiagonal() * h_analytic * scale.asDiagonal();

      hess_sym.absorb((h_analytic - h_analytic.transpose()).cwiseAbs().maxCoeff() /
                      std::max(1.0, h_analytic.cwiseAbs().maxCoeff()));

      Vec g_fd(n_free);
      Mat h_fd(n_free, n_free);
      for (Index i = 0; i < n_free; ++i) {
        const double h = fd_step * std::max(1.0, std::abs(s0[i]));
        Vec hi = s0, lo = s0;
        hi[i] += h;
        lo[i] -= h;
        g_fd[i] = (cost_at(hi) - cost_at(lo)) / (2.0 * h);
        h_fd.col(i) = (grad_at(hi) - grad_at(lo)) / (2.0 * h);
      }
      grad_check.absorb((g_analytic - g_fd).cwiseAbs().maxCoeff() /
                        std::max(1.0, g_analytic.cwiseAbs().maxCoeff()));
      hess_check.absorb((h_analytic - h_fd).cwiseAbs().maxCoeff() /
                        std::max(1.0, h_analytic.cwiseAbs().maxCoeff()));
    } catch (const Error& e) {
      const std::string why = std::string("point ") + std::to_string(pt) + ": " + e.what();
      grad_check.fail(why);
      hess_check.fail(why);
      hess_sym.fail(why);
      phi1_sym.fail(why);
      theta1_sym.fail(why);
      chi_dual.fail(why);
    }
  }

  CheckReport report;
  report.seed = seed;
  report.tolerances = tolerances;
  report.checks = {
      partials_first.finish(kPoints),   partials_second.finish(kPoints),
      transition_first.finish(kPoints), transition_second.finish(kPoints),
      grad_check.finish(kPoints),       hess_check.finish(kPoints),
      hess_sym.finish(kPoints),         phi1_sym.finish(kPoints),
      theta1_sym.finish(kPoints),       chi_dual.finish(kPoints),
  };
  return report;
}

CheckReport run_all_checks(const SyntheticScenario& scenario, std::uint64_t seed,
                           const CheckTolerances& tolerances) {
  const Dataset dataset = generate_synthetic(scenario);
  return run_all_checks(scenario.model, dataset, seed, tolerances);
}

}  // namespace greybox
