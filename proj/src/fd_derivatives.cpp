#include "greybox/fd_derivatives.hpp"

#include <functional>

namespace greybox {

namespace {

void require_finite(const Vec& v, const char* what, Index coord) {
  if (!v.allFinite()) {
    throw NumericalError(std::string("finite differences: non-finite ") + what +
                         " while bumping coordinate " + std::to_string(coord));
  }
}

double step_for(double scale, double coord, const Vec& floor, Index j) {
  const double base = (j < floor.size()) ? floor[j] : 1.0;
  return scale * std::max(base, std::abs(coord));
}

/// Central difference of a vector-valued function along x, column j = d/dx_j.
Mat central_wrt_x(const std::function<Vec(const Vec&, const Vec&)>& fn, const Vec& x, const Vec& p,
                  Index out_dim, double scale, const Vec& floor) {
  Mat jac(out_dim, x.size());
  Vec xb = x;
  for (Index j = 0; j < x.size(); ++j) {
    const double h = step_for(scale, x[j], floor, j);
    const double orig = xb[j];
    xb[j] = orig + h;
    const Vec hi = fn(xb, p);
    require_finite(hi, "evaluation", j);
    xb[j] = orig - h;
    const Vec lo = fn(xb, p);
    require_finite(lo, "evaluation", j);
    xb[j] = orig;
    jac.col(j) = (hi - lo) / (2.0 * h);
  }
  return jac;
}

Mat central_wrt_p(const std::function<Vec(const Vec&, const Vec&)>& fn, const Vec& x, const Vec& p,
                  Index out_dim, double scale, const Vec& floor) {
  Mat jac(out_dim, p.size());
  Vec pb = p;
  for (Index j = 0; j < p.size(); ++j) {
    const double h = step_for(scale, p[j], floor, j);
    const double orig = pb[j];
    pb[j] = orig + h;
    const Vec hi = fn(x, pb);
    require_finite(hi, "evaluation", j);
    pb[j] = orig - h;
    const Vec lo = fn(x, pb);
    require_finite(lo, "evaluation", j);
    pb[j] = orig;
    jac.col(j) = (hi - lo) / (2.0 * h);
  }
  return jac;
}

/// Central difference of a matrix-valued function: T(:, :, k) = dM/dv_k.
template <class MatFn>
Tens3 central_of_matrix(const MatFn& fn, Vec v, Index rows, Index cols, double scale,
                        const Vec& floor) {
  Tens3 t(rows, cols, v.size());
  for (Index k = 0; k < v.size(); ++k) {
    const double h = step_for(scale, v[k], floor, k);
    const double orig = v[k];
    v[k] = orig + h;
    const Mat hi = fn(v);
    v[k] = orig - h;
    const Mat lo = fn(v);
    v[k] = orig;
    if (!hi.allFinite() || !lo.allFinite()) {
      throw NumericalError("finite differences: non-finite first-derivative stencil while "
                           "bumping coordinate " +
                           std::to_string(k));
    }
    const Mat d = (hi - lo) / (2.0 * h);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) t(i, j, k) = d(i, j);
    }
  }
  return t;
}

/// Half-widths of a declared plausible box, falling back to 1 where the box
/// is missing or degenerate.
Vec box_half_widths(const Vec& lo, const Vec& hi, Index size) {
  Vec floor = Vec::Ones(size);
  if (lo.size() == size && hi.size() == size) {
    for (Index i = 0; i < size; ++i) {
      const double w = 0.5 * std::abs(hi[i] - lo[i]);
      if (w > 0.0 && std::isfinite(w)) floor[i] = w;
    }
  }
  return floor;
}

}  // namespace

FdDerivatives::FdDerivatives(std::shared_ptr<const BasicDynamics> inner, FdSteps steps)
    : inner_(std::move(inner)), steps_(steps) {
  if (!inner_) throw Error("FdDerivatives: null model");
  if (!(steps_.first > 0.0) || !(steps_.second > 0.0)) {
    throw Error("FdDerivatives: step scales must be positive");
  }
  const ModelDims d = inner_->dims();
  const EvalDomain box = inner_->domain();
  x_floor_ = box_half_widths(box.x_lo, box.x_hi, d.n_states);
  p_floor_ = box_half_widths(box.p_lo, box.p_hi, d.n_params);
}

Vec FdDerivatives::f(double t, const Vec& x, const Vec& p, double u) const {
  return inner_->f(t, x, p, u);
}

Vec FdDerivatives::c(double t, const Vec& x, const Vec& p, double u) const {
  return inner_->c(t, x, p, u);
}

Mat FdDerivatives::f_x(double t, const Vec& x, const Vec& p, double u) const {
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->f(t, xx, pp, u); };
  return central_wrt_x(fn, x, p, dims().n_states, steps_.first, x_floor_);
}

Mat FdDerivatives::f_p(double t, const Vec& x, const Vec& p, double u) const {
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->f(t, xx, pp, u); };
  return central_wrt_p(fn, x, p, dims().n_states, steps_.first, p_floor_);
}

Mat FdDerivatives::c_x(double t, const Vec& x, const Vec& p, double u) const {
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->c(t, xx, pp, u); };
  return central_wrt_x(fn, x, p, dims().n_outputs, steps_.first, x_floor_);
}

Mat FdDerivatives::c_p(double t, const Vec& x, const Vec& p, double u) const {
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->c(t, xx, pp, u); };
  return central_wrt_p(fn, x, p, dims().n_outputs, steps_.first, p_floor_);
}

Tens3 FdDerivatives::f_xx(double t, const Vec& x, const Vec& p, double u) const {
  const ModelDims d = dims();
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->f(t, xx, pp, u); };
  const auto jac = [&](const Vec& xb) {
    return central_wrt_x(fn, xb, p, d.n_states, steps_.second, x_floor_);
  };
  return central_of_matrix(jac, x, d.n_states, d.n_states, steps_.second, x_floor_);
}

Tens3 FdDerivatives::f_xp(double t, const Vec& x, const Vec& p, double u) const {
  // d/dp_k of f_x, laid out (i, m, k).
  const ModelDims d = dims();
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->f(t, xx, pp, u); };
  const auto jac = [&](const Vec& pb) {
    return central_wrt_x(fn, x, pb, d.n_states, steps_.second, x_floor_);
  };
  return central_of_matrix(jac, p, d.n_states, d.n_states, steps_.second, p_floor_);
}

Tens3 FdDerivatives::f_px(double t, const Vec& x, const Vec& p, double u) const {
  // d/dx_m of f_p gives (i, j2, m) after reordering.
  const ModelDims d = dims();
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->f(t, xx, pp, u); };
  const auto jac = [&](const Vec& xb) {
    return central_wrt_p(fn, xb, p, d.n_states, steps_.second, p_floor_);
  };
  return central_of_matrix(jac, x, d.n_states, d.n_params, steps_.second, x_floor_);
}

Tens3 FdDerivatives::f_pp(double t, const Vec& x, const Vec& p, double u) const {
  const ModelDims d = dims();
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->f(t, xx, pp, u); };
  const auto jac = [&](const Vec& pb) {
    return central_wrt_p(fn, x, pb, d.n_states, steps_.second, p_floor_);
  };
  return central_of_matrix(jac, p, d.n_states, d.n_params, steps_.second, p_floor_);
}

Tens3 FdDerivatives::c_xx(double t, const Vec& x, const Vec& p, double u) const {
  const ModelDims d = dims();
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->c(t, xx, pp, u); };
  const auto jac = [&](const Vec& xb) {
    return central_wrt_x(fn, xb, p, d.n_outputs, steps_.second, x_floor_);
  };
  return central_of_matrix(jac, x, d.n_outputs, d.n_states, steps_.second, x_floor_);
}

Tens3 FdDerivatives::c_xp(double t, const Vec& x, const Vec& p, double u) const {
  const ModelDims d = dims();
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->c(t, xx, pp, u); };
  const auto jac = [&](const Vec& pb) {
    return central_wrt_x(fn, x, pb, d.n_outputs, steps_.second, x_floor_);
  };
  return central_of_matrix(jac, p, d.n_outputs, d.n_states, steps_.second, p_floor_);
}

Tens3 FdDerivatives::c_px(double t, const Vec& x, const Vec& p, double u) const {
  const ModelDims d = dims();
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->c(t, xx, pp, u); };
  const auto jac = [&](const Vec& xb) {
    return central_wrt_p(fn, xb, p, d.n_outputs, steps_.second, p_floor_);
  };
  return central_of_matrix(jac, x, d.n_outputs, d.n_params, steps_.second, x_floor_);
}

Tens3 FdDerivatives::c_pp(double t, const Vec& x, const Vec& p, double u) const {
  const ModelDims d = dims();
  const auto fn = [&](const Vec& xx, const Vec& pp) { return inner_->c(t, xx, pp, u); };
  const auto jac = [&](const Vec& pb) {
    return central_wrt_p(fn, x, pb, d.n_outputs, steps_.second, p_floor_);
  };
  return central_of_matrix(jac, p, d.n_outputs, d.n_params, steps_.second, p_floor_);
}

std::shared_ptr<FdDerivatives> fd_fill_derivatives(std::shared_ptr<const BasicDynamics> model,
                                                   double step) {
  if (!(step > 0.0)) throw Error("fd_fill_derivatives: step must be positive");
  FdSteps steps;
  steps.first = step;
  return std::make_shared<FdDerivatives>(std::move(model), steps);
}

std::shared_ptr<FdDerivatives> fd_fill_derivatives(std::shared_ptr<const BasicDynamics> model) {
  return std::make_shared<FdDerivatives>(std::move(model));
}

void validate_model_shapes(const DynamicsModel& model, double t, const Vec& x, const Vec& p,
                           double u) {
  const ModelDims d = model.dims();
  d.validate();
  const Index n = d.n_states, m = d.n_params, s = d.n_outputs;
  shape_check::require("f", model.f(t, x, p, u).size(), 1, n, 1);
  shape_check::require("c", model.c(t, x, p, u).size(), 1, s, 1);
  const Mat fx = model.f_x(t, x, p, u);
  shape_check::require("f_x", fx.rows(), fx.cols(), n, n);
  const Mat fp = model.f_p(t, x, p, u);
  shape_check::require("f_p", fp.rows(), fp.cols(), n, m);
  shape_check::require("f_xx", model.f_xx(t, x, p, u), n, n, n);
  shape_check::require("f_xp", model.f_xp(t, x, p, u), n, n, m);
  shape_check::require("f_px", model.f_px(t, x, p, u), n, m, n);
  shape_check::require("f_pp", model.f_pp(t, x, p, u), n, m, m);
  const Mat cx = model.c_x(t, x, p, u);
  shape_check::require("c_x", cx.rows(), cx.cols(), s, n);
  const Mat cp = model.c_p(t, x, p, u);
  shape_check::require("c_p", cp.rows(), cp.cols(), s, m);
  shape_check::require("c_xx", model.c_xx(t, x, p, u), s, n, n);
  shape_check::require("c_xp", model.c_xp(t, x, p, u), s, n, m);
  shape_check::require("c_px", model.c_px(t, x, p, u), s, m, n);
  shape_check::require("c_pp", model.c_pp(t, x, p, u), s, m, m);
}

}  // namespace greybox
