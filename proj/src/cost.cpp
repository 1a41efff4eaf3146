#include "greybox/cost.hpp"

#include <cmath>
#include <string>

namespace greybox {

void Dataset::validate(Index n_outputs) const {
  if (times.empty()) throw DataError("Dataset: no samples");
  if (observations.rows() != samples()) {
    throw DataError("Dataset: " + std::to_string(times.size()) + " sample times vs " +
                    std::to_string(observations.rows()) + " observation rows");
  }
  if (observations.cols() != n_outputs) {
    throw DataError("Dataset: observations have " + std::to_string(observations.cols()) +
                    " columns, model has " + std::to_string(n_outputs) + " outputs");
  }
  for (std::size_t h = 0; h < times.size(); ++h) {
    if (!std::isfinite(times[h])) {
      throw DataError("Dataset: non-finite time at sample " + std::to_string(h));
    }
    if (h > 0 && !(times[h] > times[h - 1])) {
      throw DataError("Dataset: times must be strictly increasing (sample " + std::to_string(h) +
                      ")");
    }
  }
  if (!observations.allFinite()) throw DataError("Dataset: non-finite observation");
  if (input.empty()) throw DataError("Dataset: empty input signal");
  if (times.front() < input.times().front()) {
    throw DataError("Dataset: first sample at t=" + std::to_string(times.front()) +
                    " precedes the input signal start t=" +
                    std::to_string(input.times().front()));
  }
}

Mat CostReport::full_hessian() const {
  const Index n = H_x0x0.rows();
  const Index m = H_pp.rows();
  Mat full(n + m, n + m);
  full.topLeftCorner(n, n) = H_x0x0;
  full.topRightCorner(n, m) = H_x0p;
  full.bottomLeftCorner(m, n) = H_px0;
  full.bottomRightCorner(m, m) = H_pp;
  return full;
}

namespace {

/// Single pass over the trajectory accumulating whichever pieces are asked
/// for. The per-sample terms are independent, so the sums decompose over any
/// partition of the samples.
CostReport accumulate(const Trajectory& traj, const DynamicsModel& model, const Vec& p,
                      const Dataset& dataset, bool want_gradient, bool want_hessian) {
  const ModelDims dims = model.dims();
  dims.validate();
  const Index n = dims.n_states;
  const Index m = dims.n_params;
  const Index s_out = dims.n_outputs;

  if (p.size() != m) {
    throw DimensionError("cost: p has " + std::to_string(p.size()) + " entries, model has " +
                         std::to_string(m) + " parameters");
  }
  if (dataset.observations.cols() != s_out && dataset.samples() > 0) {
    throw DataError("cost: observations have " + std::to_string(dataset.observations.cols()) +
                    " columns, model has " + std::to_string(s_out) + " outputs");
  }
  if (static_cast<Index>(traj.states.size()) != dataset.samples() ||
      dataset.observations.rows() != dataset.samples()) {
    throw DataError("cost: trajectory has " + std::to_string(traj.states.size()) +
                    " states, dataset has " + std::to_string(dataset.times.size()) +
                    " times and " + std::to_string(dataset.observations.rows()) +
                    " observation rows");
  }
  if (want_hessian && traj.order != SensitivityOrder::SecondOrder) {
    throw ConfigError("cost: Hessian assembly needs a SecondOrder trajectory");
  }

  CostReport rep;
  rep.grad_x0 = Vec::Zero(n);
  rep.grad_p = Vec::Zero(m);
  rep.H_x0x0 = Mat::Zero(n, n);
  rep.H_x0p = Mat::Zero(n, m);
  rep.H_px0 = Mat::Zero(m, n);
  rep.H_pp = Mat::Zero(m, m);
  rep.residuals = Mat::Zero(dataset.samples(), s_out);

  for (Index h = 0; h < dataset.samples(); ++h) {
    const AugmentedState& st = traj.states[static_cast<std::size_t>(h)];
    const double t = dataset.times[static_cast<std::size_t>(h)];
    if (st.t != t) {
      throw DataError("cost: trajectory time " + std::to_string(st.t) + " at sample " +
                      std::to_string(h) + " does not match dataset time " + std::to_string(t));
    }
    const double u = dataset.input.value_at(t);
    const Vec y = model.c(t, st.x, p, u);
    shape_check::require("c", y.size(), 1, s_out, 1);
    const Vec r = dataset.observations.row(h).transpose() - y;
    if (!all_finite(r)) {
      throw NumericalError("cost: non-finite residual at t=" + std::to_string(t), t);
    }
    rep.residuals.row(h) = r.transpose();
    rep.J += r.squaredNorm();

    if (!want_gradient && !want_hessian) continue;

    const Mat cx = model.c_x(t, st.x, p, u);
    const Mat cp = model.c_p(t, st.x, p, u);
    shape_check::require("c_x", cx.rows(), cx.cols(), s_out, n);
    shape_check::require("c_p", cp.rows(), cp.cols(), s_out, m);
    const Mat a = cx * st.phi;          // d y / d x0
    const Mat b = cx * st.theta + cp;   // d y / d p

    rep.grad_x0.noalias() -= 2.0 * a.transpose() * r;
    rep.grad_p.noalias() -= 2.0 * b.transpose() * r;

    if (!want_hessian) continue;

    const Tens3 cxx = model.c_xx(t, st.x, p, u);
    const Tens3 cxp = model.c_xp(t, st.x, p, u);
    const Tens3 cpx = model.c_px(t, st.x, p, u);
    const Tens3 cpp = model.c_pp(t, st.x, p, u);
    shape_check::require("c_xx", cxx, s_out, n, n);
    shape_check::require("c_xp", cxp, s_out, n, m);
    shape_check::require("c_px", cpx, s_out, m, n);
    shape_check::require("c_pp", cpp, s_out, m, m);

    const Vec w = cx.transpose() * r;                 // output residual pulled back to states
    const Mat w_xx = tens3_weight_first(r, cxx);      // n x n
    const Mat w_xp = tens3_weight_first(r, cxp);      // n x m
    const Mat w_px = tens3_weight_first(r, cpx);      // m x n
    const Mat w_pp = tens3_weight_first(r, cpp);      // m x m

    rep.H_x0x0 += -2.0 * (tens3_weight_first(w, st.phi1) + st.phi.transpose() * w_xx * st.phi) +
                  2.0 * a.transpose() * a;
    rep.H_x0p += -2.0 * (tens3_weight_first(w, st.chi1) + st.phi.transpose() * w_xp +
                         st.phi.transpose() * w_xx * st.theta) +
                 2.0 * a.transpose() * b;
    rep.H_px0 += -2.0 * (tens3_weight_first(w, st.chi2) + st.theta.transpose() * w_xx * st.phi +
                         w_px * st.phi) +
                 2.0 * b.transpose() * a;
    rep.H_pp += -2.0 * (tens3_weight_first(w, st.theta1) + st.theta.transpose() * w_xx * st.theta +
                        st.theta.transpose() * w_xp + w_px * st.theta + w_pp) +
                2.0 * b.transpose() * b;
  }
  return rep;
}

}  // namespace

double evaluate_cost(const Trajectory& traj, const DynamicsModel& model, const Vec& p,
                     const Dataset& dataset, Mat* residuals) {
  const CostReport rep = accumulate(traj, model, p, dataset, false, false);
  if (residuals != nullptr) *residuals = rep.residuals;
  return rep.J;
}

GradientBlocks gradient(const Trajectory& traj, const DynamicsModel& model, const Vec& p,
                        const Dataset& dataset) {
  CostReport rep = accumulate(traj, model, p, dataset, true, false);
  return {std::move(rep.grad_x0), std::move(rep.grad_p)};
}

HessianBlocks hessian(const Trajectory& traj, const DynamicsModel& model, const Vec& p,
                      const Dataset& dataset) {
  CostReport rep = accumulate(traj, model, p, dataset, true, true);
  return {std::move(rep.H_x0x0), std::move(rep.H_x0p), std::move(rep.H_px0),
          std::move(rep.H_pp)};
}

CostReport cost_report(const Trajectory& traj, const DynamicsModel& model, const Vec& p,
                       const Dataset& dataset) {
  return accumulate(traj, model, p, dataset, true, true);
}

double gof(const Mat& y_obs, const Mat& y_sim) {
  if (y_obs.rows() != y_sim.rows() || y_obs.cols() != y_sim.cols()) {
    throw DimensionError("gof: observed " + std::to_string(y_obs.rows()) + "x" +
                         std::to_string(y_obs.cols()) + " vs simulated " +
                         std::to_string(y_sim.rows()) + "x" + std::to_string(y_sim.cols()));
  }
  if (y_obs.rows() == 0) throw DataError("gof: no samples");
  if (!y_obs.allFinite()) throw DataError("gof: non-finite observation");
  if (!y_sim.allFinite()) throw NumericalError("gof: non-finite simulated output");

  const Mat centered = y_obs.rowwise() - y_obs.colwise().mean();
  const double denom = centered.norm();
  if (!(denom > 0.0)) {
    throw DataError("gof: observations are constant, normalization is undefined");
  }
  return 1.0 - (y_obs - y_sim).norm() / denom;
}

}  // namespace greybox
