#include "greybox/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace greybox {

namespace {

/// Offsets of each block inside the flattened integration vector, in the
/// documented order (x, Φ, Θ, Φ¹, Θ¹, χ¹, χ²).
struct Layout {
  Index n = 0;
  Index m = 0;
  bool second = false;
  Index x_off = 0;
  Index phi_off = 0;
  Index theta_off = 0;
  Index phi1_off = 0;
  Index theta1_off = 0;
  Index chi1_off = 0;
  Index chi2_off = 0;
  Index total = 0;

  Layout(const ModelDims& dims, SensitivityOrder order)
      : n(dims.n_states), m(dims.n_params), second(order == SensitivityOrder::SecondOrder) {
    x_off = 0;
    phi_off = x_off + n;
    theta_off = phi_off + n * n;
    phi1_off = theta_off + n * m;
    theta1_off = phi1_off + (second ? n * n * n : 0);
    chi1_off = theta1_off + (second ? n * m * m : 0);
    chi2_off = chi1_off + (second ? n * n * m : 0);
    total = chi2_off + (second ? n * m * n : 0);
  }
};

Vec pack(const AugmentedState& s, const Layout& lay) {
  Vec z(lay.total);
  z.segment(lay.x_off, lay.n) = s.x;
  std::copy_n(s.phi.data(), lay.n * lay.n, z.data() + lay.phi_off);
  std::copy_n(s.theta.data(), lay.n * lay.m, z.data() + lay.theta_off);
  if (lay.second) {
    std::copy_n(s.phi1.data(), s.phi1.size(), z.data() + lay.phi1_off);
    std::copy_n(s.theta1.data(), s.theta1.size(), z.data() + lay.theta1_off);
    std::copy_n(s.chi1.data(), s.chi1.size(), z.data() + lay.chi1_off);
    std::copy_n(s.chi2.data(), s.chi2.size(), z.data() + lay.chi2_off);
  }
  return z;
}

AugmentedState unpack(const Vec& z, double t, const Layout& lay) {
  AugmentedState s;
  s.t = t;
  s.x = z.segment(lay.x_off, lay.n);
  s.phi = Eigen::Map<const Mat>(z.data() + lay.phi_off, lay.n, lay.n);
  s.theta = Eigen::Map<const Mat>(z.data() + lay.theta_off, lay.n, lay.m);
  if (lay.second) {
    s.phi1 = Tens3(lay.n, lay.n, lay.n);
    s.theta1 = Tens3(lay.n, lay.m, lay.m);
    s.chi1 = Tens3(lay.n, lay.n, lay.m);
    s.chi2 = Tens3(lay.n, lay.m, lay.n);
    std::copy_n(z.data() + lay.phi1_off, s.phi1.size(), s.phi1.data());
    std::copy_n(z.data() + lay.theta1_off, s.theta1.size(), s.theta1.data());
    std::copy_n(z.data() + lay.chi1_off, s.chi1.size(), s.chi1.data());
    std::copy_n(z.data() + lay.chi2_off, s.chi2.size(), s.chi2.data());
  }
  return s;
}

/// Derivative of the flattened augmented state. Evaluates the model's first
/// derivatives once, and its second derivatives only for SecondOrder layouts.
Vec rhs_flat(const DynamicsModel& model, double t, const Vec& z, const Vec& p, double u,
             const Layout& lay) {
  const Vec x = z.segment(lay.x_off, lay.n);
  const Mat phi = Eigen::Map<const Mat>(z.data() + lay.phi_off, lay.n, lay.n);
  const Mat theta = Eigen::Map<const Mat>(z.data() + lay.theta_off, lay.n, lay.m);

  const Mat fx = model.f_x(t, x, p, u);
  const Mat fp = model.f_p(t, x, p, u);
  shape_check::require("f_x", fx.rows(), fx.cols(), lay.n, lay.n);
  shape_check::require("f_p", fp.rows(), fp.cols(), lay.n, lay.m);

  Vec dz(lay.total);
  dz.segment(lay.x_off, lay.n) = model.f(t, x, p, u);
  Eigen::Map<Mat>(dz.data() + lay.phi_off, lay.n, lay.n).noalias() = fx * phi;
  Eigen::Map<Mat>(dz.data() + lay.theta_off, lay.n, lay.m) = fx * theta + fp;

  if (lay.second) {
    Tens3 phi1(lay.n, lay.n, lay.n);
    Tens3 theta1(lay.n, lay.m, lay.m);
    Tens3 chi1(lay.n, lay.n, lay.m);
    Tens3 chi2(lay.n, lay.m, lay.n);
    std::copy_n(z.data() + lay.phi1_off, phi1.size(), phi1.data());
    std::copy_n(z.data() + lay.theta1_off, theta1.size(), theta1.data());
    std::copy_n(z.data() + lay.chi1_off, chi1.size(), chi1.data());
    std::copy_n(z.data() + lay.chi2_off, chi2.size(), chi2.data());

    const Tens3 fxx = model.f_xx(t, x, p, u);
    const Tens3 fxp = model.f_xp(t, x, p, u);
    const Tens3 fpx = model.f_px(t, x, p, u);
    const Tens3 fpp = model.f_pp(t, x, p, u);
    shape_check::require("f_xx", fxx, lay.n, lay.n, lay.n);
    shape_check::require("f_xp", fxp, lay.n, lay.n, lay.m);
    shape_check::require("f_px", fpx, lay.n, lay.m, lay.n);
    shape_check::require("f_pp", fpp, lay.n, lay.m, lay.m);

    const Tens3 dphi1 = tens3_contract_last2(fxx, phi, phi) + tens3_contract_first(fx, phi1);
    const Tens3 dtheta1 = tens3_contract_last2(fxx, theta, theta) +
                          tens3_contract_last(fpx, theta) + tens3_contract_mid(fxp, theta) +
                          tens3_contract_first(fx, theta1) + fpp;
    const Tens3 dchi1 = tens3_contract_last2(fxx, phi, theta) + tens3_contract_mid(fxp, phi) +
                        tens3_contract_first(fx, chi1);
    const Tens3 dchi2 = tens3_contract_last2(fxx, theta, phi) + tens3_contract_last(fpx, phi) +
                        tens3_contract_first(fx, chi2);

    std::copy_n(dphi1.data(), dphi1.size(), dz.data() + lay.phi1_off);
    std::copy_n(dtheta1.data(), dtheta1.size(), dz.data() + lay.theta1_off);
    std::copy_n(dchi1.data(), dchi1.size(), dz.data() + lay.chi1_off);
    std::copy_n(dchi2.data(), dchi2.size(), dz.data() + lay.chi2_off);
  }
  return dz;
}

double rel_error(double diff_max, double ref_max) { return diff_max / std::max(1.0, ref_max); }

}  // namespace

AugmentedState init_augmented(const Vec& x0, const ModelDims& dims) {
  dims.validate();
  if (x0.size() != dims.n_states) {
    throw DimensionError("init_augmented: x0 has " + std::to_string(x0.size()) +
                         " entries, model has " + std::to_string(dims.n_states) + " states");
  }
  if (!all_finite(x0)) throw NumericalError("init_augmented: x0 is not finite");

  AugmentedState s;
  s.t = 0.0;
  s.x = x0;
  s.phi = Mat::Identity(dims.n_states, dims.n_states);
  s.theta = Mat::Zero(dims.n_states, dims.n_params);
  s.phi1 = Tens3(dims.n_states, dims.n_states, dims.n_states);
  s.theta1 = Tens3(dims.n_states, dims.n_params, dims.n_params);
  s.chi1 = Tens3(dims.n_states, dims.n_states, dims.n_params);
  s.chi2 = Tens3(dims.n_states, dims.n_params, dims.n_states);
  return s;
}

AugmentedState augmented_rhs(const DynamicsModel& model, const AugmentedState& s, const Vec& p,
                             double u, SensitivityOrder order) {
  const ModelDims dims = model.dims();
  dims.validate();
  const Layout lay(dims, order);
  shape_check::require("AugmentedState.phi", s.phi.rows(), s.phi.cols(), lay.n, lay.n);
  shape_check::require("AugmentedState.theta", s.theta.rows(), s.theta.cols(), lay.n, lay.m);
  if (lay.second) {
    shape_check::require("AugmentedState.phi1", s.phi1, lay.n, lay.n, lay.n);
    shape_check::require("AugmentedState.theta1", s.theta1, lay.n, lay.m, lay.m);
    shape_check::require("AugmentedState.chi1", s.chi1, lay.n, lay.n, lay.m);
    shape_check::require("AugmentedState.chi2", s.chi2, lay.n, lay.m, lay.n);
  }
  try {
    return unpack(rhs_flat(model, s.t, pack(s, lay), p, u, lay), s.t, lay);
  } catch (const NumericalError&) {
    throw;
  } catch (const Error& e) {
    throw NumericalError(std::string(e.what()) + " (evaluating augmented dynamics at t=" +
                             std::to_string(s.t) + ")",
                         s.t);
  }
}

Trajectory integrate(const DynamicsModel& model, const Vec& x0, const Vec& p,
                     const InputSignal& input, const std::vector<double>& sample_times,
                     SensitivityOrder order, const IntegratorConfig& cfg) {
  const ModelDims dims = model.dims();
  dims.validate();
  if (p.size() != dims.n_params) {
    throw DimensionError("integrate: p has " + std::to_string(p.size()) + " entries, model has " +
                         std::to_string(dims.n_params) + " parameters");
  }
  if (!all_finite(p)) throw NumericalError("integrate: p is not finite");
  if (cfg.substeps < 1) throw ConfigError("integrate: substeps must be at least 1");
  if (sample_times.empty()) throw DataError("integrate: empty sample time grid");
  for (std::size_t h = 0; h < sample_times.size(); ++h) {
    if (!std::isfinite(sample_times[h])) {
      throw DataError("integrate: non-finite sample time at index " + std::to_string(h));
    }
    if (h > 0 && !(sample_times[h] > sample_times[h - 1])) {
      throw DataError("integrate: sample times must be strictly increasing (index " +
                      std::to_string(h) + ")");
    }
  }

  const std::uint64_t clamps_before = model.clamp_events();
  const Layout lay(dims, order);

  Trajectory traj;
  traj.order = order;
  traj.states.reserve(sample_times.size());

  AugmentedState initial = init_augmented(x0, dims);
  initial.t = sample_times.front();
  Vec z = pack(initial, lay);
  traj.states.push_back(unpack(z, sample_times.front(), lay));

  // Arithmetic below runs per block group (first-order prefix, rank-3 tail)
  // rather than on the whole flattened vector, so the x/Φ/Θ prefix sees an
  // identical operation sequence whether or not the tail exists — FirstOrder
  // and SecondOrder trajectories agree bit for bit.
  const Index first_len = lay.theta_off + lay.n * lay.m;
  const Index tail_len = lay.total - first_len;
  const auto stage_from = [&](const Vec& base, double s, const Vec& k) {
    Vec out(lay.total);
    out.segment(0, first_len) = base.segment(0, first_len) + s * k.segment(0, first_len);
    if (tail_len > 0) {
      out.segment(first_len, tail_len) =
          base.segment(first_len, tail_len) + s * k.segment(first_len, tail_len);
    }
    return out;
  };
  const auto advance = [&](Vec& state, double dt, const Vec& k1, const Vec& k2, const Vec& k3,
                           const Vec& k4) {
    const auto span = [&](Index off, Index len) {
      state.segment(off, len) += (dt / 6.0) * (k1.segment(off, len) + 2.0 * k2.segment(off, len) +
                                               2.0 * k3.segment(off, len) + k4.segment(off, len));
    };
    span(0, first_len);
    if (tail_len > 0) span(first_len, tail_len);
  };

  for (std::size_t h = 0; h + 1 < sample_times.size(); ++h) {
    const double t_a = sample_times[h];
    const double t_b = sample_times[h + 1];
    const double dt = (t_b - t_a) / cfg.substeps;
    for (int sub = 0; sub < cfg.substeps; ++sub) {
      const double t = t_a + sub * dt;
      const double u = input.value_at(t);
      const Vec k1 = rhs_flat(model, t, z, p, u, lay);
      const Vec k2 = rhs_flat(model, t + 0.5 * dt, stage_from(z, 0.5 * dt, k1), p, u, lay);
      const Vec k3 = rhs_flat(model, t + 0.5 * dt, stage_from(z, 0.5 * dt, k2), p, u, lay);
      const Vec k4 = rhs_flat(model, t + dt, stage_from(z, dt, k3), p, u, lay);
      advance(z, dt, k1, k2, k3, k4);
      if (!z.allFinite()) {
        throw NumericalError("integration produced a non-finite state at t=" +
                                 std::to_string(t + dt) + " (substep " + std::to_string(sub + 1) +
                                 " of " + std::to_string(cfg.substeps) + " after sample " +
                                 std::to_string(h) + ")",
                             t + dt, sub);
      }
    }
    traj.states.push_back(unpack(z, t_b, lay));
  }

  traj.clamp_events = model.clamp_events() - clamps_before;
  return traj;
}

TransitionCheckReport fd_transition_check(const DynamicsModel& model, const Vec& x0, const Vec& p,
                                          const InputSignal& input, double t_end, double bump,
                                          const IntegratorConfig& cfg) {
  if (!(bump > 0.0)) throw ConfigError("fd_transition_check: bump must be positive");
  const double t0 = input.empty() ? 0.0 : input.times().front();
  if (!(t_end > t0)) {
    throw ConfigError("fd_transition_check: t_end=" + std::to_string(t_end) +
                      " must exceed the start time " + std::to_string(t0));
  }
  const std::vector<double> ts = {t0, t_end};
  const Index n = model.dims().n_states;
  const Index m = model.dims().n_params;

  const AugmentedState nominal =
      integrate(model, x0, p, input, ts, SensitivityOrder::SecondOrder, cfg).states.back();

  auto bumped = [&](const Vec& x0b, const Vec& pb, const std::string& label) -> AugmentedState {
    try {
      return integrate(model, x0b, pb, input, ts, SensitivityOrder::FirstOrder, cfg)
          .states.back();
    } catch (const Error& e) {
      throw NumericalError("fd_transition_check: bumped integration failed for " + label + ": " +
                           e.what());
    }
  };

  Mat phi_fd(n, n);
  Mat theta_fd(n, m);
  Tens3 phi1_fd(n, n, n);
  Tens3 theta1_fd(n, m, m);
  Tens3 chi1_fd(n, n, m);
  Tens3 chi2_fd(n, m, n);

  for (Index k = 0; k < n; ++k) {
    const double b = bump * std::max(1.0, std::abs(x0[k]));
    Vec x_hi = x0;
    Vec x_lo = x0;
    x_hi[k] += b;
    x_lo[k] -= b;
    const std::string label = "x0[" + std::to_string(k) + "]";
    const AugmentedState hi = bumped(x_hi, p, label);
    const AugmentedState lo = bumped(x_lo, p, label);
    const double inv = 1.0 / (2.0 * b);
    phi_fd.col(k) = (hi.x - lo.x) * inv;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) phi1_fd(i, j, k) = (hi.phi(i, j) - lo.phi(i, j)) * inv;
      for (Index j = 0; j < m; ++j) chi2_fd(i, j, k) = (hi.theta(i, j) - lo.theta(i, j)) * inv;
    }
  }
  for (Index k = 0; k < m; ++k) {
    const double b = bump * std::max(1.0, std::abs(p[k]));
    Vec p_hi = p;
    Vec p_lo = p;
    p_hi[k] += b;
    p_lo[k] -= b;
    const std::string label = "p[" + std::to_string(k) + "]";
    const AugmentedState hi = bumped(x0, p_hi, label);
    const AugmentedState lo = bumped(x0, p_lo, label);
    const double inv = 1.0 / (2.0 * b);
    theta_fd.col(k) = (hi.x - lo.x) * inv;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) chi1_fd(i, j, k) = (hi.phi(i, j) - lo.phi(i, j)) * inv;
      for (Index j = 0; j < m; ++j) theta1_fd(i, j, k) = (hi.theta(i, j) - lo.theta(i, j)) * inv;
    }
  }

  TransitionCheckReport report;
  report.phi_error = rel_error((nominal.phi - phi_fd).cwiseAbs().maxCoeff(),
                               phi_fd.cwiseAbs().maxCoeff());
  if (m > 0) {
    report.theta_error = rel_error((nominal.theta - theta_fd).cwiseAbs().maxCoeff(),
                                   theta_fd.cwiseAbs().maxCoeff());
  }
  auto tens_error = [](const Tens3& got, const Tens3& want) {
    if (got.empty()) return 0.0;
    return rel_error(tens3_max_abs_diff(got, want), want.max_abs());
  };
  report.phi1_error = tens_error(nominal.phi1, phi1_fd);
  report.theta1_error = tens_error(nominal.theta1, theta1_fd);
  report.chi1_error = tens_error(nominal.chi1, chi1_fd);
  report.chi2_error = tens_error(nominal.chi2, chi2_fd);
  return report;
}

}  // namespace greybox
