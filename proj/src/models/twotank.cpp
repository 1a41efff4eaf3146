#include "greybox/models/twotank.hpp"

#include <cmath>
#include <string>

namespace greybox {

TwoTankModel::TwoTankModel(double clamp_epsilon) : clamp_epsilon_(clamp_epsilon) {
  if (!(clamp_epsilon > 0.0)) {
    throw ConfigError("TwoTank: clamp_epsilon must be positive");
  }
}

EvalDomain TwoTankModel::domain() const {
  EvalDomain box;
  box.x_lo = Vec::Constant(2, 0.05);
  box.x_hi = Vec::Constant(2, 2.0);
  box.p_lo = Vec::Constant(4, 0.01);
  box.p_hi = Vec::Constant(4, 0.08);
  box.u_lo = 0.0;
  box.u_hi = 2.0;
  return box;
}

Vec TwoTankModel::clamped(const Vec& x) const {
  if (x.size() != 2) {
    throw DimensionError("TwoTank: expected 2 states, got " + std::to_string(x.size()));
  }
  Vec s = x;
  for (Index i = 0; i < 2; ++i) {
    if (s[i] < clamp_epsilon_) {
      s[i] = clamp_epsilon_;
      clamps_.fetch_add(1);
    }
  }
  return s;
}

namespace {

void require_params(const Vec& p) {
  if (p.size() != 4) {
    throw DimensionError("TwoTank: expected 4 parameters, got " + std::to_string(p.size()));
  }
}

}  // namespace

Vec TwoTankModel::f(double, const Vec& x, const Vec& p, double u) const {
  require_params(p);
  const Vec s = clamped(x);
  const double r1 = std::sqrt(s[0]);
  const double r2 = std::sqrt(s[1]);
  Vec out(2);
  out[0] = -p[0] * r1 + p[1] * u;
  out[1] = -p[2] * r2 + p[3] * r1;
  return out;
}

Vec TwoTankModel::c(double, const Vec& x, const Vec&, double) const {
  if (x.size() != 2) {
    throw DimensionError("TwoTank: expected 2 states, got " + std::to_string(x.size()));
  }
  return Vec::Constant(1, x[1]);
}

Mat TwoTankModel::f_x(double, const Vec& x, const Vec& p, double) const {
  require_params(p);
  const Vec s = clamped(x);
  const double r1 = std::sqrt(s[0]);
  const double r2 = std::sqrt(s[1]);
  Mat out(2, 2);
  out << -p[0] / (2.0 * r1), 0.0, p[3] / (2.0 * r1), -p[2] / (2.0 * r2);
  return out;
}

Mat TwoTankModel::f_p(double, const Vec& x, const Vec& p, double u) const {
  require_params(p);
  const Vec s = clamped(x);
  const double r1 = std::sqrt(s[0]);
  const double r2 = std::sqrt(s[1]);
  Mat out = Mat::Zero(2, 4);
  out(0, 0) = -r1;
  out(0, 1) = u;
  out(1, 2) = -r2;
  out(1, 3) = r1;
  return out;
}

Tens3 TwoTankModel::f_xx(double, const Vec& x, const Vec& p, double) const {
  require_params(p);
  const Vec s = clamped(x);
  const double c1 = 4.0 * s[0] * std::sqrt(s[0]);
  const double c2 = 4.0 * s[1] * std::sqrt(s[1]);
  Tens3 out(2, 2, 2);
  out(0, 0, 0) = p[0] / c1;
  out(1, 0, 0) = -p[3] / c1;
  out(1, 1, 1) = p[2] / c2;
  return out;
}

Tens3 TwoTankModel::f_xp(double, const Vec& x, const Vec& p, double) const {
  require_params(p);
  const Vec s = clamped(x);
  const double r1 = std::sqrt(s[0]);
  const double r2 = std::sqrt(s[1]);
  Tens3 out(2, 2, 4);
  out(0, 0, 0) = -1.0 / (2.0 * r1);
  out(1, 0, 3) = 1.0 / (2.0 * r1);
  out(1, 1, 2) = -1.0 / (2.0 * r2);
  return out;
}

Tens3 TwoTankModel::f_px(double t, const Vec& x, const Vec& p, double u) const {
  const Tens3 xp = f_xp(t, x, p, u);
  Tens3 out(2, 4, 2);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 4; ++j) {
      for (Index k = 0; k < 2; ++k) out(i, j, k) = xp(i, k, j);
    }
  }
  return out;
}

Tens3 TwoTankModel::f_pp(double, const Vec& x, const Vec& p, double) const {
  require_params(p);
  if (x.size() != 2) {
    throw DimensionError("TwoTank: expected 2 states, got " + std::to_string(x.size()));
  }
  return Tens3(2, 4, 4); // the dynamics are linear in the parameters
}

Mat TwoTankModel::c_x(double, const Vec&, const Vec&, double) const {
  Mat out(1, 2);
  out << 0.0, 1.0;
  return out;
}

Mat TwoTankModel::c_p(double, const Vec&, const Vec&, double) const { return Mat::Zero(1, 4); }

Tens3 TwoTankModel::c_xx(double, const Vec&, const Vec&, double) const { return Tens3(1, 2, 2); }

Tens3 TwoTankModel::c_xp(double, const Vec&, const Vec&, double) const { return Tens3(1, 2, 4); }

Tens3 TwoTankModel::c_px(double, const Vec&, const Vec&, double) const { return Tens3(1, 4, 2); }

Tens3 TwoTankModel::c_pp(double, const Vec&, const Vec&, double) const { return Tens3(1, 4, 4); }

}  // namespace greybox
