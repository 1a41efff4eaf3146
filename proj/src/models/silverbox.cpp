#include "greybox/models/silverbox.hpp"

#include <cmath>
#include <string>

namespace greybox {

namespace {

void require_args(const Vec& x, const Vec& p) {
  if (x.size() != 2 || p.size() != 4) {
    throw DimensionError("Silverbox: expected 2 states and 4 parameters, got " +
                         std::to_string(x.size()) + "/" + std::to_string(p.size()));
  }
  if (p[0] == 0.0) throw NumericalError("Silverbox: zero mass");
}

}  // namespace

EvalDomain SilverboxModel::domain() const {
  EvalDomain box;
  box.x_lo = Vec::Constant(2, -0.2);
  box.x_hi = Vec::Constant(2, 0.2);
  box.p_lo = Vec(4);
  box.p_hi = Vec(4);
  box.p_lo << 2.0e-6, 1.0e-4, 0.5, 2.0;
  box.p_hi << 1.0e-5, 4.0e-4, 1.5, 6.0;
  box.u_lo = -0.15;
  box.u_hi = 0.15;
  return box;
}

Vec SilverboxModel::f(double, const Vec& x, const Vec& p, double u) const {
  require_args(x, p);
  const double m = p[0], d = p[1], a = p[2], b = p[3];
  Vec out(2);
  out[0] = x[1];
  out[1] = u - (d * x[1] + a * x[0] + b * x[0] * x[0] * x[0]) / m;
  return out;
}

Vec SilverboxModel::c(double, const Vec& x, const Vec&, double) const {
  return Vec::Constant(1, x[0]);
}

Mat SilverboxModel::f_x(double, const Vec& x, const Vec& p, double u) const {
  require_args(x, p);
  (void)u;
  const double m = p[0], d = p[1], a = p[2], b = p[3];
  Mat out(2, 2);
  out << 0.0, 1.0, -(a + 3.0 * b * x[0] * x[0]) / m, -d / m;
  return out;
}

Mat SilverboxModel::f_p(double, const Vec& x, const Vec& p, double) const {
  require_args(x, p);
  const double m = p[0], d = p[1], a = p[2], b = p[3];
  const double x1 = x[0], x2 = x[1];
  const double spring = d * x2 + a * x1 + b * x1 * x1 * x1;
  Mat out = Mat::Zero(2, 4);
  out(1, 0) = spring / (m * m);
  out(1, 1) = -x2 / m;
  out(1, 2) = -x1 / m;
  out(1, 3) = -x1 * x1 * x1 / m;
  return out;
}

Tens3 SilverboxModel::f_xx(double, const Vec& x, const Vec& p, double) const {
  require_args(x, p);
  Tens3 out(2, 2, 2);
  out(1, 0, 0) = -6.0 * p[3] * x[0] / p[0];
  return out;
}

Tens3 SilverboxModel::f_xp(double, const Vec& x, const Vec& p, double) const {
  require_args(x, p);
  const double m = p[0], d = p[1], a = p[2], b = p[3];
  const double x1 = x[0];
  Tens3 out(2, 2, 4);
  out(1, 0, 0) = (a + 3.0 * b * x1 * x1) / (m * m);
  out(1, 0, 2) = -1.0 / m;
  out(1, 0, 3) = -3.0 * x1 * x1 / m;
  out(1, 1, 0) = d / (m * m);
  out(1, 1, 1) = -1.0 / m;
  return out;
}

Tens3 SilverboxModel::f_px(double t, const Vec& x, const Vec& p, double u) const {
  const Tens3 xp = f_xp(t, x, p, u);
  Tens3 out(2, 4, 2);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 4; ++j) {
      for (Index k = 0; k < 2; ++k) out(i, j, k) = xp(i, k, j);
    }
  }
  return out;
}

Tens3 SilverboxModel::f_pp(double, const Vec& x, const Vec& p, double) const {
  require_args(x, p);
  const double m = p[0], d = p[1], a = p[2], b = p[3];
  const double x1 = x[0], x2 = x[1];
  const double spring = d * x2 + a * x1 + b * x1 * x1 * x1;
  Tens3 out(2, 4, 4);
  out(1, 0, 0) = -2.0 * spring / (m * m * m);
  out(1, 0, 1) = out(1, 1, 0) = x2 / (m * m);
  out(1, 0, 2) = out(1, 2, 0) = x1 / (m * m);
  out(1, 0, 3) = out(1, 3, 0) = x1 * x1 * x1 / (m * m);
  return out;
}

Mat SilverboxModel::c_x(double, const Vec&, const Vec&, double) const {
  Mat out(1, 2);
  out << 1.0, 0.0;
  return out;
}

Mat SilverboxModel::c_p(double, const Vec&, const Vec&, double) const { return Mat::Zero(1, 4); }

Tens3 SilverboxModel::c_xx(double, const Vec&, const Vec&, double) const {
  return Tens3(1, 2, 2);
}

Tens3 SilverboxModel::c_xp(double, const Vec&, const Vec&, double) const {
  return Tens3(1, 2, 4);
}

Tens3 SilverboxModel::c_px(double, const Vec&, const Vec&, double) const {
  return Tens3(1, 4, 2);
}

Tens3 SilverboxModel::c_pp(double, const Vec&, const Vec&, double) const {
  return Tens3(1, 4, 4);
}

}  // namespace greybox
