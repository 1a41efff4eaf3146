#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "greybox/common.hpp"
#include "greybox/tensor.hpp"

namespace greybox {

/// Problem sizes: N states, M parameters, S outputs.
struct ModelDims {
  Index n_states = 0;
  Index n_params = 0;
  Index n_outputs = 0;

  void validate() const {
    if (n_states < 1) throw DimensionError("ModelDims: need at least one state");
    if (n_params < 0) throw DimensionError("ModelDims: negative parameter count");
    if (n_outputs < 1) throw DimensionError("ModelDims: need at least one output");
  }
};

/// Box of plausible evaluation points, used to draw random check points.
struct EvalDomain {
  Vec x_lo, x_hi;
  Vec p_lo, p_hi;
  double u_lo = -1.0;
  double u_hi = 1.0;
};

/// Minimal dynamics contract: dimensions, state derivative f, output map c.
/// Everything is evaluated at (t, x, p, u) with u an exogenous scalar input
/// held by zero-order hold; u carries no sensitivity to x0 or p.
class BasicDynamics {
 public:
  virtual ~BasicDynamics() = default;

  virtual ModelDims dims() const = 0;
  virtual Vec f(double t, const Vec& x, const Vec& p, double u) const = 0;
  virtual Vec c(double t, const Vec& x, const Vec& p, double u) const = 0;

  /// Plausible ranges for states/parameters/input, used by the verification
  /// harness to sample evaluation points away from singular regions.
  virtual EvalDomain domain() const;

  /// Number of times an evaluation had to clamp an argument (0 for models
  /// without singular regions). Monotone counter, safe across threads.
  virtual std::uint64_t clamp_events() const { return 0; }
};

/// Full dynamics contract: f, c and all first/second partials the transition
/// tensor ODEs and Hessian assembly consume. Shapes (N states, M parameters,
/// S outputs):
///   f_x N x N,  f_p N x M
///   f_xx N x N x N,  f_xp N x N x M,  f_px N x M x N,  f_pp N x M x M
///   c_x S x N,  c_p S x M
///   c_xx S x N x N,  c_xp S x N x M,  c_px S x M x N,  c_pp S x M x M
/// Mixed partials of a twice-differentiable model must be consistent:
/// f_xp(i,m,k) == f_px(i,k,m) and likewise for c.
class DynamicsModel : public BasicDynamics {
 public:
  virtual Mat f_x(double t, const Vec& x, const Vec& p, double u) const = 0;
  virtual Mat f_p(double t, const Vec& x, const Vec& p, double u) const = 0;
  virtual Tens3 f_xx(double t, const Vec& x, const Vec& p, double u) const = 0;
  virtual Tens3 f_xp(double t, const Vec& x, const Vec& p, double u) const = 0;
  virtual Tens3 f_px(double t, const Vec& x, const Vec& p, double u) const = 0;
  virtual Tens3 f_pp(double t, const Vec& x, const Vec& p, double u) const = 0;

  virtual Mat c_x(double t, const Vec& x, const Vec& p, double u) const = 0;
  virtual Mat c_p(double t, const Vec& x, const Vec& p, double u) const = 0;
  virtual Tens3 c_xx(double t, const Vec& x, const Vec& p, double u) const = 0;
  virtual Tens3 c_xp(double t, const Vec& x, const Vec& p, double u) const = 0;
  virtual Tens3 c_px(double t, const Vec& x, const Vec& p, double u) const = 0;
  virtual Tens3 c_pp(double t, const Vec& x, const Vec& p, double u) const = 0;
};

inline EvalDomain BasicDynamics::domain() const {
  const ModelDims d = dims();
  EvalDomain box;
  box.x_lo = Vec::Constant(d.n_states, -1.0);
  box.x_hi = Vec::Constant(d.n_states, 1.0);
  box.p_lo = Vec::Constant(d.n_params, 0.5);
  box.p_hi = Vec::Constant(d.n_params, 1.5);
  return box;
}

/// Sampled exogenous input held by zero-order hold: evaluation at t returns
/// the most recent sample's value at or before t.
class InputSignal {
 public:
  InputSignal() = default;
  InputSignal(std::vector<double> times, std::vector<double> values)
      : times_(std::move(times)), values_(std::move(values)) {
    if (times_.size() != values_.size()) {
      throw DimensionError("InputSignal: " + std::to_string(times_.size()) + " times vs " +
                           std::to_string(values_.size()) + " values");
    }
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (!(times_[i] > times_[i - 1])) {
        throw DataError("InputSignal: sample times must be strictly increasing (index " +
                        std::to_string(i) + ")");
      }
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]) || !std::isfinite(times_[i])) {
        throw DataError("InputSignal: non-finite sample at index " + std::to_string(i));
      }
    }
  }

  static InputSignal constant(double value, double t0 = 0.0) { return InputSignal({t0}, {value}); }

  bool empty() const { return times_.empty(); }
  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

  double value_at(double t) const {
    if (times_.empty()) return 0.0;
    if (t < times_.front()) {
      throw DataError("InputSignal: evaluation at t=" + std::to_string(t) +
                      " precedes the first sample at t=" + std::to_string(times_.front()));
    }
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t idx = static_cast<std::size_t>(it - times_.begin()) - 1;
    return values_[idx];
  }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

namespace shape_check {

inline void require(const char* name, Index got_r, Index got_c, Index want_r, Index want_c) {
  if (got_r != want_r || got_c != want_c) {
    throw DimensionError(std::string(name) + ": got " + std::to_string(got_r) + "x" +
                         std::to_string(got_c) + ", expected " + std::to_string(want_r) + "x" +
                         std::to_string(want_c));
  }
}

inline void require(const char* name, const Tens3& t, Index d1, Index d2, Index d3) {
  if (t.d1() != d1 || t.d2() != d2 || t.d3() != d3) {
    throw DimensionError(std::string(name) + ": got " + std::to_string(t.d1()) + "x" +
                         std::to_string(t.d2()) + "x" + std::to_string(t.d3()) + ", expected " +
                         std::to_string(d1) + "x" + std::to_string(d2) + "x" +
                         std::to_string(d3));
  }
}

}  // namespace shape_check

/// Validates every derivative surface of a model against its declared
/// dimensions at one evaluation point. Used at module boundaries and in tests.
void validate_model_shapes(const DynamicsModel& model, double t, const Vec& x, const Vec& p,
                           double u);

}  // namespace greybox
