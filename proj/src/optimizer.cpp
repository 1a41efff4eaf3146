#include "greybox/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

namespace greybox {

DecisionVector DecisionVector::all_free(Vec x0, Vec p) {
  DecisionVector d;
  d.free_x0.assign(static_cast<std::size_t>(x0.size()), true);
  d.free_p.assign(static_cast<std::size_t>(p.size()), true);
  d.x0 = std::move(x0);
  d.p = std::move(p);
  return d;
}

DecisionVector DecisionVector::params_only(Vec x0, Vec p) {
  DecisionVector d = all_free(std::move(x0), std::move(p));
  d.free_x0.assign(d.free_x0.size(), false);
  return d;
}

Index DecisionVector::free_count() const {
  Index count = 0;
  for (bool b : free_x0) count += b ? 1 : 0;
  for (bool b : free_p) count += b ? 1 : 0;
  return count;
}

Vec DecisionVector::pack() const {
  Vec values(free_count());
  Index a = 0;
  for (std::size_t i = 0; i < free_x0.size(); ++i) {
    if (free_x0[i]) values[a++] = x0[static_cast<Index>(i)];
  }
  for (std::size_t j = 0; j < free_p.size(); ++j) {
    if (free_p[j]) values[a++] = p[static_cast<Index>(j)];
  }
  return values;
}

void DecisionVector::unpack(const Vec& values) {
  if (values.size() != free_count()) {
    throw DimensionError("DecisionVector: " + std::to_string(values.size()) + " values for " +
                         std::to_string(free_count()) + " free coordinates");
  }
  Index a = 0;
  for (std::size_t i = 0; i < free_x0.size(); ++i) {
    if (free_x0[i]) x0[static_cast<Index>(i)] = values[a++];
  }
  for (std::size_t j = 0; j < free_p.size(); ++j) {
    if (free_p[j]) p[static_cast<Index>(j)] = values[a++];
  }
}

void DecisionVector::validate(const ModelDims& dims) const {
  if (static_cast<Index>(free_x0.size()) != dims.n_states || x0.size() != dims.n_states) {
    throw DimensionError("DecisionVector: x0 mask/values sized " +
                         std::to_string(free_x0.size()) + "/" + std::to_string(x0.size()) +
                         ", model has " + std::to_string(dims.n_states) + " states");
  }
  if (static_cast<Index>(free_p.size()) != dims.n_params || p.size() != dims.n_params) {
    throw DimensionError("DecisionVector: p mask/values sized " + std::to_string(free_p.size()) +
                         "/" + std::to_string(p.size()) + ", model has " +
                         std::to_string(dims.n_params) + " parameters");
  }
  if (free_count() == 0) throw ConfigError("DecisionVector: no free coordinates");
  if (!all_finite(x0) || !all_finite(p)) {
    throw NumericalError("DecisionVector: non-finite values");
  }
}

void OptimizerConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(grad_tol > 0.0)) {
    throw ConfigError("OptimizerConfig: tolerances must be positive");
  }
  if (max_iter < 1) throw ConfigError("OptimizerConfig: max_iter must be at least 1");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) {
    throw ConfigError("OptimizerConfig: armijo_c must lie in (0, 1)");
  }
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw ConfigError("OptimizerConfig: backtrack_factor must lie in (0, 1)");
  }
  if (!(min_step > 0.0)) throw ConfigError("OptimizerConfig: min_step must be positive");
  if (!(damping_init > 0.0)) throw ConfigError("OptimizerConfig: damping_init must be positive");
  if (!(fd_gradient_step > 0.0) || !(fd_hessian_step > 0.0)) {
    throw ConfigError("OptimizerConfig: finite-difference steps must be positive");
  }
  if (integrator.substeps < 1) throw ConfigError("OptimizerConfig: substeps must be at least 1");
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged_abs: return "converged_abs";
    case SolveStatus::converged_rel: return "converged_rel";
    case SolveStatus::converged_grad: return "converged_grad";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::line_search_failure: return "line_search_failure";
    case SolveStatus::aborted: return "aborted";
  }
  return "unknown";
}

Regularized regularize_hessian(const Mat& h, double damping_init) {
  if (h.rows() != h.cols()) {
    throw DimensionError("regularize_hessian: matrix is " + std::to_string(h.rows()) + "x" +
                         std::to_string(h.cols()));
  }
  if (!h.allFinite()) throw NumericalError("regularize_hessian: non-finite Hessian");
  if (!(damping_init > 0.0)) {
    throw ConfigError("regularize_hessian: damping_init must be positive");
  }

  const Mat sym = 0.5 * (h + h.transpose());
  const auto positive_definite = [](const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(m, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) return false;
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    return lo > 0.0 && lo > 1e-12 * std::max(hi, 0.0);
  };

  if (positive_definite(sym)) return {sym, 0.0};
  for (double mu = damping_init; std::isfinite(mu); mu *= 2.0) {
    const Mat damped = sym + mu * Mat::Identity(sym.rows(), sym.cols());
    if (positive_definite(damped)) return {damped, mu};
  }
  throw NumericalError("regularize_hessian: damping overflowed without a usable factorization");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Cost and its derivatives restricted to the free coordinates, expressed in
/// the scaled decision space (each coordinate divided by the magnitude of its
/// initial guess).
struct Derivatives {
  double j = kInf;
  Vec grad; ///< scaled
  Mat hess; ///< scaled
};

class Problem {
 public:
  Problem(const DynamicsModel& model, const Dataset& dataset, const DecisionVector& guess,
          const OptimizerConfig& cfg)
      : model_(model), dataset_(dataset), decision_(guess), cfg_(cfg) {
    const ModelDims dims = model.dims();
    dims.validate();
    guess.validate(dims);
    dataset.validate(dims.n_outputs);
    cfg.validate();

    for (Index i = 0; i < dims.n_states; ++i) {
      if (guess.free_x0[static_cast<std::size_t>(i)]) sel_.push_back(i);
    }
    for (Index j = 0; j < dims.n_params; ++j) {
      if (guess.free_p[static_cast<std::size_t>(j)]) sel_.push_back(dims.n_states + j);
    }

    const Vec packed = guess.pack();
    scale_ = Vec::Ones(packed.size());
    for (Index a = 0; a < packed.size(); ++a) {
      if (packed[a] != 0.0) scale_[a] = std::abs(packed[a]);
    }
  }

  Index size() const { return scale_.size(); }

  Vec initial_scaled() const { return decision_.pack().cwiseQuotient(scale_); }

  DecisionVector to_decision(const Vec& scaled) const {
    DecisionVector d = decision_;
    d.unpack(scaled.cwiseProduct(scale_));
    return d;
  }

  /// Plain cost at a scaled decision point; throws on divergence.
  double cost(const Vec& scaled) const {
    const DecisionVector d = to_decision(scaled);
    const Trajectory traj = integrate(model_, d.x0, d.p, dataset_.input, dataset_.times,
                                      SensitivityOrder::FirstOrder, cfg_.integrator);
    return evaluate_cost(traj, model_, d.p, dataset_);
  }

  /// Exact derivatives from one second-order sensitivity propagation.
  Derivatives analytic(const Vec& scaled) const {
    const DecisionVector d = to_decision(scaled);
    const Trajectory traj = integrate(model_, d.x0, d.p, dataset_.input, dataset_.times,
                                      SensitivityOrder::SecondOrder, cfg_.integrator);
    const CostReport rep = cost_report(traj, model_, d.p, dataset_);

    Derivatives der;
    der.j = rep.J;
    Vec grad_full(rep.grad_x0.size() + rep.grad_p.size());
    grad_full << rep.grad_x0, rep.grad_p;
    const Mat hess_full = rep.full_hessian();

    const Index k = size();
    der.grad = Vec(k);
    der.hess = Mat(k, k);
    for (Index a = 0; a < k; ++a) {
      der.grad[a] = grad_full[sel_[static_cast<std::size_t>(a)]] * scale_[a];
      for (Index b = 0; b < k; ++b) {
        der.hess(a, b) = hess_full(sel_[static_cast<std::size_t>(a)],
                                   sel_[static_cast<std::size_t>(b)]) *
                         scale_[a] * scale_[b];
      }
    }
    return der;
  }

  /// Baseline derivatives: central differences of the cost in scaled space.
  Derivatives fd(const Vec& scaled) const {
    const Index k = size();
    Derivatives der;
    der.j = cost(scaled);
    der.grad = Vec(k);
    der.hess = Mat(k, k);

    Vec hg(k), hh(k);
    for (Index a = 0; a < k; ++a) {
      hg[a] = cfg_.fd_gradient_step * std::max(1.0, std::abs(scaled[a]));
      hh[a] = cfg_.fd_hessian_step * std::max(1.0, std::abs(scaled[a]));
    }

    const auto at = [&](Index a, double da, Index b, double db) {
      Vec point = scaled;
      point[a] += da;
      if (b >= 0) point[b] += db;
      return cost(point);
    };

    for (Index a = 0; a < k; ++a) {
      der.grad[a] = (at(a, hg[a], -1, 0.0) - at(a, -hg[a], -1, 0.0)) / (2.0 * hg[a]);
      der.hess(a, a) =
          (at(a, hh[a], -1, 0.0) - 2.0 * der.j + at(a, -hh[a], -1, 0.0)) / (hh[a] * hh[a]);
    }
    for (Index a = 0; a < k; ++a) {
      for (Index b = a + 1; b < k; ++b) {
        const double cross = (at(a, hh[a], b, hh[b]) - at(a, hh[a], b, -hh[b]) -
                              at(a, -hh[a], b, hh[b]) + at(a, -hh[a], b, -hh[b])) /
                             (4.0 * hh[a] * hh[b]);
        der.hess(a, b) = cross;
        der.hess(b, a) = cross;
      }
    }
    return der;
  }

 private:
  const DynamicsModel& model_;
  const Dataset& dataset_;
  DecisionVector decision_;
  const OptimizerConfig& cfg_;
  std::vector<Index> sel_; ///< free coordinates as indices into (x0; p)
  Vec scale_;
};

bool finite(const Derivatives& der) {
  return std::isfinite(der.j) && all_finite(der.grad) && der.hess.allFinite();
}

RunReport drive(const Problem& prob, const DecisionVector& guess, const OptimizerConfig& cfg,
                bool use_analytic) {
  const auto t_start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  RunReport rep;
  rep.estimate = guess;

  Vec d = prob.initial_scaled();
  Derivatives der;
  try {
    der = use_analytic ? prob.analytic(d) : prob.fd(d);
    if (!finite(der)) throw NumericalError("non-finite cost or derivatives");
  } catch (const Error& e) {
    rep.status = SolveStatus::aborted;
    rep.message = std::string("initial evaluation failed: ") + e.what();
    rep.j_initial = rep.j_final = kInf;
    rep.wall_seconds = elapsed();
    return rep;
  }
  rep.j_initial = der.j;
  double j_cur = der.j;
  double grad_norm = der.grad.cwiseAbs().maxCoeff();

  rep.status = SolveStatus::max_iter;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    grad_norm = der.grad.cwiseAbs().maxCoeff();
    if (grad_norm <= cfg.grad_tol) {
      rep.status = SolveStatus::converged_grad;
      break;
    }

    Regularized reg;
    Vec step;
    try {
      reg = regularize_hessian(der.hess, cfg.damping_init);
      step = Eigen::LLT<Mat>(reg.h).solve(-der.grad);
      if (!all_finite(step)) throw NumericalError("non-finite Newton step");
    } catch (const Error& e) {
      rep.status = SolveStatus::aborted;
      rep.message = std::string("step computation failed: ") + e.what();
      break;
    }
    const double slope = der.grad.dot(step); // < 0: descent by positive definiteness

    double alpha = 1.0;
    bool accepted = false;
    Vec trial;
    double j_trial = kInf;
    while (alpha >= cfg.min_step) {
      trial = d + alpha * step;
      try {
        j_trial = prob.cost(trial);
      } catch (const Error&) {
        j_trial = kInf;
      }
      if (std::isfinite(j_trial) && j_trial <= j_cur + cfg.armijo_c * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= cfg.backtrack_factor;
    }
    if (!accepted) {
      rep.status = SolveStatus::line_search_failure;
      break;
    }

    d = trial;
    const double decrease = j_cur - j_trial;
    j_cur = j_trial;
    rep.iterations = iter;
    IterationRecord rec;
    rec.iteration = iter;
    rec.J = j_trial;
    rec.grad_norm = grad_norm;
    rec.step_length = alpha;
    rec.damping = reg.damping;
    rec.decision = prob.to_decision(d).pack();
    rep.history.push_back(std::move(rec));

    if (std::abs(decrease) <= cfg.abs_tol) {
      rep.status = SolveStatus::converged_abs;
      break;
    }
    if (std::abs(decrease) <= cfg.rel_tol * std::max(j_cur, 1e-300)) {
      rep.status = SolveStatus::converged_rel;
      break;
    }

    try {
      der = use_analytic ? prob.analytic(d) : prob.fd(d);
      if (!finite(der)) throw NumericalError("non-finite cost or derivatives");
      grad_norm = der.grad.cwiseAbs().maxCoeff();
    } catch (const Error& e) {
      rep.status = SolveStatus::aborted;
      rep.message = std::string("derivative evaluation failed: ") + e.what();
      break;
    }
  }

  rep.estimate = prob.to_decision(d);
  rep.j_final = j_cur;
  rep.grad_norm_final = grad_norm;
  rep.wall_seconds = elapsed();
  return rep;
}

}  // namespace

RunReport newton_solve(const DynamicsModel& model, const Dataset& dataset,
                       const DecisionVector& guess, const OptimizerConfig& cfg) {
  const Problem prob(model, dataset, guess, cfg);
  return drive(prob, guess, cfg, true);
}

RunReport fd_baseline_solve(const DynamicsModel& model, const Dataset& dataset,
                            const DecisionVector& guess, const OptimizerConfig& cfg) {
  const Problem prob(model, dataset, guess, cfg);
  return drive(prob, guess, cfg, false);
}

}  // namespace greybox
