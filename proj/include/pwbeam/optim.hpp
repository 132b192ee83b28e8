#pragma once

// Limited-memory BFGS with Armijo backtracking, and the ADMM data-fidelity
// subproblem built on it.

#include <algorithm>
#include <cmath>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwbeam/image.hpp"
#include "pwbeam/sparse_model.hpp"

namespace pwbeam {

struct LbfgsOptions {
  int memory = 10;
  int max_iters = 100;
  // Stop when max|g| <= grad_tol (absolute) or grad_tol * max|g0|
  // (relative_tol = true).
  double grad_tol = 1e-6;
  bool relative_tol = true;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 50;

  void validate() const {
    if (memory < 1) throw std::invalid_argument("lbfgs: memory must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("lbfgs: max_iters must be >= 1");
    if (!(grad_tol >= 0)) throw std::invalid_argument("lbfgs: grad_tol must be >= 0");
    if (!(armijo_c > 0 && armijo_c < 1)) throw std::invalid_argument("lbfgs: armijo_c in (0,1)");
    if (!(backtrack > 0 && backtrack < 1)) throw std::invalid_argument("lbfgs: backtrack in (0,1)");
  }
};

enum class LbfgsStatus { converged, max_iters, line_search_failed };

inline const char* to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::converged: return "converged";
    case LbfgsStatus::max_iters: return "max_iters";
    case LbfgsStatus::line_search_failed: return "line_search_failed";
  }
  return "?";
}

struct LbfgsReport {
  int iterations = 0;
  int evaluations = 0;
  std::vector<double> objective;  // f(x_0), f(x_1), ... of accepted iterates
  double final_grad_norm = 0.0;   // max-norm
  LbfgsStatus status = LbfgsStatus::max_iters;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

// Oracle: double(std::span<const double> x, std::span<double> grad_out).
// Minimizes in place starting from x.
template <class Oracle>
LbfgsReport lbfgs_minimize(Oracle&& oracle, Vector& x, const LbfgsOptions& opts = {}) {
  opts.validate();
  using detail::dot;
  const std::size_t n = x.size();
  LbfgsReport rep;

  Vector g(n), x_new(n), g_new(n), d(n);
  double f = oracle(std::span<const double>(x), std::span<double>(g));
  ++rep.evaluations;
  rep.objective.push_back(f);
  const double g0 = detail::max_abs(g);
  const double tol = opts.relative_tol ? opts.grad_tol * g0 : opts.grad_tol;

  struct Pair {
    Vector s, y;
    double rho;
  };
  std::deque<Pair> hist;
  std::vector<double> alpha(static_cast<std::size_t>(opts.memory));

  rep.final_grad_norm = g0;
  if (g0 <= tol) {
    rep.status = LbfgsStatus::converged;
    return rep;
  }

  for (int it = 0; it < opts.max_iters; ++it) {
    // Two-loop recursion: d = -H g.
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    for (std::size_t k = hist.size(); k-- > 0;) {
      alpha[k] = hist[k].rho * dot(hist[k].s, d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * hist[k].y[i];
    }
    if (!hist.empty()) {
      const auto& last = hist.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const double beta = hist[k].rho * dot(hist[k].y, d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * hist[k].s[i];
    }

    double slope = dot(g, d);
    if (!(slope < 0)) {
      hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = dot(g, d);
    }

    double t = 1.0;
    if (hist.empty()) t = std::min(1.0, 1.0 / detail::max_abs(g));

    bool accepted = false;
    double f_new = f;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + t * d[i];
      f_new = oracle(std::span<const double>(x_new), std::span<double>(g_new));
      ++rep.evaluations;
      if (std::isfinite(f_new) && f_new <= f + opts.armijo_c * t * slope) {
        accepted = true;
        break;
      }
      t *= opts.backtrack;
    }
    if (!accepted) {
      rep.status = LbfgsStatus::line_search_failed;
      return rep;
    }

    Pair p{Vector(n), Vector(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    ++rep.iterations;
    rep.objective.push_back(f);
    rep.final_grad_norm = detail::max_abs(g);

    if (sy > 1e-12 * detail::norm2(p.s) * detail::norm2(p.y)) {
      p.rho = 1.0 / sy;
      hist.push_back(std::move(p));
      if (hist.size() > static_cast<std::size_t>(opts.memory)) hist.pop_front();
    }
    if (rep.final_grad_norm <= tol) {
      rep.status = LbfgsStatus::converged;
      return rep;
    }
  }
  rep.status = LbfgsStatus::max_iters;
  return rep;
}

// Objective of the u-update:
//   1/2 ||y - Phi u||^2 + beta/2 ||u - v + lambda/beta||^2
// with gradient Phi^T (Phi u - y) + beta (u - v) + lambda.
class AdmmUObjective {
 public:
  AdmmUObjective(const SparseModel& model, std::span<const double> y, std::span<const double> v,
                 std::span<const double> lambda, double beta)
      : model_(model), y_(y), v_(v), lambda_(lambda), beta_(beta), residual_(model.num_rows()) {
    if (y.size() != model.num_rows() || v.size() != model.num_cols() ||
        lambda.size() != model.num_cols())
      throw std::invalid_argument("admm_u_subproblem: shape mismatch");
    if (!(beta > 0)) throw std::invalid_argument("admm_u_subproblem: beta must be > 0");
  }

  double operator()(std::span<const double> u, std::span<double> grad) {
    model_.apply(u, residual_);
    double data = 0.0;
    for (std::size_t r = 0; r < residual_.size(); ++r) {
      residual_[r] -= y_[r];
      data += residual_[r] * residual_[r];
    }
    model_.adjoint(residual_, grad);
    double pen = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double w = u[j] - v_[j] + lambda_[j] / beta_;
      pen += w * w;
      grad[j] += beta_ * w;
    }
    return 0.5 * data + 0.5 * beta_ * pen;
  }

 private:
  const SparseModel& model_;
  std::span<const double> y_, v_, lambda_;
  double beta_;
  Vector residual_;
};

struct USubproblemResult {
  Vector u;
  LbfgsReport report;
};

inline USubproblemResult admm_u_subproblem(const SparseModel& model, std::span<const double> y,
                                           std::span<const double> v,
                                           std::span<const double> lambda, double beta,
                                           std::span<const double> warm_start,
                                           const LbfgsOptions& opts = {}) {
  AdmmUObjective objective(model, y, v, lambda, beta);
  if (warm_start.size() != model.num_cols())
    throw std::invalid_argument("admm_u_subproblem: warm start length mismatch");
  USubproblemResult res{Vector(warm_start.begin(), warm_start.end()), {}};
  res.report = lbfgs_minimize(objective, res.u, opts);
  return res;
}

}  // namespace pwbeam
