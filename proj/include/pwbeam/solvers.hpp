#pragma once

// Beamformers on the sparse model: delay-and-sum backprojection and three
// ADMM variants that differ only in the v-update (l1 soft-thresholding,
// plug-and-play denoising, regularization by denoising), plus coherent
// compounding across transmit angles.

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwbeam/denoise.hpp"
#include "pwbeam/geometry.hpp"
#include "pwbeam/image.hpp"
#include "pwbeam/optim.hpp"
#include "pwbeam/phantom.hpp"
#include "pwbeam/sparse_model.hpp"

namespace pwbeam {

struct SolverConfig {
  double mu = 0.0;     // regularizer weight; unused by PnP
  double beta = 1000.0;
  double eps = 1e-3;
  int max_outer_iters = 50;
  int red_inner_K = 1;
  LbfgsOptions lbfgs;
  NlmParams nlm;

  void validate() const {
    if (!(mu >= 0)) throw std::invalid_argument("solver: mu must be >= 0");
    if (!(beta > 0)) throw std::invalid_argument("solver: beta must be > 0");
    if (!(eps > 0)) throw std::invalid_argument("solver: eps must be > 0");
    if (max_outer_iters < 1) throw std::invalid_argument("solver: max_outer_iters must be >= 1");
    if (red_inner_K < 1) throw std::invalid_argument("solver: K must be >= 1");
    lbfgs.validate();
    nlm.validate();
  }
};

enum class Termination { eps, max_iters };

inline const char* to_string(Termination t) {
  return t == Termination::eps ? "eps" : "max_iters";
}

struct SolverReport {
  std::string method;
  int iterations = 0;
  // Objective after each outer iteration (ADMM, RED) or ||v_new - v_old||
  // (PnP), and the relative change compared against eps.
  std::vector<double> value;
  std::vector<double> rel_change;
  std::vector<double> residual;  // ||u - v||_2
  Termination termination = Termination::max_iters;
  int inner_iterations = 0;
  int line_search_failures = 0;

  std::string to_text() const {
    std::ostringstream os;
    char buf[160];
    os << "# method " << method << "\n";
    os << "# termination " << to_string(termination) << "\n";
    os << "# iterations " << iterations << "\n";
    os << "# inner_iterations " << inner_iterations << "\n";
    os << "# line_search_failures " << line_search_failures << "\n";
    os << "iteration value rel_change residual\n";
    for (std::size_t i = 0; i < value.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %.17g\n", i + 1, value[i], rel_change[i],
                    residual[i]);
      os << buf;
    }
    return os.str();
  }
};

struct RfImage {
  ImagingGrid grid;
  Vector values;

  Image2D image() const { return Image2D(grid.num_z, grid.num_x, values); }
};

struct BeamformResult {
  RfImage image;
  SolverReport report;
};

using Denoiser = std::function<Vector(std::span<const double>)>;

inline Denoiser make_nlm_denoiser(const ImagingGrid& grid, const NlmParams& params) {
  return [grid, params](std::span<const double> v) {
    Image2D img(grid.num_z, grid.num_x, Vector(v.begin(), v.end()));
    return nlm_denoise(img, params).values();
  };
}

inline Vector identity_denoiser(std::span<const double> v) { return Vector(v.begin(), v.end()); }

namespace detail {

inline void check_problem(const SparseModel& model, const ImagingGrid& grid,
                          std::span<const double> y) {
  if (grid.num_pixels() != model.num_cols())
    throw std::invalid_argument("beamform: grid does not match model columns");
  if (y.size() != model.num_rows())
    throw std::invalid_argument("beamform: channel data does not match model rows");
}

inline Vector channel_vector(const SparseModel& model, const ChannelData& data) {
  if (data.num_samples != model.num_samples() || data.num_elements != model.num_elements())
    throw std::invalid_argument("beamform: channel data dimensions do not match model");
  return data.to_model_vector();
}

inline double sq_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

inline double relative_change(double now, double before) {
  if (before == 0.0) return now == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(now - before) / std::abs(before);
}

enum class StopRule { objective, iterate_change };

// Outer loop shared by the ADMM, PnP and RED solvers, zero initialized.
// v_step(u, v, lambda) -> v_new; regularizer(v) -> value added to the
// objective (ignored by the iterate-change rule).
template <class VStep, class Regularizer>
BeamformResult run_admm(const SparseModel& model, const ImagingGrid& grid,
                        std::span<const double> y, const SolverConfig& cfg, std::string method,
                        VStep&& v_step, Regularizer&& regularizer, StopRule rule) {
  cfg.validate();
  check_problem(model, grid, y);
  const std::size_t p = model.num_cols();
  const double beta = cfg.beta;
  Vector u(p, 0.0), v(p, 0.0), lambda(p, 0.0), r(model.num_rows());
  SolverReport rep;
  rep.method = std::move(method);

  double prev = 0.5 * sq_norm(y);
  for (int it = 0; it < cfg.max_outer_iters; ++it) {
    auto sub = admm_u_subproblem(model, y, v, lambda, beta, u, cfg.lbfgs);
    u = std::move(sub.u);
    rep.inner_iterations += sub.report.iterations;
    if (sub.report.status == LbfgsStatus::line_search_failed) ++rep.line_search_failures;

    Vector v_new = v_step(std::span<const double>(u), std::span<const double>(v),
                          std::span<const double>(lambda));
    double split = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double d = u[j] - v_new[j];
      lambda[j] += beta * d;
      split += d * d;
    }

    double value = 0.0, rel = 0.0;
    if (rule == StopRule::objective) {
      model.apply(u, r);
      double data = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) data += (y[i] - r[i]) * (y[i] - r[i]);
      double pen = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double w = u[j] - v_new[j] + lambda[j] / beta;
        pen += w * w;
      }
      value = 0.5 * data + regularizer(std::span<const double>(v_new)) + 0.5 * beta * pen;
      rel = relative_change(value, prev);
      prev = value;
    } else {
      double diff = 0.0;
      for (std::size_t j = 0; j < p; ++j) diff += (v_new[j] - v[j]) * (v_new[j] - v[j]);
      value = std::sqrt(diff);
      const double base = std::sqrt(sq_norm(v));
      rel = base > 0 ? value / base
                     : (value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    }
    v = std::move(v_new);

    ++rep.iterations;
    rep.value.push_back(value);
    rep.rel_change.push_back(rel);
    rep.residual.push_back(std::sqrt(split));
    if (rel <= cfg.eps) {
      rep.termination = Termination::eps;
      break;
    }
  }
  return {RfImage{grid, std::move(v)}, std::move(rep)};
}

}  // namespace detail

// Backprojection normalized by the per-pixel weight sum; pixels that no
// sample sees are set to 0.
inline RfImage das_beamform(const SparseModel& model, const ImagingGrid& grid,
                            std::span<const double> y) {
  detail::check_problem(model, grid, y);
  Vector x = model.adjoint(y);
  const Vector s = model.column_norm_weights();
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = s[j] > 0 ? x[j] / s[j] : 0.0;
  return {grid, std::move(x)};
}

inline RfImage das_beamform(const SparseModel& model, const ImagingGrid& grid,
                            const ChannelData& data) {
  return das_beamform(model, grid, detail::channel_vector(model, data));
}

inline double soft_threshold(double w, double tau) {
  const double mag = std::max(std::abs(w) - tau, 0.0);
  return w > 0 ? mag : (w < 0 ? -mag : 0.0);
}

inline Vector soft_threshold(std::span<const double> w, double tau) {
  if (!(tau >= 0)) throw std::invalid_argument("soft_threshold: tau must be >= 0");
  Vector out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = soft_threshold(w[i], tau);
  return out;
}

inline BeamformResult admm_beamform(const SparseModel& model, const ImagingGrid& grid,
                                    std::span<const double> y, const SolverConfig& cfg) {
  const double mu = cfg.mu, beta = cfg.beta;
  auto v_step = [&](std::span<const double> u, std::span<const double>,
                    std::span<const double> lambda) {
    Vector w(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) w[j] = u[j] + lambda[j] / beta;
    return soft_threshold(w, mu / beta);
  };
  auto l1 = [&](std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += std::abs(x);
    return mu * acc;
  };
  return detail::run_admm(model, grid, y, cfg, "admm", v_step, l1, detail::StopRule::objective);
}

// The denoiser replaces the proximal step. There is no explicit objective,
// so iteration stops on the relative change of v.
inline BeamformResult pnp_beamform(const SparseModel& model, const ImagingGrid& grid,
                                   std::span<const double> y, const SolverConfig& cfg,
                                   const Denoiser& denoiser) {
  const double beta = cfg.beta;
  auto v_step = [&](std::span<const double> u, std::span<const double>,
                    std::span<const double> lambda) {
    Vector w(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) w[j] = u[j] + lambda[j] / beta;
    return denoiser(w);
  };
  auto none = [](std::span<const double>) { return 0.0; };
  return detail::run_admm(model, grid, y, cfg, "pnp", v_step, none,
                          detail::StopRule::iterate_change);
}

inline BeamformResult pnp_beamform(const SparseModel& model, const ImagingGrid& grid,
                                   std::span<const double> y, const SolverConfig& cfg) {
  return pnp_beamform(model, grid, y, cfg, make_nlm_denoiser(grid, cfg.nlm));
}

// K fixed-point steps z <- (mu F(z) + beta u + lambda) / (mu + beta),
// starting from the previous v.
inline Vector red_v_update(std::span<const double> u, std::span<const double> v_prev,
                           std::span<const double> lambda, double mu, double beta, int K,
                           const Denoiser& denoiser) {
  if (!(mu > 0) || !(beta > 0) || K < 1)
    throw std::invalid_argument("red_v_update: need mu > 0, beta > 0, K >= 1");
  if (u.size() != v_prev.size() || u.size() != lambda.size())
    throw std::invalid_argument("red_v_update: shape mismatch");
  Vector z(v_prev.begin(), v_prev.end());
  const double inv = 1.0 / (mu + beta);
  for (int k = 0; k < K; ++k) {
    const Vector fz = denoiser(z);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = (mu * fz[j] + beta * u[j] + lambda[j]) * inv;
  }
  return z;
}

// rho(x) = 1/2 x^T (x - F(x)).
inline double red_regularizer(std::span<const double> x, const Denoiser& denoiser) {
  const Vector fx = denoiser(x);
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) acc += x[j] * (x[j] - fx[j]);
  return 0.5 * acc;
}

inline BeamformResult red_beamform(const SparseModel& model, const ImagingGrid& grid,
                                   std::span<const double> y, const SolverConfig& cfg,
                                   const Denoiser& denoiser) {
  if (!(cfg.mu > 0)) throw std::invalid_argument("red_beamform: mu must be > 0");
  auto v_step = [&](std::span<const double> u, std::span<const double> v,
                    std::span<const double> lambda) {
    return red_v_update(u, v, lambda, cfg.mu, cfg.beta, cfg.red_inner_K, denoiser);
  };
  auto rho = [&](std::span<const double> v) { return cfg.mu * red_regularizer(v, denoiser); };
  return detail::run_admm(model, grid, y, cfg, "red", v_step, rho, detail::StopRule::objective);
}

inline BeamformResult red_beamform(const SparseModel& model, const ImagingGrid& grid,
                                   std::span<const double> y, const SolverConfig& cfg) {
  return red_beamform(model, grid, y, cfg, make_nlm_denoiser(grid, cfg.nlm));
}

enum class Method { das, admm, pnp, red };

inline Method method_from_string(const std::string& s) {
  if (s == "das") return Method::das;
  if (s == "admm") return Method::admm;
  if (s == "pnp") return Method::pnp;
  if (s == "red") return Method::red;
  throw std::invalid_argument("unknown solver '" + s + "' (expected das|admm|pnp|red)");
}

inline const char* to_string(Method m) {
  switch (m) {
    case Method::das: return "das";
    case Method::admm: return "admm";
    case Method::pnp: return "pnp";
    case Method::red: return "red";
  }
  return "?";
}

inline BeamformResult beamform(Method method, const SparseModel& model, const ImagingGrid& grid,
                               std::span<const double> y, const SolverConfig& cfg) {
  switch (method) {
    case Method::das: {
      BeamformResult res{das_beamform(model, grid, y), {}};
      res.report.method = "das";
      res.report.termination = Termination::eps;
      return res;
    }
    case Method::admm: return admm_beamform(model, grid, y, cfg);
    case Method::pnp: return pnp_beamform(model, grid, y, cfg);
    case Method::red: return red_beamform(model, grid, y, cfg);
  }
  throw std::logic_error("beamform: bad method");
}

// Pixelwise mean of per-angle RF reconstructions.
inline RfImage cpwc_compound(const std::vector<RfImage>& images) {
  if (images.empty()) throw std::invalid_argument("cpwc_compound: no images");
  RfImage out{images.front().grid, Vector(images.front().values.size(), 0.0)};
  for (const auto& img : images) {
    if (!(img.grid == out.grid) || img.values.size() != out.values.size())
      throw std::invalid_argument("cpwc_compound: grid mismatch");
    for (std::size_t j = 0; j < out.values.size(); ++j) out.values[j] += img.values[j];
  }
  const auto count = static_cast<double>(images.size());
  for (double& v : out.values) v /= count;
  return out;
}

}  // namespace pwbeam
