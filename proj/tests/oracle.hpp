#pragma once

// Dense reference implementations used as test oracles. They are written
// directly from the model definition (every sample against every pixel) and
// share no code with the sparse builder beyond the geometry primitives.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "pwbeam/geometry.hpp"

namespace oracle {

struct Dense {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;  // row-major

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  std::vector<double> mul(const std::vector<double>& x) const {
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) y[r] += (*this)(r, c) * x[c];
    return y;
  }
  std::vector<double> tmul(const std::vector<double>& y) const {
    std::vector<double> x(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) x[c] += (*this)(r, c) * y[r];
    return x;
  }
  // A^T A
  Dense gram() const {
    Dense g{cols, cols, std::vector<double>(cols * cols, 0.0)};
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < cols; ++i) {
        const double ai = (*this)(r, i);
        if (ai == 0.0) continue;
        for (std::size_t j = 0; j < cols; ++j) g(i, j) += ai * (*this)(r, j);
      }
    return g;
  }
};

// Forward model, row r = n*M + m, column = iz*num_x + ix.
inline Dense dense_model(const pwbeam::ProbeGeometry& probe, const pwbeam::ImagingGrid& grid,
                         pwbeam::PlaneWaveTx tx, const pwbeam::ApodizationSpec& apod,
                         std::size_t num_samples) {
  const std::size_t N = static_cast<std::size_t>(probe.num_elements);
  const std::size_t P = grid.num_z * grid.num_x;
  Dense d{num_samples * N, P, std::vector<double>(num_samples * N * P, 0.0)};
  const double ts = 1.0 / probe.sampling_freq;
  for (std::size_t n = 0; n < N; ++n) {
    const double xe = (static_cast<double>(n) - 0.5 * static_cast<double>(N - 1)) * probe.pitch;
    for (std::size_t m = 0; m < num_samples; ++m) {
      const double t = probe.time_offset + static_cast<double>(m) / probe.sampling_freq;
      std::vector<double> dt(P, -1.0);
      double t_max = 0.0;
      for (std::size_t iz = 0; iz < grid.num_z; ++iz)
        for (std::size_t ix = 0; ix < grid.num_x; ++ix) {
          const double z = grid.z0 + static_cast<double>(iz) * grid.dz;
          const double x = (static_cast<double>(ix) - 0.5 * static_cast<double>(grid.num_x - 1)) * grid.dx;
          const double tau = (z * std::cos(tx.angle) + x * std::sin(tx.angle)) / probe.sound_speed +
                             std::sqrt(z * z + (x - xe) * (x - xe)) / probe.sound_speed;
          const double e = std::abs(t - tau);
          if (e <= ts) {
            dt[iz * grid.num_x + ix] = e;
            t_max = std::max(t_max, e);
          }
        }
      for (std::size_t j = 0; j < P; ++j) {
        if (dt[j] < 0) continue;
        const std::size_t iz = j / grid.num_x, ix = j % grid.num_x;
        const double z = grid.z0 + static_cast<double>(iz) * grid.dz;
        const double x = (static_cast<double>(ix) - 0.5 * static_cast<double>(grid.num_x - 1)) * grid.dx;
        const double w = (t_max > 0 ? 1.0 - dt[j] / t_max : 1.0) *
                         pwbeam::apodization_weight({z, x}, xe, apod);
        d(n * num_samples + m, j) = static_cast<float>(w);
      }
    }
  }
  return d;
}

// Solves S x = b for symmetric positive definite S (Cholesky).
inline std::vector<double> spd_solve(Dense s, std::vector<double> b) {
  const std::size_t n = s.rows;
  for (std::size_t j = 0; j < n; ++j) {
    double d = s(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= s(j, k) * s(j, k);
    if (!(d > 0)) throw std::runtime_error("spd_solve: matrix not positive definite");
    s(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= s(i, k) * s(j, k);
      s(i, j) = v / s(j, j);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= s(i, k) * b[k];
    b[i] /= s(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= s(k, i) * b[k];
    b[i] /= s(i, i);
  }
  return b;
}

// (A^T A + beta I)^{-1} (A^T y + beta v - lambda)
inline std::vector<double> admm_u_solution(const Dense& a, const std::vector<double>& y,
                                           const std::vector<double>& v,
                                           const std::vector<double>& lambda, double beta) {
  Dense g = a.gram();
  for (std::size_t i = 0; i < g.rows; ++i) g(i, i) += beta;
  auto rhs = a.tmul(y);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += beta * v[i] - lambda[i];
  return spd_solve(std::move(g), std::move(rhs));
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s) / norm(b);
}

// 8-element probe and 16x16 grid used for dense checks.
inline pwbeam::ProbeGeometry small_probe() {
  pwbeam::ProbeGeometry p;
  p.num_elements = 8;
  p.pitch = 0.3e-3;
  p.sampling_freq = 10e6;
  p.center_freq = 3e6;
  p.sound_speed = 1540.0;
  return p;
}

inline pwbeam::ImagingGrid small_grid() {
  return pwbeam::ImagingGrid::with_default_spacing(small_probe(), 5e-3, 16, 16);
}

}  // namespace oracle
