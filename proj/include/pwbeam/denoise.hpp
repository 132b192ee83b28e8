#pragma once

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pwbeam/image.hpp"

namespace pwbeam {

struct NlmParams {
  int search_window = 21;
  int patch_window = 5;
  // Degree of smoothing and assumed noise std. When empty it is
  // smoothing_scale times the noise std estimated from the image.
  std::optional<double> smoothing_h;
  double smoothing_scale = 1.0;

  void validate() const {
    if (search_window < 3 || search_window % 2 == 0)
      throw std::invalid_argument("nlm: search_window must be odd and >= 3");
    if (patch_window < 3 || patch_window % 2 == 0)
      throw std::invalid_argument("nlm: patch_window must be odd and >= 3");
    if (patch_window > search_window)
      throw std::invalid_argument("nlm: patch_window must not exceed search_window");
    if (smoothing_h && !(*smoothing_h >= 0))
      throw std::invalid_argument("nlm: smoothing_h must be >= 0");
    if (!(smoothing_scale > 0 && std::isfinite(smoothing_scale)))
      throw std::invalid_argument("nlm: smoothing_scale must be > 0");
  }
};

// Fast noise std estimate: mean absolute response to the 3x3 mask
// [[1,-2,1],[-2,4,-2],[1,-2,1]] over interior pixels, scaled by
// sqrt(pi/2)/6. The mask annihilates affine images.
inline double estimate_noise_sigma(const Image2D& img) {
  const std::size_t h = img.num_z(), w = img.num_x();
  if (h < 3 || w < 3) throw std::invalid_argument("estimate_noise_sigma: image smaller than 3x3");
  std::vector<double> d2(h * w, 0.0);  // horizontal second difference
  for (std::size_t iz = 0; iz < h; ++iz)
    for (std::size_t ix = 1; ix + 1 < w; ++ix)
      d2[iz * w + ix] = img(iz, ix - 1) - 2.0 * img(iz, ix) + img(iz, ix + 1);
  double sum = 0.0;
  for (std::size_t iz = 1; iz + 1 < h; ++iz)
    for (std::size_t ix = 1; ix + 1 < w; ++ix)
      sum += std::abs(d2[(iz - 1) * w + ix] - 2.0 * d2[iz * w + ix] + d2[(iz + 1) * w + ix]);
  return std::sqrt(std::numbers::pi / 2.0) * sum /
         (6.0 * static_cast<double>(w - 2) * static_cast<double>(h - 2));
}

namespace detail {

// Half-sample symmetric reflection of an arbitrary index into [0, n).
inline std::size_t mirror_index(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t k = i % period;
  if (k < 0) k += period;
  if (k >= static_cast<std::ptrdiff_t>(n)) k = period - 1 - k;
  return static_cast<std::size_t>(k);
}

}  // namespace detail

// Non-local means. Each output pixel is the weighted mean of the pixels in
// its search window with weights exp(-max(d^2 - 2h^2, 0) / h^2), d^2 being
// the mean squared difference between the two patches. Borders use mirror
// padding. h = 0 returns the input unchanged.
inline Image2D nlm_denoise(const Image2D& img, const NlmParams& params) {
  params.validate();
  const double h =
      params.smoothing_h ? *params.smoothing_h : params.smoothing_scale * estimate_noise_sigma(img);
  if (!(h > 0)) return img;

  const std::size_t nz = img.num_z(), nx = img.num_x();
  const int R = params.search_window / 2;
  const int r = params.patch_window / 2;
  const int pad = R + r;
  const std::size_t pz = nz + 2 * pad, px = nx + 2 * pad;
  std::vector<double> padded(pz * px);
  for (std::size_t a = 0; a < pz; ++a) {
    const auto sz = detail::mirror_index(static_cast<std::ptrdiff_t>(a) - pad, nz);
    for (std::size_t b = 0; b < px; ++b)
      padded[a * px + b] = img(sz, detail::mirror_index(static_cast<std::ptrdiff_t>(b) - pad, nx));
  }

  // Squared differences are needed on the patch support of every output
  // pixel: a (nz + 2r) x (nx + 2r) region starting at padded (R, R).
  const std::size_t rz = nz + 2 * r, rx = nx + 2 * r;
  std::vector<double> diff(rz * rx), hsum(rz * nx);
  std::vector<double> num(nz * nx, 0.0), den(nz * nx, 0.0);
  const double inv_h2 = 1.0 / (h * h);
  const double offset = 2.0 * h * h;
  const double inv_patch = 1.0 / static_cast<double>((2 * r + 1) * (2 * r + 1));

  for (int oz = -R; oz <= R; ++oz) {
    for (int ox = -R; ox <= R; ++ox) {
      for (std::size_t a = 0; a < rz; ++a) {
        const double* p0 = &padded[(a + R) * px + R];
        const double* p1 = &padded[(a + R + oz) * px + R + ox];
        for (std::size_t b = 0; b < rx; ++b) {
          const double e = p0[b] - p1[b];
          diff[a * rx + b] = e * e;
        }
      }
      for (std::size_t a = 0; a < rz; ++a)
        for (std::size_t ix = 0; ix < nx; ++ix) {
          double s = 0.0;
          for (int k = 0; k <= 2 * r; ++k) s += diff[a * rx + ix + k];
          hsum[a * nx + ix] = s;
        }
      for (std::size_t iz = 0; iz < nz; ++iz) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
          double s = 0.0;
          for (int k = 0; k <= 2 * r; ++k) s += hsum[(iz + k) * nx + ix];
          const double d2 = s * inv_patch;
          const double wgt = std::exp(-std::max(d2 - offset, 0.0) * inv_h2);
          const double val = padded[(iz + pad + oz) * px + ix + pad + ox];
          num[iz * nx + ix] += wgt * val;
          den[iz * nx + ix] += wgt;
        }
      }
    }
  }

  Image2D out(nz, nx);
  for (std::size_t i = 0; i < nz * nx; ++i) out.values()[i] = num[i] / den[i];
  return out;
}

}  // namespace pwbeam
