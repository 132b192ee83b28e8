#pragma once

// Envelope detection, log compression and image-quality metrics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "pwbeam/geometry.hpp"
#include "pwbeam/image.hpp"

namespace pwbeam {

// Magnitude of the analytic signal of each lateral column, computed with a
// full-length DFT: negative frequencies zeroed, positive ones doubled, DC
// and (for even lengths) Nyquist kept.
inline Image2D envelope(const Image2D& rf) {
  const std::size_t n = rf.num_z();
  if (n < 4) throw std::invalid_argument("envelope: need at least 4 axial samples");
  using cplx = std::complex<double>;
  std::vector<cplx> twiddle(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddle[k] = {std::cos(a), std::sin(a)};
  }
  std::vector<double> gain(n, 0.0);
  gain[0] = 1.0;
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) gain[k] = 2.0;
  if (n % 2 == 0) gain[half] = 1.0;

  Image2D env(n, rf.num_x());
  std::vector<cplx> spec(n);
  for (std::size_t ix = 0; ix < rf.num_x(); ++ix) {
    for (std::size_t k = 0; k < n; ++k) {
      cplx acc = 0.0;
      if (gain[k] != 0.0) {
        std::size_t idx = 0;
        for (std::size_t t = 0; t < n; ++t) {
          acc += rf(t, ix) * twiddle[idx];
          idx += k;
          if (idx >= n) idx -= n;
        }
      }
      spec[k] = acc * gain[k];
    }
    for (std::size_t t = 0; t < n; ++t) {
      cplx acc = 0.0;
      std::size_t idx = 0;
      for (std::size_t k = 0; k < n; ++k) {
        if (gain[k] != 0.0) acc += spec[k] * std::conj(twiddle[idx]);
        idx += t;
        if (idx >= n) idx -= n;
      }
      env(t, ix) = std::abs(acc) / static_cast<double>(n);
    }
  }
  return env;
}

struct BModeImage {
  Image2D db;
  double dynamic_range = 60.0;
};

inline BModeImage log_compress(const Image2D& env, double dynamic_range = 60.0) {
  if (!(dynamic_range > 0)) throw std::invalid_argument("log_compress: dynamic range must be > 0");
  double peak = 0.0;
  for (double v : env.values()) peak = std::max(peak, v);
  if (!(peak > 0)) throw std::invalid_argument("log_compress: envelope is all zero");
  BModeImage out{Image2D(env.num_z(), env.num_x()), dynamic_range};
  for (std::size_t i = 0; i < env.size(); ++i) {
    const double v = env.values()[i];
    const double db = v > 0 ? 20.0 * std::log10(v / peak) : -dynamic_range;
    out.db.values()[i] = std::clamp(db, -dynamic_range, 0.0);
  }
  return out;
}

enum class Axis { axial, lateral };

// Full width at half maximum (mm) of the profile through `peak` along
// `axis`; crossings located by linear interpolation between samples.
inline double fwhm(const Image2D& env, const ImagingGrid& grid, std::size_t peak_z,
                   std::size_t peak_x, Axis axis) {
  const bool axial = axis == Axis::axial;
  const std::size_t len = axial ? env.num_z() : env.num_x();
  const std::size_t pk = axial ? peak_z : peak_x;
  if (peak_z >= env.num_z() || peak_x >= env.num_x())
    throw std::invalid_argument("fwhm: peak outside image");
  auto sample = [&](std::size_t i) { return axial ? env(i, peak_x) : env(peak_z, i); };
  const double peak = sample(pk);
  const double half = 0.5 * peak;
  if (!(peak > 0)) throw std::runtime_error("fwhm: unresolved target");

  // Fractional sample offset of the half-max crossing on each side.
  double right = 0.0;
  {
    std::size_t i = pk;
    while (i + 1 < len && sample(i + 1) >= half) ++i;
    if (i + 1 >= len) throw std::runtime_error("fwhm: unresolved target");
    const double a = sample(i), b = sample(i + 1);
    right = static_cast<double>(i - pk) + (a - half) / (a - b);
  }
  double left = 0.0;
  {
    std::size_t i = pk;
    while (i > 0 && sample(i - 1) >= half) --i;
    if (i == 0) throw std::runtime_error("fwhm: unresolved target");
    const double a = sample(i), b = sample(i - 1);
    left = static_cast<double>(pk - i) + (a - half) / (a - b);
  }
  const double step = axial ? grid.dz : grid.dx;
  return (left + right) * step * 1e3;
}

struct DiskRegion {
  double z, x, radius;
};
struct RectRegion {
  double z0, z1, x0, x1;
};
struct AnnulusRegion {
  double z, x, r_inner, r_outer;
};
using RegionSpec = std::variant<DiskRegion, RectRegion, AnnulusRegion>;

// Pixel indices whose centers fall in the region (boundaries inclusive).
inline std::vector<std::size_t> region_pixels(const RegionSpec& region, const ImagingGrid& grid) {
  std::vector<std::size_t> idx;
  for (std::size_t iz = 0; iz < grid.num_z; ++iz) {
    for (std::size_t ix = 0; ix < grid.num_x; ++ix) {
      const double z = grid.z(iz), x = grid.x(ix);
      const bool in = std::visit(
          [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, DiskRegion>) {
              return std::hypot(z - r.z, x - r.x) <= r.radius;
            } else if constexpr (std::is_same_v<T, RectRegion>) {
              return z >= r.z0 && z <= r.z1 && x >= r.x0 && x <= r.x1;
            } else {
              const double d = std::hypot(z - r.z, x - r.x);
              return d >= r.r_inner && d <= r.r_outer;
            }
          },
          region);
      if (in) idx.push_back(grid.index(iz, ix));
    }
  }
  if (idx.empty()) throw std::invalid_argument("region has no pixels on the grid");
  return idx;
}

inline std::vector<double> gather(const Image2D& img, const std::vector<std::size_t>& idx) {
  std::vector<double> v;
  v.reserve(idx.size());
  for (auto i : idx) v.push_back(img.values()[i]);
  return v;
}

struct MeanStd {
  double mean;
  double std;  // sample (n-1) standard deviation
};

inline MeanStd mean_std(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean_std: empty sample");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

// 20 log10(|mu_roi - mu_bg| / sqrt((s_roi^2 + s_bg^2) / 2)).
inline double cnr_from_samples(const std::vector<double>& roi, const std::vector<double>& bg) {
  const auto a = mean_std(roi), b = mean_std(bg);
  const double pooled = std::sqrt(0.5 * (a.std * a.std + b.std * b.std));
  if (!(pooled > 0)) throw std::domain_error("cnr: zero pooled variance");
  const double contrast = std::abs(a.mean - b.mean);
  if (contrast == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(contrast / pooled);
}

inline double cnr(const Image2D& env, const ImagingGrid& grid, const RegionSpec& roi,
                  const RegionSpec& bg) {
  return cnr_from_samples(gather(env, region_pixels(roi, grid)), gather(env, region_pixels(bg, grid)));
}

// 1 - sum_b min(p_roi(b), p_bg(b)) over shared equal-width bins spanning
// the joint range. Overlap is accumulated in integer counts so identical
// and disjoint samples give exactly 0 and 1.
inline double gcnr_from_samples(const std::vector<double>& roi, const std::vector<double>& bg,
                                int num_bins = 100) {
  if (roi.empty() || bg.empty()) throw std::invalid_argument("gcnr: empty region");
  if (num_bins < 2) throw std::invalid_argument("gcnr: need at least 2 bins");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : roi) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : bg) lo = std::min(lo, v), hi = std::max(hi, v);
  const auto bins = static_cast<std::size_t>(num_bins);
  auto bin_of = [&](double v) -> std::size_t {
    if (!(hi > lo)) return 0;
    const double f = (v - lo) / (hi - lo) * static_cast<double>(bins);
    return std::min(static_cast<std::size_t>(std::max(f, 0.0)), bins - 1);
  };
  std::vector<std::uint64_t> ca(bins, 0), cb(bins, 0);
  for (double v : roi) ++ca[bin_of(v)];
  for (double v : bg) ++cb[bin_of(v)];
  const std::uint64_t na = roi.size(), nb = bg.size();
  std::uint64_t overlap = 0;  // in units of 1 / (na * nb)
  for (std::size_t b = 0; b < bins; ++b) overlap += std::min(ca[b] * nb, cb[b] * na);
  return 1.0 - static_cast<double>(overlap) / (static_cast<double>(na) * static_cast<double>(nb));
}

inline double gcnr(const Image2D& env, const ImagingGrid& grid, const RegionSpec& roi,
                   const RegionSpec& bg, int num_bins = 100) {
  return gcnr_from_samples(gather(env, region_pixels(roi, grid)), gather(env, region_pixels(bg, grid)),
                           num_bins);
}

struct KsResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  bool pass = false;
  std::size_t n = 0;         // samples used
  std::size_t excluded = 0;  // nonpositive samples dropped
  double sigma = 0.0;        // fitted Rayleigh scale
};

// Asymptotic Kolmogorov critical coefficient sqrt(-ln(alpha/2)/2);
// 1.358 at alpha = 0.05.
inline double ks_critical_coefficient(double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("ks: alpha must be in (0,1)");
  return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

// One-sample KS test against a Rayleigh law with maximum-likelihood scale.
inline KsResult ks_rayleigh_from_samples(std::vector<double> samples, double alpha = 0.05) {
  KsResult res;
  const auto before = samples.size();
  std::erase_if(samples, [](double v) { return !(v > 0); });
  res.excluded = before - samples.size();
  res.n = samples.size();
  if (res.n < 50) throw std::invalid_argument("ks_rayleigh_test: need at least 50 positive samples");
  std::sort(samples.begin(), samples.end());
  double sum_sq = 0.0;
  for (double v : samples) sum_sq += v * v;
  const double n = static_cast<double>(res.n);
  const double two_sigma2 = sum_sq / n;  // 2 sigma^2 = sum r^2 / n
  res.sigma = std::sqrt(0.5 * two_sigma2);
  double d = 0.0;
  for (std::size_t i = 0; i < res.n; ++i) {
    const double cdf = 1.0 - std::exp(-samples[i] * samples[i] / two_sigma2);
    d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  res.statistic = d;
  res.critical_value = ks_critical_coefficient(alpha) / std::sqrt(n);
  res.pass = d < res.critical_value;
  return res;
}

inline KsResult ks_rayleigh_test(const Image2D& env, const ImagingGrid& grid,
                                 const RegionSpec& region, double alpha = 0.05) {
  return ks_rayleigh_from_samples(gather(env, region_pixels(region, grid)), alpha);
}

}  // namespace pwbeam
