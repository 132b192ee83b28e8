#pragma once

// Synthetic reflectivity scenes and channel-data simulation through the
// sparse model with additive white Gaussian noise.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "pwbeam/geometry.hpp"
#include "pwbeam/image.hpp"
#include "pwbeam/sparse_model.hpp"

namespace pwbeam {

struct PointTarget {
  double z = 0.0;  // m
  double x = 0.0;  // m
  double amplitude = 1.0;
};

struct Cyst {
  double z = 0.0;  // center, m
  double x = 0.0;
  double radius = 1e-3;
};

struct SpeckleSpec {
  bool enabled = true;
  double amplitude_std = 1.0;
};

struct PulseSpec {
  double center_freq = 4e6;         // Hz
  double fractional_bandwidth = 0.5;  // -6 dB
};

struct PhantomSpec {
  std::vector<PointTarget> point_targets;
  std::vector<Cyst> cysts;
  SpeckleSpec speckle;
  PulseSpec pulse;
  std::uint64_t rng_seed = 1;

  void validate(const ImagingGrid& grid) const {
    for (const auto& c : cysts) {
      if (!(c.radius > 0)) throw std::invalid_argument("phantom: cyst radius must be > 0");
      if (c.z < grid.z0 || c.z > grid.z_max() || c.x < grid.x_min() || c.x > grid.x_max())
        throw std::invalid_argument("phantom: cyst center outside the imaging grid");
    }
    if (!(pulse.fractional_bandwidth > 0 && pulse.fractional_bandwidth < 2))
      throw std::invalid_argument("phantom: fractional bandwidth must be in (0, 2)");
    if (!(pulse.center_freq > 0)) throw std::invalid_argument("phantom: pulse frequency must be > 0");
    if (!(speckle.amplitude_std >= 0)) throw std::invalid_argument("phantom: amplitude_std must be >= 0");
  }
};

// Gaussian-modulated cosine sampled on the two-way axial time step
// 2*dz/c, centered on tap `half`. Truncated where the envelope drops below
// 1e-4.
inline std::vector<double> axial_pulse(const PulseSpec& pulse, double dz, double sound_speed,
                                       std::size_t* half_length = nullptr) {
  const double dt = 2.0 * dz / sound_speed;
  // -6 dB full bandwidth B*f0 of a Gaussian spectrum: sigma_f = B f0 / (2 sqrt(2 ln 2)).
  const double sigma_f = pulse.fractional_bandwidth * pulse.center_freq /
                         (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const double sigma_t = 1.0 / (2.0 * std::numbers::pi * sigma_f);
  const double t_cut = sigma_t * std::sqrt(2.0 * std::log(1e4));
  const auto half = static_cast<std::size_t>(std::ceil(t_cut / dt));
  std::vector<double> taps(2 * half + 1);
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const double t = (static_cast<double>(k) - static_cast<double>(half)) * dt;
    taps[k] = std::exp(-0.5 * t * t / (sigma_t * sigma_t)) *
              std::cos(2.0 * std::numbers::pi * pulse.center_freq * t);
  }
  if (half_length) *half_length = half;
  return taps;
}

inline bool inside_any_cyst(const std::vector<Cyst>& cysts, double z, double x) {
  for (const auto& c : cysts) {
    const double dz = z - c.z, dx = x - c.x;
    if (dz * dz + dx * dx < c.radius * c.radius) return true;
  }
  return false;
}

// Scatterer map before pulse shaping: speckle, zeroed cysts, point
// impulses snapped to the nearest pixel.
inline Image2D scatterer_map(const PhantomSpec& spec, const ImagingGrid& grid) {
  grid.validate();
  spec.validate(grid);
  Image2D base(grid.num_z, grid.num_x, 0.0);
  if (spec.speckle.enabled && spec.speckle.amplitude_std > 0) {
    std::mt19937_64 rng(spec.rng_seed);
    std::normal_distribution<double> normal(0.0, spec.speckle.amplitude_std);
    for (std::size_t iz = 0; iz < grid.num_z; ++iz)
      for (std::size_t ix = 0; ix < grid.num_x; ++ix) base(iz, ix) = normal(rng);
  }
  if (!spec.cysts.empty()) {
    for (std::size_t iz = 0; iz < grid.num_z; ++iz)
      for (std::size_t ix = 0; ix < grid.num_x; ++ix)
        if (inside_any_cyst(spec.cysts, grid.z(iz), grid.x(ix))) base(iz, ix) = 0.0;
  }
  for (const auto& t : spec.point_targets) {
    const double fz = std::round((t.z - grid.z0) / grid.dz);
    const double fx = std::round(t.x / grid.dx + 0.5 * static_cast<double>(grid.num_x - 1));
    if (fz < 0 || fx < 0 || fz >= static_cast<double>(grid.num_z) ||
        fx >= static_cast<double>(grid.num_x))
      throw std::invalid_argument("phantom: point target outside the imaging grid");
    base(static_cast<std::size_t>(fz), static_cast<std::size_t>(fx)) += t.amplitude;
  }
  return base;
}

// Scatterer map convolved axially, per column, with the transmit pulse.
inline Vector make_reflectivity(const PhantomSpec& spec, const ImagingGrid& grid,
                                double sound_speed) {
  const Image2D base = scatterer_map(spec, grid);
  std::size_t half = 0;
  const auto taps = axial_pulse(spec.pulse, grid.dz, sound_speed, &half);
  Vector out(grid.num_pixels(), 0.0);
  const auto nz = static_cast<std::ptrdiff_t>(grid.num_z);
  const auto h = static_cast<std::ptrdiff_t>(half);
  for (std::size_t ix = 0; ix < grid.num_x; ++ix) {
    for (std::ptrdiff_t iz = 0; iz < nz; ++iz) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -h; k <= h; ++k) {
        const std::ptrdiff_t src = iz - k;
        if (src < 0 || src >= nz) continue;
        acc += taps[static_cast<std::size_t>(k + h)] * base(static_cast<std::size_t>(src), ix);
      }
      out[grid.index(static_cast<std::size_t>(iz), ix)] = acc;
    }
  }
  return out;
}

// Pre-beamformed samples of one plane-wave transmit. Stored as M x N
// single-precision values, sample-major (index m*N + n), as recorded.
struct ChannelData {
  std::size_t num_samples = 0;   // M
  std::size_t num_elements = 0;  // N
  double sampling_freq = 0.0;
  double time_offset = 0.0;
  double angle = 0.0;
  std::vector<float> samples;

  float at(std::size_t m, std::size_t n) const { return samples[m * num_elements + n]; }

  // Element-major vector matching the model row order (r = n*M + m).
  Vector to_model_vector() const {
    Vector y(num_samples * num_elements);
    for (std::size_t m = 0; m < num_samples; ++m)
      for (std::size_t n = 0; n < num_elements; ++n)
        y[n * num_samples + m] = samples[m * num_elements + n];
    return y;
  }

  static ChannelData from_model_vector(std::span<const double> y, std::size_t num_samples,
                                       std::size_t num_elements) {
    if (y.size() != num_samples * num_elements)
      throw std::invalid_argument("ChannelData: vector length mismatch");
    ChannelData d;
    d.num_samples = num_samples;
    d.num_elements = num_elements;
    d.samples.resize(y.size());
    for (std::size_t m = 0; m < num_samples; ++m)
      for (std::size_t n = 0; n < num_elements; ++n)
        d.samples[m * num_elements + n] = static_cast<float>(y[n * num_samples + m]);
    return d;
  }
};

inline double rms(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// y = Phi x + noise with 20 log10(rms(Phi x) / noise_std) = snr_db.
// snr_db = +inf gives noiseless data.
inline ChannelData simulate_channel_data(const SparseModel& model, std::span<const double> x,
                                         double snr_db, std::uint64_t seed,
                                         const ProbeGeometry& probe, PlaneWaveTx tx) {
  if (x.size() != model.num_cols())
    throw std::invalid_argument("simulate_channel_data: image length does not match model");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("simulate_channel_data: snr_db must be a number > -inf");
  Vector y = model.apply(x);
  if (std::isfinite(snr_db)) {
    const double noise_std = rms(y) / std::pow(10.0, snr_db / 20.0);
    if (noise_std > 0) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal(0.0, noise_std);
      for (double& v : y) v += normal(rng);
    }
  }
  ChannelData d = ChannelData::from_model_vector(y, model.num_samples(), model.num_elements());
  d.sampling_freq = probe.sampling_freq;
  d.time_offset = probe.time_offset;
  d.angle = tx.angle;
  return d;
}

}  // namespace pwbeam
