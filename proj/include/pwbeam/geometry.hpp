#pragma once

// Linear-array probe and beamforming grid descriptions, plane-wave
// propagation delays and receive apodization.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwbeam {

struct ProbeGeometry {
  int num_elements = 64;
  double pitch = 0.3e-3;          // m
  double sampling_freq = 10e6;    // Hz
  double center_freq = 4e6;       // Hz
  double sound_speed = 1540.0;    // m/s
  double time_offset = 0.0;       // s, time of sample index 0

  void validate() const {
    if (num_elements < 1) throw std::invalid_argument("probe: num_elements must be >= 1");
    if (!(pitch > 0)) throw std::invalid_argument("probe: pitch must be > 0");
    if (!(sampling_freq > 0)) throw std::invalid_argument("probe: sampling_freq must be > 0");
    if (!(sound_speed > 0)) throw std::invalid_argument("probe: sound_speed must be > 0");
    if (!std::isfinite(time_offset)) throw std::invalid_argument("probe: time_offset must be finite");
  }

  friend bool operator==(const ProbeGeometry&, const ProbeGeometry&) = default;
};

// Pixel centers: z(iz) = z0 + iz*dz, x(ix) = (ix - (num_x-1)/2)*dx, so the
// lateral extent is centered on the probe axis. Pixels are vectorized
// axial-major: index = iz*num_x + ix.
struct ImagingGrid {
  double z0 = 10e-3;
  std::size_t num_z = 256;
  std::size_t num_x = 64;
  double dz = 77e-6;
  double dx = 0.3e-3;

  std::size_t num_pixels() const { return num_z * num_x; }
  double z(std::size_t iz) const { return z0 + static_cast<double>(iz) * dz; }
  double x(std::size_t ix) const {
    return (static_cast<double>(ix) - 0.5 * static_cast<double>(num_x - 1)) * dx;
  }
  std::size_t index(std::size_t iz, std::size_t ix) const { return iz * num_x + ix; }

  double z_max() const { return z(num_z - 1); }
  double x_min() const { return x(0); }
  double x_max() const { return x(num_x - 1); }

  void validate() const {
    if (num_z == 0 || num_x == 0) throw std::invalid_argument("grid: empty grid");
    if (!(dz > 0) || !(dx > 0)) throw std::invalid_argument("grid: dz and dx must be > 0");
    if (!std::isfinite(z0)) throw std::invalid_argument("grid: z0 must be finite");
  }

  // dz = c/(2 f_s), dx = pitch.
  static ImagingGrid with_default_spacing(const ProbeGeometry& probe, double z0,
                                          std::size_t num_z, std::size_t num_x) {
    return ImagingGrid{z0, num_z, num_x, probe.sound_speed / (2.0 * probe.sampling_freq),
                       probe.pitch};
  }

  friend bool operator==(const ImagingGrid&, const ImagingGrid&) = default;
};

struct PixelPos {
  double z = 0.0;
  double x = 0.0;
};

struct PlaneWaveTx {
  double angle = 0.0;  // rad, positive steers toward +x

  void validate() const {
    if (!(std::abs(angle) < std::numbers::pi / 2))
      throw std::invalid_argument("tx: |angle| must be < pi/2");
  }

  friend bool operator==(const PlaneWaveTx&, const PlaneWaveTx&) = default;
};

enum class Window { hanning, tukey, rect };

inline const char* to_string(Window w) {
  switch (w) {
    case Window::hanning: return "hanning";
    case Window::tukey: return "tukey";
    case Window::rect: return "rect";
  }
  return "?";
}

inline Window window_from_string(const std::string& name) {
  if (name == "hanning" || name == "hann") return Window::hanning;
  if (name == "tukey") return Window::tukey;
  if (name == "rect" || name == "boxcar") return Window::rect;
  throw std::invalid_argument("unknown apodization window '" + name + "'");
}

struct ApodizationSpec {
  Window window = Window::hanning;
  double tukey_taper = 0.25;  // only used by Window::tukey
  double f_number = 0.5;

  void validate() const {
    if (!(f_number > 0)) throw std::invalid_argument("apodization: f_number must be > 0");
    if (!(tukey_taper >= 0 && tukey_taper <= 1))
      throw std::invalid_argument("apodization: tukey taper must be in [0,1]");
  }

  friend bool operator==(const ApodizationSpec&, const ApodizationSpec&) = default;
};

inline std::vector<double> element_positions(const ProbeGeometry& probe) {
  std::vector<double> xs(static_cast<std::size_t>(probe.num_elements));
  const double center = 0.5 * (probe.num_elements - 1);
  for (int n = 0; n < probe.num_elements; ++n) xs[n] = (n - center) * probe.pitch;
  return xs;
}

// The wavefront passes the array center (0,0) at t = 0.
inline double tx_delay_plane_wave(PixelPos p, PlaneWaveTx tx, double c) {
  return (p.z * std::cos(tx.angle) + p.x * std::sin(tx.angle)) / c;
}

inline double rx_delay(PixelPos p, double element_x, double c) {
  return std::hypot(p.z, p.x - element_x) / c;
}

// Window evaluated at normalized offset u in [-1, 1]; peak 1 at u = 0,
// zero outside.
inline double window_value(const ApodizationSpec& spec, double u) {
  const double au = std::abs(u);
  if (au > 1.0) return 0.0;
  switch (spec.window) {
    case Window::rect:
      return 1.0;
    case Window::hanning:
      return 0.5 * (1.0 + std::cos(std::numbers::pi * au));
    case Window::tukey: {
      const double taper = spec.tukey_taper;
      const double flat = 1.0 - taper;
      if (au <= flat) return 1.0;
      return 0.5 * (1.0 + std::cos(std::numbers::pi * (au - flat) / taper));
    }
  }
  return 0.0;
}

// Receive aperture half-width a = z / (2 f#); hard cutoff outside.
inline double apodization_weight(PixelPos p, double element_x, const ApodizationSpec& spec) {
  if (!(p.z > 0)) return 0.0;
  const double half_width = p.z / (2.0 * spec.f_number);
  return window_value(spec, (p.x - element_x) / half_width);
}

}  // namespace pwbeam
