#pragma once

// Desk-scale reference scenes: 64-element linear probe, ~256 x 64 pixel
// grid, an anechoic cyst in speckle and a sparse point-target layout.

#include <vector>

#include "pwbeam/geometry.hpp"
#include "pwbeam/metrics.hpp"
#include "pwbeam/phantom.hpp"

namespace pwbeam::scene {

inline ProbeGeometry desk_probe() {
  ProbeGeometry p;
  p.num_elements = 64;
  p.pitch = 0.3e-3;
  p.sampling_freq = 10e6;
  p.center_freq = 4e6;
  p.sound_speed = 1540.0;
  p.time_offset = 0.0;
  return p;
}

inline ImagingGrid desk_grid(const ProbeGeometry& probe = desk_probe()) {
  return ImagingGrid::with_default_spacing(probe, 10e-3, 256, 64);
}

inline ApodizationSpec desk_apodization() { return {Window::hanning, 0.25, 0.5}; }

inline PhantomSpec cyst_phantom(std::uint64_t seed = 1) {
  PhantomSpec s;
  s.cysts.push_back({20e-3, 0.0, 4e-3});
  s.speckle = {true, 1.0};
  s.pulse = {desk_probe().center_freq, 0.5};
  s.rng_seed = seed;
  return s;
}

inline PhantomSpec point_phantom() {
  PhantomSpec s;
  s.point_targets = {{14e-3, -4.5e-3, 1.0}, {20e-3, 0.0, 1.0}, {26e-3, 4.5e-3, 1.0}};
  s.speckle = {false, 0.0};
  s.pulse = {desk_probe().center_freq, 0.5};
  return s;
}

// Analysis regions for cyst_phantom().
struct CystRegions {
  RegionSpec cyst;       // inside the cyst, away from its rim
  RegionSpec background; // speckle annulus around the cyst
  RegionSpec speckle;    // compact speckle patch for the Rayleigh test
};

inline CystRegions cyst_regions() {
  return {DiskRegion{20e-3, 0.0, 3e-3}, AnnulusRegion{20e-3, 0.0, 5e-3, 7e-3},
          RectRegion{12e-3, 14.5e-3, -4e-3, 4e-3}};
}

}  // namespace pwbeam::scene
