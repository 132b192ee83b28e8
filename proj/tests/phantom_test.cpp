#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracle.hpp"
#include "pwbeam/metrics.hpp"
#include "pwbeam/phantom.hpp"
#include "pwbeam/scene.hpp"

using namespace pwbeam;

namespace {

ImagingGrid grid64() {
  return ImagingGrid::with_default_spacing(scene::desk_probe(), 10e-3, 128, 32);
}

}  // namespace

TEST(Reflectivity, SinglePointGivesCenteredPulse) {
  const auto grid = grid64();
  PhantomSpec s;
  s.speckle.enabled = false;
  const std::size_t iz = 60, ix = 11;
  s.point_targets.push_back({grid.z(iz), grid.x(ix), 2.0});
  const auto img = make_reflectivity(s, grid, 1540.0);
  std::size_t half = 0;
  const auto taps = axial_pulse(s.pulse, grid.dz, 1540.0, &half);
  for (std::size_t z = 0; z < grid.num_z; ++z)
    for (std::size_t x = 0; x < grid.num_x; ++x) {
      const double v = img[grid.index(z, x)];
      const auto k = static_cast<std::ptrdiff_t>(z) - static_cast<std::ptrdiff_t>(iz) +
                     static_cast<std::ptrdiff_t>(half);
      if (x == ix && k >= 0 && k < static_cast<std::ptrdiff_t>(taps.size()))
        EXPECT_DOUBLE_EQ(v, 2.0 * taps[static_cast<std::size_t>(k)]);
      else
        EXPECT_EQ(v, 0.0);
    }
  EXPECT_DOUBLE_EQ(img[grid.index(iz, ix)], 2.0);  // pulse peak is 1 at its center
}

TEST(Reflectivity, CystInteriorIsZeroBeforeShaping) {
  const auto grid = grid64();
  PhantomSpec s;
  s.cysts.push_back({grid.z(64), 0.0, 2e-3});
  const auto base = scatterer_map(s, grid);
  std::size_t inside = 0;
  for (std::size_t z = 0; z < grid.num_z; ++z)
    for (std::size_t x = 0; x < grid.num_x; ++x)
      if (std::hypot(grid.z(z) - s.cysts[0].z, grid.x(x)) < 2e-3) {
        ++inside;
        EXPECT_EQ(base(z, x), 0.0);
      }
  EXPECT_GT(inside, 100u);
}

TEST(Reflectivity, SeedControlsSpeckle) {
  const auto grid = grid64();
  PhantomSpec a, b;
  b.rng_seed = a.rng_seed + 1;
  EXPECT_EQ(make_reflectivity(a, grid, 1540.0), make_reflectivity(a, grid, 1540.0));
  EXPECT_NE(make_reflectivity(a, grid, 1540.0), make_reflectivity(b, grid, 1540.0));
}

TEST(Reflectivity, RejectsBadSpecs) {
  const auto grid = grid64();
  PhantomSpec s;
  s.cysts.push_back({1.0, 0.0, 1e-3});
  EXPECT_THROW(make_reflectivity(s, grid, 1540.0), std::invalid_argument);
  s = PhantomSpec{};
  s.cysts.push_back({grid.z(10), 0.0, 0.0});
  EXPECT_THROW(make_reflectivity(s, grid, 1540.0), std::invalid_argument);
  s = PhantomSpec{};
  s.pulse.fractional_bandwidth = 2.0;
  EXPECT_THROW(make_reflectivity(s, grid, 1540.0), std::invalid_argument);
  s = PhantomSpec{};
  s.point_targets.push_back({grid.z(0), 1.0, 1.0});
  EXPECT_THROW(make_reflectivity(s, grid, 1540.0), std::invalid_argument);
}

TEST(Reflectivity, SpeckleEnvelopeIsRayleigh) {
  // Full desk grid: 16384 envelope samples per trial.
  const auto probe = scene::desk_probe();
  const auto grid = scene::desk_grid(probe);
  const RectRegion all{grid.z0, grid.z_max(), grid.x_min(), grid.x_max()};
  int passes = 0;
  for (int trial = 0; trial < 50; ++trial) {
    PhantomSpec s = scene::cyst_phantom(static_cast<std::uint64_t>(trial) + 1);
    s.cysts.clear();
    const auto img = make_reflectivity(s, grid, probe.sound_speed);
    const auto env = envelope(Image2D(grid.num_z, grid.num_x, img));
    passes += ks_rayleigh_test(env, grid, all).pass;
  }
  EXPECT_GE(passes, 45);
}

TEST(Simulate, NoiselessEqualsModelProduct) {
  const auto probe = oracle::small_probe();
  const auto grid = oracle::small_grid();
  const auto model = build_model(probe, grid, PlaneWaveTx{0.0}, {});
  std::mt19937_64 rng(1);
  const auto x = oracle::random_vector(model.num_cols(), rng);
  const auto d = simulate_channel_data(model, x, std::numeric_limits<double>::infinity(), 3, probe,
                                       PlaneWaveTx{0.0});
  const auto px = model.apply(x);
  const auto y = d.to_model_vector();
  for (std::size_t r = 0; r < y.size(); ++r) EXPECT_EQ(y[r], static_cast<double>(static_cast<float>(px[r])));
  EXPECT_EQ(d.num_samples, model.num_samples());
  EXPECT_EQ(d.num_elements, model.num_elements());
  EXPECT_EQ(d.sampling_freq, probe.sampling_freq);
}

TEST(Simulate, LinearWhenNoiseless) {
  const auto probe = oracle::small_probe();
  const auto grid = oracle::small_grid();
  const auto model = build_model(probe, grid, PlaneWaveTx{0.1}, {});
  std::mt19937_64 rng(2);
  const auto x1 = oracle::random_vector(model.num_cols(), rng);
  const auto x2 = oracle::random_vector(model.num_cols(), rng);
  Vector sum(x1.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = x1[i] + x2[i];
  const double inf = std::numeric_limits<double>::infinity();
  const auto a = simulate_channel_data(model, x1, inf, 0, probe, {0.1}).to_model_vector();
  const auto b = simulate_channel_data(model, x2, inf, 0, probe, {0.1}).to_model_vector();
  const auto c = simulate_channel_data(model, sum, inf, 0, probe, {0.1}).to_model_vector();
  for (std::size_t r = 0; r < a.size(); ++r) EXPECT_NEAR(c[r], a[r] + b[r], 1e-5 * (1 + std::abs(c[r])));
}

TEST(Simulate, SeededAndCalibrated) {
  const auto probe = scene::desk_probe();
  const auto grid = scene::desk_grid(probe);
  const auto model = build_model(probe, grid, PlaneWaveTx{0.0}, scene::desk_apodization());
  const auto x = make_reflectivity(scene::cyst_phantom(4), grid, probe.sound_speed);
  ASSERT_GE(model.num_rows(), 20000u);
  const auto d1 = simulate_channel_data(model, x, 20.0, 9, probe, {0.0});
  const auto d2 = simulate_channel_data(model, x, 20.0, 9, probe, {0.0});
  EXPECT_EQ(d1.samples, d2.samples);
  const auto clean = model.apply(x);
  const auto y = d1.to_model_vector();
  Vector noise(y.size());
  for (std::size_t r = 0; r < y.size(); ++r) noise[r] = y[r] - clean[r];
  const double snr = 20.0 * std::log10(rms(clean) / rms(noise));
  EXPECT_NEAR(snr, 20.0, 0.3);
}

TEST(Simulate, RejectsBadSnrAndShapes) {
  const auto probe = oracle::small_probe();
  const auto grid = oracle::small_grid();
  const auto model = build_model(probe, grid, PlaneWaveTx{0.0}, {});
  const Vector x(model.num_cols(), 1.0);
  EXPECT_THROW(simulate_channel_data(model, x, -std::numeric_limits<double>::infinity(), 0, probe, {0.0}),
               std::invalid_argument);
  EXPECT_THROW(simulate_channel_data(model, x, std::nan(""), 0, probe, {0.0}), std::invalid_argument);
  EXPECT_THROW(simulate_channel_data(model, Vector(3), 10.0, 0, probe, {0.0}), std::invalid_argument);
}

TEST(ChannelData, ModelVectorRoundTrip) {
  const Vector y{1, 2, 3, 4, 5, 6};  // M = 3, N = 2, element-major
  const auto d = ChannelData::from_model_vector(y, 3, 2);
  EXPECT_EQ(d.at(0, 1), 4.0f);
  EXPECT_EQ(d.at(2, 0), 3.0f);
  EXPECT_EQ(d.to_model_vector(), y);
}
