// pwbeam: simulate -> beamform -> metrics -> render on the command line.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pwbeam/io.hpp"
#include "pwbeam/metrics.hpp"
#include "pwbeam/phantom.hpp"
#include "pwbeam/solvers.hpp"
#include "pwbeam/sparse_model.hpp"

namespace fs = std::filesystem;
using namespace pwbeam;

namespace {

struct Overrides {
  std::string config;
  std::string solver;
  std::string angles;
  std::int64_t seed = -1;
  std::string out;
  double dynamic_range = 0.0;
};

RunConfig load_config(const Overrides& o) {
  KeyValues kv;
  if (!o.config.empty()) kv = KeyValues::parse(read_file(o.config), o.config);
  if (!o.solver.empty()) kv.set("solver.name", o.solver);
  if (!o.angles.empty()) kv.set("tx.angles", o.angles);
  if (o.seed >= 0) kv.set("seed", std::to_string(o.seed));
  if (!o.out.empty()) kv.set("out", o.out);
  if (o.dynamic_range != 0.0) {
    std::ostringstream s;
    s.precision(17);
    s << o.dynamic_range;
    kv.set("render.dynamic_range", s.str());
  }
  return parse_run_config(std::move(kv));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

SparseModel model_for(const RunConfig& cfg, PlaneWaveTx tx, std::size_t num_samples = 0) {
  if (cfg.model_cache.empty()) return build_model(cfg.probe, cfg.grid, tx, cfg.apodization, num_samples);
  const std::size_t m = num_samples ? num_samples : default_num_samples(cfg.probe, cfg.grid, tx);
  const auto hash = ModelProvenance{cfg.probe, cfg.grid, tx, cfg.apodization, m}.hash();
  fs::create_directories(cfg.model_cache);
  char name[40];
  std::snprintf(name, sizeof name, "phi_%016llx.phi", static_cast<unsigned long long>(hash));
  return load_or_build_model(fs::path(cfg.model_cache) / name, cfg.probe, cfg.grid, tx,
                             cfg.apodization, m);
}

// Independent noise stream per transmit, derived from the run seed.
std::uint64_t noise_seed(std::uint64_t seed, std::size_t angle_index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (angle_index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string angle_file(std::size_t i) {
  char name[32];
  std::snprintf(name, sizeof name, "channels_%02zu.chd", i);
  return name;
}

int cmd_simulate(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const auto refl = make_reflectivity(cfg.phantom, cfg.grid, cfg.probe.sound_speed);
  write_image(fs::path(cfg.out_dir) / "reflectivity.img", to_stored(RfImage{cfg.grid, refl}));
  for (std::size_t i = 0; i < cfg.angles.size(); ++i) {
    const PlaneWaveTx tx{cfg.angles[i]};
    const auto model = model_for(cfg, tx);
    const auto data = simulate_channel_data(model, refl, cfg.snr_db, noise_seed(cfg.rng_seed, i),
                                            cfg.probe, tx);
    const auto path = fs::path(cfg.out_dir) / angle_file(i);
    write_channel_data(path, data);
    std::printf("%s M=%zu N=%zu fs=%.9g angle_deg=%.6g\n", path.string().c_str(), data.num_samples,
                data.num_elements, data.sampling_freq, tx.angle * 180.0 / std::numbers::pi);
  }
  return 0;
}

void check_geometry(const RunConfig& cfg, const ChannelData& d, const std::string& path) {
  std::string why;
  if (d.num_elements != static_cast<std::size_t>(cfg.probe.num_elements))
    why = "element count " + std::to_string(d.num_elements) + " != probe.num_elements " +
          std::to_string(cfg.probe.num_elements);
  else if (d.sampling_freq != cfg.probe.sampling_freq)
    why = "sampling_freq " + fmt("%.9g", d.sampling_freq) + " != probe.sampling_freq " +
          fmt("%.9g", cfg.probe.sampling_freq);
  else if (d.time_offset != cfg.probe.time_offset)
    why = "time_offset " + fmt("%.9g", d.time_offset) + " != probe.time_offset " +
          fmt("%.9g", cfg.probe.time_offset);
  else if (!(std::abs(d.angle) < std::numbers::pi / 2))
    why = "steering angle out of range";
  if (!why.empty()) throw ConfigError(path + ": geometry mismatch: " + why);
}

int cmd_beamform(const RunConfig& cfg, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw ConfigError("beamform: no channel data files given");
  std::vector<ChannelData> data;
  for (const auto& p : inputs) {
    data.push_back(read_channel_data(p));
    check_geometry(cfg, data.back(), p);
  }
  fs::create_directories(cfg.out_dir);
  std::vector<RfImage> images;
  std::string report;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const PlaneWaveTx tx{data[i].angle};
    const auto model = model_for(cfg, tx, data[i].num_samples);
    auto res = beamform(cfg.solver, model, cfg.grid, data[i].to_model_vector(), cfg.solver_config);
    report += "# input " + fs::path(inputs[i]).filename().string() + "\n";
    report += "# angle_deg " + fmt("%.17g", tx.angle * 180.0 / std::numbers::pi) + "\n";
    report += res.report.to_text();
    std::printf("%s: %s %d iterations (%s)\n", inputs[i].c_str(), to_string(cfg.solver),
                res.report.iterations, to_string(res.report.termination));
    images.push_back(std::move(res.image));
  }
  if (cfg.compound || images.size() == 1) {
    const auto path = fs::path(cfg.out_dir) / "image.img";
    write_image(path, to_stored(images.size() == 1 ? images.front() : cpwc_compound(images)));
    std::printf("wrote %s\n", path.string().c_str());
  } else {
    for (std::size_t i = 0; i < images.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "image_%02zu.img", i);
      write_image(fs::path(cfg.out_dir) / name, to_stored(images[i]));
    }
  }
  write_file_atomic(fs::path(cfg.out_dir) / "report.txt", report);
  return 0;
}

ImagingGrid grid_for_image(const RunConfig& cfg, const StoredImage& img, const std::string& path) {
  if (img.num_z != cfg.grid.num_z || img.num_x != cfg.grid.num_x || img.dz != cfg.grid.dz ||
      img.dx != cfg.grid.dx)
    throw ConfigError(path + ": image header does not match the configured grid");
  return cfg.grid;
}

// Brightest envelope pixel within 1 mm of the declared position.
std::pair<std::size_t, std::size_t> find_peak(const Image2D& env, const ImagingGrid& grid,
                                              const TargetSpec& t) {
  double best = -1.0;
  std::pair<std::size_t, std::size_t> at{0, 0};
  for (std::size_t iz = 0; iz < grid.num_z; ++iz)
    for (std::size_t ix = 0; ix < grid.num_x; ++ix)
      if (std::hypot(grid.z(iz) - t.z, grid.x(ix) - t.x) <= 1e-3 && env(iz, ix) > best) {
        best = env(iz, ix);
        at = {iz, ix};
      }
  if (best < 0) throw std::runtime_error("target outside the grid");
  return at;
}

std::string metrics_report(const Image2D& rf, const ImagingGrid& grid, const RegionsFile& regions) {
  const auto env = envelope(rf);
  std::ostringstream os;
  const NamedRegion* bg = nullptr;
  for (const auto& r : regions.regions)
    if (r.role == RegionRole::background) {
      bg = &r;
      break;
    }
  for (const auto& r : regions.regions) {
    if (r.role == RegionRole::roi) {
      if (!bg) throw ConfigError("regions: roi '" + r.name + "' needs a background region");
      const auto a = gather(env, region_pixels(r.shape, grid));
      const auto b = gather(env, region_pixels(bg->shape, grid));
      std::string c;
      try {
        c = fmt("%.6f", cnr_from_samples(a, b));
      } catch (const std::domain_error&) {
        c = "undefined";
      }
      os << "cnr " << r.name << " " << bg->name << " " << c << "\n";
      os << "gcnr " << r.name << " " << bg->name << " " << fmt("%.6f", gcnr_from_samples(a, b)) << "\n";
    } else if (r.role == RegionRole::speckle) {
      const auto v = gather(env, region_pixels(r.shape, grid));
      const auto positive = std::count_if(v.begin(), v.end(), [](double e) { return e > 0; });
      if (positive < 50) {
        // Too few nonzero envelope samples to fit a Rayleigh law.
        os << "ks " << r.name << " insufficient n " << positive << " fail\n";
        continue;
      }
      const auto ks = ks_rayleigh_from_samples(v);
      os << "ks " << r.name << " statistic " << fmt("%.6f", ks.statistic) << " critical "
         << fmt("%.6f", ks.critical_value) << " n " << ks.n << " " << (ks.pass ? "pass" : "fail")
         << "\n";
    }
  }
  for (const auto& t : regions.targets) {
    os << "fwhm " << t.name;
    try {
      const auto [iz, ix] = find_peak(env, grid, t);
      const double ax = fwhm(env, grid, iz, ix, Axis::axial);
      const double lat = fwhm(env, grid, iz, ix, Axis::lateral);
      os << " axial_mm " << fmt("%.6f", ax) << " lateral_mm " << fmt("%.6f", lat) << "\n";
    } catch (const std::runtime_error& e) {
      os << " unresolved (" << e.what() << ")\n";
    }
  }
  return os.str();
}

int cmd_metrics(const RunConfig& cfg, const std::string& image_path, std::string regions_path) {
  if (regions_path.empty()) regions_path = cfg.regions_path;
  if (regions_path.empty()) throw ConfigError("metrics: no regions file (use --regions or metrics.regions)");
  const auto regions = load_regions(regions_path);
  const auto stored = read_image(image_path);
  const auto grid = grid_for_image(cfg, stored, image_path);
  const auto text = metrics_report(to_image(stored), grid, regions);
  fs::create_directories(cfg.out_dir);
  write_file_atomic(fs::path(cfg.out_dir) / "metrics.txt", text);
  std::cout << text;
  return 0;
}

int cmd_render(const RunConfig& cfg, const std::string& image_path) {
  const auto stored = read_image(image_path);
  const auto img = to_image(stored);
  bool any = false;
  for (float v : stored.values) any = any || v != 0.0f;
  if (!any) std::cerr << "warning: " << image_path << " is all zero; rendering black\n";
  const auto px = render_gray(img, cfg.dynamic_range);
  fs::create_directories(cfg.out_dir);
  auto out = fs::path(cfg.out_dir) / fs::path(image_path).stem();
  out += ".pgm";
  write_file_atomic(out, encode_pgm(px, stored.num_x, stored.num_z));
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key=value configuration file");
  cmd->add_option("--seed", o.seed, "RNG seed (overrides config)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", o.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plane-wave ultrasound beamforming toolkit"};
  app.require_subcommand(1);
  Overrides o;
  std::vector<std::string> inputs;
  std::string image_path, regions_path;

  auto* sim = app.add_subcommand("simulate", "simulate channel data for each transmit angle");
  add_common(sim, o);
  sim->add_option("--angles", o.angles, "comma-separated steering angles in degrees");

  auto* bf = app.add_subcommand("beamform", "reconstruct an RF image from channel data files");
  add_common(bf, o);
  bf->add_option("--solver", o.solver, "das, admm, pnp or red");
  bf->add_option("inputs", inputs, "CHD1 channel data files")->required();

  auto* met = app.add_subcommand("metrics", "image quality metrics over declared regions");
  add_common(met, o);
  met->add_option("image", image_path, "IMG1 image file")->required();
  met->add_option("--regions", regions_path, "regions file");

  auto* ren = app.add_subcommand("render", "B-mode rendering to an 8-bit PGM");
  add_common(ren, o);
  ren->add_option("image", image_path, "IMG1 image file")->required();
  ren->add_option("--dynamic-range", o.dynamic_range, "dynamic range in dB")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto cfg = load_config(o);
    if (sim->parsed()) return cmd_simulate(cfg);
    if (bf->parsed()) return cmd_beamform(cfg, inputs);
    if (met->parsed()) return cmd_metrics(cfg, image_path, regions_path);
    if (ren->parsed()) return cmd_render(cfg, image_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
