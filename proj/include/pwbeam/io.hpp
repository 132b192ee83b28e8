#pragma once

// File formats and run configuration.
//
// Binary files are little-endian with a 4-byte magic:
//   CHD1  u64 M, u64 N, f64 fs, f64 t0, f64 angle, f32[M*N] samples (m*N + n)
//   IMG1  u64 num_z, u64 num_x, f64 dz, f64 dx, f32[num_z*num_x] row-major
//   PHI1  u64 M, u64 N, u64 P, u64 hash, u64 nnz, u64[M*N+1] offsets,
//         u32[nnz] columns, f32[nnz] weights
// Every writer goes through a temporary file renamed on success.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwbeam/geometry.hpp"
#include "pwbeam/metrics.hpp"
#include "pwbeam/phantom.hpp"
#include "pwbeam/solvers.hpp"
#include "pwbeam/sparse_model.hpp"

namespace pwbeam {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace detail {

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  template <class T>
  void put_array(const std::vector<T>& v) {
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
  }
  void put_magic(const char* m) { buf_.append(m, 4); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string bytes, std::string path) : buf_(std::move(bytes)), path_(std::move(path)) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  template <class T>
  std::vector<T> get_array(std::uint64_t count) {
    if (count > (buf_.size() - pos_) / sizeof(T)) fail("truncated file");
    std::vector<T> v(count);
    std::memcpy(v.data(), buf_.data() + pos_, count * sizeof(T));
    pos_ += count * sizeof(T);
    return v;
  }
  void expect_magic(const char* m) {
    need(4);
    if (std::memcmp(buf_.data() + pos_, m, 4) != 0) fail(std::string("bad magic, expected ") + m);
    pos_ += 4;
  }
  void expect_end() {
    if (pos_ != buf_.size()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) const { throw IoError(path_ + ": " + what); }

 private:
  void need(std::size_t n) {
    if (buf_.size() - pos_ < n) fail("truncated file");
  }
  std::string buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError(path.string() + ": write failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(path.string() + ": rename failed");
  }
}

// ---- channel data ----

inline std::string encode_channel_data(const ChannelData& d) {
  if (d.samples.size() != d.num_samples * d.num_elements)
    throw std::invalid_argument("ChannelData: sample count does not match dimensions");
  detail::ByteWriter w;
  w.put_magic("CHD1");
  w.put<std::uint64_t>(d.num_samples);
  w.put<std::uint64_t>(d.num_elements);
  w.put<double>(d.sampling_freq);
  w.put<double>(d.time_offset);
  w.put<double>(d.angle);
  w.put_array(d.samples);
  return w.bytes();
}

inline ChannelData decode_channel_data(std::string bytes, const std::string& path = "<memory>") {
  detail::ByteReader r(std::move(bytes), path);
  r.expect_magic("CHD1");
  ChannelData d;
  const auto m = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  d.sampling_freq = r.get<double>();
  d.time_offset = r.get<double>();
  d.angle = r.get<double>();
  if (m == 0 || n == 0) r.fail("empty channel data");
  if (m > std::numeric_limits<std::uint64_t>::max() / n) r.fail("dimension overflow");
  d.num_samples = m;
  d.num_elements = n;
  d.samples = r.get_array<float>(m * n);
  r.expect_end();
  return d;
}

inline void write_channel_data(const std::filesystem::path& path, const ChannelData& d) {
  write_file_atomic(path, encode_channel_data(d));
}

inline ChannelData read_channel_data(const std::filesystem::path& path) {
  return decode_channel_data(read_file(path), path.string());
}

// ---- RF images ----

struct StoredImage {
  std::size_t num_z = 0, num_x = 0;
  double dz = 0.0, dx = 0.0;
  std::vector<float> values;
};

inline std::string encode_image(const StoredImage& img) {
  if (img.values.size() != img.num_z * img.num_x)
    throw std::invalid_argument("image: value count does not match dimensions");
  detail::ByteWriter w;
  w.put_magic("IMG1");
  w.put<std::uint64_t>(img.num_z);
  w.put<std::uint64_t>(img.num_x);
  w.put<double>(img.dz);
  w.put<double>(img.dx);
  w.put_array(img.values);
  return w.bytes();
}

inline StoredImage decode_image(std::string bytes, const std::string& path = "<memory>") {
  detail::ByteReader r(std::move(bytes), path);
  r.expect_magic("IMG1");
  StoredImage img;
  const auto nz = r.get<std::uint64_t>();
  const auto nx = r.get<std::uint64_t>();
  img.dz = r.get<double>();
  img.dx = r.get<double>();
  if (nz == 0 || nx == 0) r.fail("empty image");
  if (nz > std::numeric_limits<std::uint64_t>::max() / nx) r.fail("dimension overflow");
  img.num_z = nz;
  img.num_x = nx;
  img.values = r.get_array<float>(nz * nx);
  r.expect_end();
  return img;
}

inline StoredImage to_stored(const RfImage& rf) {
  StoredImage s{rf.grid.num_z, rf.grid.num_x, rf.grid.dz, rf.grid.dx, {}};
  s.values.reserve(rf.values.size());
  for (double v : rf.values) s.values.push_back(static_cast<float>(v));
  return s;
}

inline Image2D to_image(const StoredImage& s) {
  Image2D img(s.num_z, s.num_x);
  for (std::size_t i = 0; i < s.values.size(); ++i) img.values()[i] = s.values[i];
  return img;
}

inline void write_image(const std::filesystem::path& path, const StoredImage& img) {
  write_file_atomic(path, encode_image(img));
}

inline StoredImage read_image(const std::filesystem::path& path) {
  return decode_image(read_file(path), path.string());
}

// ---- model cache ----

inline std::string encode_model(const SparseModel& m) {
  detail::ByteWriter w;
  w.put_magic("PHI1");
  w.put<std::uint64_t>(m.num_samples());
  w.put<std::uint64_t>(m.num_elements());
  w.put<std::uint64_t>(m.num_cols());
  w.put<std::uint64_t>(m.provenance_hash());
  w.put<std::uint64_t>(m.nnz());
  w.put_array(m.row_offsets());
  w.put_array(m.col_indices());
  w.put_array(m.weights());
  return w.bytes();
}

inline SparseModel decode_model(std::string bytes, const std::string& path = "<memory>") {
  detail::ByteReader r(std::move(bytes), path);
  r.expect_magic("PHI1");
  const auto m = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  const auto p = r.get<std::uint64_t>();
  const auto hash = r.get<std::uint64_t>();
  const auto nnz = r.get<std::uint64_t>();
  if (n != 0 && m > (std::numeric_limits<std::uint64_t>::max() - 1) / n) r.fail("dimension overflow");
  auto offsets = r.get_array<std::uint64_t>(m * n + 1);
  auto cols = r.get_array<std::uint32_t>(nnz);
  auto weights = r.get_array<float>(nnz);
  r.expect_end();
  try {
    return SparseModel(m, n, p, std::move(offsets), std::move(cols), std::move(weights), hash);
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
}

inline void write_model(const std::filesystem::path& path, const SparseModel& m) {
  write_file_atomic(path, encode_model(m));
}

inline SparseModel read_model(const std::filesystem::path& path) {
  return decode_model(read_file(path), path.string());
}

// Returns the cached model when its provenance hash matches, otherwise builds
// it and refreshes the cache.
inline SparseModel load_or_build_model(const std::filesystem::path& cache, const ProbeGeometry& probe,
                                       const ImagingGrid& grid, PlaneWaveTx tx,
                                       const ApodizationSpec& apod, std::size_t num_samples = 0) {
  const std::size_t m = num_samples ? num_samples : default_num_samples(probe, grid, tx);
  const auto hash = ModelProvenance{probe, grid, tx, apod, m}.hash();
  if (std::filesystem::exists(cache)) {
    try {
      auto cached = read_model(cache);
      if (cached.provenance_hash() == hash && cached.num_samples() == m &&
          cached.num_cols() == grid.num_pixels())
        return cached;
    } catch (const IoError&) {
      // stale or corrupt cache: rebuild below
    }
  }
  auto model = build_model(probe, grid, tx, apod, m);
  write_model(cache, model);
  return model;
}

// ---- 8-bit rendering ----

// Binary PGM (P5), num_x wide and num_z tall.
inline std::string encode_pgm(const std::vector<std::uint8_t>& pixels, std::size_t width,
                              std::size_t height) {
  if (pixels.size() != width * height) throw std::invalid_argument("pgm: size mismatch");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  return out;
}

// Envelope, log compression and a linear map of [-DR, 0] dB onto [0, 255].
// An all-zero image renders black.
inline std::vector<std::uint8_t> render_gray(const Image2D& rf, double dynamic_range) {
  if (!(dynamic_range > 0)) throw std::invalid_argument("render: dynamic range must be > 0");
  const auto env = envelope(rf);
  std::vector<std::uint8_t> px(env.size(), 0);
  double peak = 0.0;
  for (double v : env.values()) peak = std::max(peak, v);
  if (!(peak > 0)) return px;
  const auto bmode = log_compress(env, dynamic_range);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double g = (bmode.db.values()[i] + dynamic_range) / dynamic_range * 255.0;
    px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(g, 0.0, 255.0)));
  }
  return px;
}

// ---- key=value configuration ----

// Flat text, one "key = value" per line, '#' starts a comment. Keys are
// dotted; repeating a key is an error.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<config>") {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      auto key = trim(line.substr(0, eq));
      auto value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      if (!kv.values_.emplace(key, value).second)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key " + key);
    }
    return kv;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.push_back(key);
    return it->second;
  }

  double real(const std::string& key, double fallback) {
    auto v = take(key);
    return v ? parse_real(key, *v) : fallback;
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    auto v = take(key);
    return v ? parse_int(key, *v) : fallback;
  }
  bool boolean(const std::string& key, bool fallback) {
    auto v = take(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + *v + "'");
  }
  std::string text(const std::string& key, const std::string& fallback) {
    auto v = take(key);
    return v ? *v : fallback;
  }

  // Keys that were never read.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) out.push_back(k);
    return out;
  }

  static double parse_real(const std::string& key, const std::string& s) {
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw ConfigError(key + ": expected a number, got '" + s + "'");
    return v;
  }

  static std::int64_t parse_int(const std::string& key, const std::string& s) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw ConfigError(key + ": expected an integer, got '" + s + "'");
    return v;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
      cur = trim(cur);
      if (!cur.empty()) parts.push_back(cur);
    }
    return parts;
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> used_;
};

inline std::vector<double> parse_real_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& p : KeyValues::split(s, ',')) out.push_back(KeyValues::parse_real(key, p));
  return out;
}

// "a,b,c; d,e,f" -> tuples of `arity` numbers.
inline std::vector<std::vector<double>> parse_tuples(const std::string& key, const std::string& s,
                                                     std::size_t arity) {
  std::vector<std::vector<double>> out;
  for (const auto& item : KeyValues::split(s, ';')) {
    auto t = parse_real_list(key, item);
    if (t.size() != arity)
      throw ConfigError(key + ": expected " + std::to_string(arity) + " numbers per entry");
    out.push_back(std::move(t));
  }
  return out;
}

struct RunConfig {
  ProbeGeometry probe;
  ImagingGrid grid;
  ApodizationSpec apodization;
  PhantomSpec phantom;
  std::vector<double> angles{0.0};  // radians
  Method solver = Method::das;
  SolverConfig solver_config;
  double snr_db = 20.0;
  bool compound = true;
  double dynamic_range = 60.0;
  std::uint64_t rng_seed = 1;
  std::string out_dir = ".";
  std::string regions_path;
  std::string model_cache;  // directory for PHI1 caches, empty = no cache

  void validate() const {
    probe.validate();
    grid.validate();
    apodization.validate();
    phantom.validate(grid);
    if (angles.empty()) throw ConfigError("tx.angles must not be empty");
    for (double a : angles) PlaneWaveTx{a}.validate();
    solver_config.validate();
    if (solver == Method::red && !(solver_config.mu > 0))
      throw ConfigError("solver.mu must be > 0 for red");
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
      throw ConfigError("simulate.snr_db must be a number or inf");
    if (!(dynamic_range > 0)) throw ConfigError("render.dynamic_range must be > 0");
  }
};

inline std::vector<double> degrees_to_radians(const std::vector<double>& deg) {
  std::vector<double> r;
  for (double d : deg) r.push_back(d * std::numbers::pi / 180.0);
  return r;
}

// Unknown keys are rejected so that typos do not silently fall back to
// defaults.
inline RunConfig parse_run_config(KeyValues kv) {
  RunConfig c;
  auto& p = c.probe;
  p.num_elements = static_cast<int>(kv.integer("probe.num_elements", p.num_elements));
  p.pitch = kv.real("probe.pitch", p.pitch);
  p.sampling_freq = kv.real("probe.sampling_freq", p.sampling_freq);
  p.center_freq = kv.real("probe.center_freq", p.center_freq);
  p.sound_speed = kv.real("probe.sound_speed", p.sound_speed);
  p.time_offset = kv.real("probe.time_offset", p.time_offset);

  const double z0 = kv.real("grid.z0", c.grid.z0);
  const auto nz = kv.integer("grid.num_z", static_cast<std::int64_t>(c.grid.num_z));
  const auto nx = kv.integer("grid.num_x", static_cast<std::int64_t>(c.grid.num_x));
  if (nz < 1 || nx < 1) throw ConfigError("grid.num_z and grid.num_x must be >= 1");
  c.grid = ImagingGrid::with_default_spacing(p, z0, static_cast<std::size_t>(nz),
                                             static_cast<std::size_t>(nx));
  c.grid.dz = kv.real("grid.dz", c.grid.dz);
  c.grid.dx = kv.real("grid.dx", c.grid.dx);

  auto& a = c.apodization;
  try {
    a.window = window_from_string(kv.text("apod.window", to_string(a.window)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("apod.window: ") + e.what());
  }
  a.tukey_taper = kv.real("apod.tukey_taper", a.tukey_taper);
  a.f_number = kv.real("apod.f_number", a.f_number);

  auto& ph = c.phantom;
  if (auto v = kv.take("phantom.cysts"))
    for (const auto& t : parse_tuples("phantom.cysts", *v, 3)) ph.cysts.push_back({t[0], t[1], t[2]});
  if (auto v = kv.take("phantom.points"))
    for (const auto& t : parse_tuples("phantom.points", *v, 3))
      ph.point_targets.push_back({t[0], t[1], t[2]});
  ph.speckle.enabled = kv.boolean("phantom.speckle", ph.speckle.enabled);
  ph.speckle.amplitude_std = kv.real("phantom.speckle_std", ph.speckle.amplitude_std);
  ph.pulse.center_freq = kv.real("phantom.pulse_freq", p.center_freq);
  ph.pulse.fractional_bandwidth = kv.real("phantom.pulse_bandwidth", ph.pulse.fractional_bandwidth);

  if (auto v = kv.take("tx.angles")) c.angles = degrees_to_radians(parse_real_list("tx.angles", *v));

  try {
    c.solver = method_from_string(kv.text("solver.name", to_string(c.solver)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("solver.name: ") + e.what());
  }
  auto& s = c.solver_config;
  s.mu = kv.real("solver.mu", s.mu);
  s.beta = kv.real("solver.beta", s.beta);
  s.eps = kv.real("solver.eps", s.eps);
  s.max_outer_iters = static_cast<int>(kv.integer("solver.max_outer_iters", s.max_outer_iters));
  s.red_inner_K = static_cast<int>(kv.integer("solver.red_inner_K", s.red_inner_K));
  s.lbfgs.memory = static_cast<int>(kv.integer("lbfgs.memory", s.lbfgs.memory));
  s.lbfgs.max_iters = static_cast<int>(kv.integer("lbfgs.max_iters", s.lbfgs.max_iters));
  s.lbfgs.grad_tol = kv.real("lbfgs.grad_tol", s.lbfgs.grad_tol);
  s.lbfgs.relative_tol = kv.boolean("lbfgs.relative_tol", s.lbfgs.relative_tol);
  s.nlm.search_window = static_cast<int>(kv.integer("nlm.search_window", s.nlm.search_window));
  s.nlm.patch_window = static_cast<int>(kv.integer("nlm.patch_window", s.nlm.patch_window));
  if (auto v = kv.take("nlm.smoothing_h")) s.nlm.smoothing_h = KeyValues::parse_real("nlm.smoothing_h", *v);
  s.nlm.smoothing_scale = kv.real("nlm.smoothing_scale", s.nlm.smoothing_scale);

  c.snr_db = kv.real("simulate.snr_db", c.snr_db);
  c.compound = kv.boolean("beamform.compound", c.compound);
  c.dynamic_range = kv.real("render.dynamic_range", c.dynamic_range);
  const auto seed = kv.integer("seed", static_cast<std::int64_t>(c.rng_seed));
  if (seed < 0) throw ConfigError("seed must be >= 0");
  c.rng_seed = static_cast<std::uint64_t>(seed);
  ph.rng_seed = c.rng_seed;
  c.out_dir = kv.text("out", c.out_dir);
  c.regions_path = kv.text("metrics.regions", c.regions_path);
  c.model_cache = kv.text("model.cache", c.model_cache);

  if (auto extra = kv.unused(); !extra.empty()) throw ConfigError("unknown config key: " + extra.front());
  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(KeyValues::parse(read_file(path), path.string()));
}

// ---- regions ----

// One region per line, coordinates in meters:
//   roi <name> disk <z> <x> <r>
//   background <name> annulus <z> <x> <r_in> <r_out>
//   speckle <name> rect <z0> <z1> <x0> <x1>
//   target <name> <z> <x>
// roi/background/speckle accept any of disk, rect, annulus.
enum class RegionRole { roi, background, speckle };

struct NamedRegion {
  RegionRole role;
  std::string name;
  RegionSpec shape;
};

struct TargetSpec {
  std::string name;
  double z = 0.0, x = 0.0;
};

struct RegionsFile {
  std::vector<NamedRegion> regions;
  std::vector<TargetSpec> targets;
};

inline RegionsFile parse_regions(const std::string& text, const std::string& origin = "<regions>") {
  RegionsFile out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    auto fail = [&](const std::string& what) -> ConfigError {
      return ConfigError(origin + ":" + std::to_string(lineno) + ": " + what);
    };
    auto nums = [&](std::size_t from, std::size_t count) {
      if (tok.size() != from + count) throw fail("expected " + std::to_string(count) + " numbers");
      std::vector<double> v;
      for (std::size_t i = from; i < tok.size(); ++i) {
        try {
          v.push_back(KeyValues::parse_real(tok[1], tok[i]));
        } catch (const ConfigError& e) {
          throw fail(e.what());
        }
      }
      return v;
    };
    if (tok.size() < 2) throw fail("expected a role and a name");
    if (tok[0] == "target") {
      const auto v = nums(2, 2);
      out.targets.push_back({tok[1], v[0], v[1]});
      continue;
    }
    RegionRole role;
    if (tok[0] == "roi") role = RegionRole::roi;
    else if (tok[0] == "background") role = RegionRole::background;
    else if (tok[0] == "speckle") role = RegionRole::speckle;
    else throw fail("unknown role '" + tok[0] + "'");
    if (tok.size() < 3) throw fail("missing shape");
    RegionSpec shape;
    if (tok[2] == "disk") {
      const auto v = nums(3, 3);
      if (!(v[2] > 0)) throw fail("disk radius must be > 0");
      shape = DiskRegion{v[0], v[1], v[2]};
    } else if (tok[2] == "rect") {
      const auto v = nums(3, 4);
      if (!(v[1] >= v[0] && v[3] >= v[2])) throw fail("rect bounds out of order");
      shape = RectRegion{v[0], v[1], v[2], v[3]};
    } else if (tok[2] == "annulus") {
      const auto v = nums(3, 4);
      if (!(v[2] >= 0 && v[3] > v[2])) throw fail("annulus radii out of order");
      shape = AnnulusRegion{v[0], v[1], v[2], v[3]};
    } else {
      throw fail("unknown shape '" + tok[2] + "'");
    }
    out.regions.push_back({role, tok[1], shape});
  }
  return out;
}

inline RegionsFile load_regions(const std::filesystem::path& path) {
  return parse_regions(read_file(path), path.string());
}

}  // namespace pwbeam
