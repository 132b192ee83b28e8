#pragma once

// Sparse linear measurement model y = Phi x for a single plane-wave
// transmit. Each row of Phi is one time sample of one receive element;
// each column is one image pixel. A pixel contributes to a sample when its
// round-trip delay lies within one sampling period of the sample time, with
// a weight that decays linearly from 1 (exact delay match) to 0 (the
// farthest contributing pixel of that row), times the receive apodization.
//
// Row order is element-major (r = n*M + m), column order is the grid's
// axial-major pixel index.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwbeam/geometry.hpp"
#include "pwbeam/image.hpp"

namespace pwbeam {

struct ModelProvenance {
  ProbeGeometry probe;
  ImagingGrid grid;
  PlaneWaveTx tx;
  ApodizationSpec apod;
  std::size_t num_samples = 0;

  // FNV-1a over the descriptor fields; identifies cached models.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t n) {
      const auto* bytes = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
      }
    };
    auto mix_d = [&](double v) { mix(&v, sizeof v); };
    auto mix_u = [&](std::uint64_t v) { mix(&v, sizeof v); };
    mix_u(static_cast<std::uint64_t>(probe.num_elements));
    mix_d(probe.pitch);
    mix_d(probe.sampling_freq);
    mix_d(probe.sound_speed);
    mix_d(probe.time_offset);
    mix_d(grid.z0);
    mix_u(grid.num_z);
    mix_u(grid.num_x);
    mix_d(grid.dz);
    mix_d(grid.dx);
    mix_d(tx.angle);
    mix_u(static_cast<std::uint64_t>(apod.window));
    mix_d(apod.tukey_taper);
    mix_d(apod.f_number);
    mix_u(num_samples);
    return h;
  }
};

class SparseModel {
 public:
  SparseModel() = default;

  // Takes ownership of CSR arrays and builds the transposed (CSC) copy used
  // by adjoint(). Validates structure.
  SparseModel(std::size_t num_samples, std::size_t num_elements, std::size_t num_cols,
              std::vector<std::uint64_t> row_offsets, std::vector<std::uint32_t> col_indices,
              std::vector<float> weights, std::uint64_t provenance_hash = 0)
      : num_samples_(num_samples),
        num_elements_(num_elements),
        num_cols_(num_cols),
        provenance_hash_(provenance_hash),
        row_offsets_(std::move(row_offsets)),
        col_indices_(std::move(col_indices)),
        weights_(std::move(weights)) {
    validate_structure();
    build_transpose();
  }

  std::size_t num_rows() const { return num_samples_ * num_elements_; }
  std::size_t num_cols() const { return num_cols_; }
  std::size_t num_samples() const { return num_samples_; }
  std::size_t num_elements() const { return num_elements_; }
  std::size_t nnz() const { return weights_.size(); }
  std::uint64_t provenance_hash() const { return provenance_hash_; }

  const std::vector<std::uint64_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::uint32_t>& col_indices() const { return col_indices_; }
  const std::vector<float>& weights() const { return weights_; }

  std::size_t row_nnz(std::size_t r) const { return row_offsets_[r + 1] - row_offsets_[r]; }

  void apply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != num_cols_ || y.size() != num_rows())
      throw std::invalid_argument("SparseModel::apply: length mismatch");
    for (std::size_t r = 0; r < num_rows(); ++r) {
      double acc = 0.0;
      for (std::uint64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
        acc += static_cast<double>(weights_[k]) * x[col_indices_[k]];
      y[r] = acc;
    }
  }

  Vector apply(std::span<const double> x) const {
    Vector y(num_rows());
    apply(x, y);
    return y;
  }

  void adjoint(std::span<const double> y, std::span<double> x) const {
    if (y.size() != num_rows() || x.size() != num_cols_)
      throw std::invalid_argument("SparseModel::adjoint: length mismatch");
    for (std::size_t j = 0; j < num_cols_; ++j) {
      double acc = 0.0;
      for (std::uint64_t k = col_offsets_[j]; k < col_offsets_[j + 1]; ++k)
        acc += static_cast<double>(t_weights_[k]) * y[row_indices_[k]];
      x[j] = acc;
    }
  }

  Vector adjoint(std::span<const double> y) const {
    Vector x(num_cols_);
    adjoint(y, x);
    return x;
  }

  // Per-pixel sum of weights (column sums of Phi).
  Vector column_norm_weights() const {
    Vector s(num_cols_, 0.0);
    for (std::size_t j = 0; j < num_cols_; ++j) {
      double acc = 0.0;
      for (std::uint64_t k = col_offsets_[j]; k < col_offsets_[j + 1]; ++k)
        acc += static_cast<double>(t_weights_[k]);
      s[j] = acc;
    }
    return s;
  }

  bool same_arrays(const SparseModel& o) const {
    return num_samples_ == o.num_samples_ && num_elements_ == o.num_elements_ &&
           num_cols_ == o.num_cols_ && row_offsets_ == o.row_offsets_ &&
           col_indices_ == o.col_indices_ && weights_.size() == o.weights_.size() &&
           std::memcmp(weights_.data(), o.weights_.data(), weights_.size() * sizeof(float)) == 0;
  }

 private:
  void validate_structure() const {
    if (row_offsets_.size() != num_rows() + 1)
      throw std::invalid_argument("SparseModel: row offset count mismatch");
    if (row_offsets_.front() != 0 || row_offsets_.back() != weights_.size() ||
        col_indices_.size() != weights_.size())
      throw std::invalid_argument("SparseModel: inconsistent CSR arrays");
    for (std::size_t r = 0; r < num_rows(); ++r) {
      if (row_offsets_[r + 1] < row_offsets_[r])
        throw std::invalid_argument("SparseModel: row offsets not monotone");
      for (std::uint64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
        if (col_indices_[k] >= num_cols_)
          throw std::invalid_argument("SparseModel: column index out of range");
        if (k > row_offsets_[r] && col_indices_[k] <= col_indices_[k - 1])
          throw std::invalid_argument("SparseModel: column indices not strictly increasing");
        if (!std::isfinite(weights_[k]) || weights_[k] < 0)
          throw std::invalid_argument("SparseModel: weights must be finite and >= 0");
      }
    }
  }

  void build_transpose() {
    col_offsets_.assign(num_cols_ + 1, 0);
    for (auto c : col_indices_) ++col_offsets_[c + 1];
    for (std::size_t j = 0; j < num_cols_; ++j) col_offsets_[j + 1] += col_offsets_[j];
    row_indices_.resize(weights_.size());
    t_weights_.resize(weights_.size());
    std::vector<std::uint64_t> cursor(col_offsets_.begin(), col_offsets_.end() - 1);
    for (std::size_t r = 0; r < num_rows(); ++r) {
      for (std::uint64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
        const auto slot = cursor[col_indices_[k]]++;
        row_indices_[slot] = static_cast<std::uint32_t>(r);
        t_weights_[slot] = weights_[k];
      }
    }
  }

  std::size_t num_samples_ = 0;
  std::size_t num_elements_ = 0;
  std::size_t num_cols_ = 0;
  std::uint64_t provenance_hash_ = 0;
  std::vector<std::uint64_t> row_offsets_{0};
  std::vector<std::uint32_t> col_indices_;
  std::vector<float> weights_;
  // Transposed copy; rows within a column are increasing.
  std::vector<std::uint64_t> col_offsets_{0};
  std::vector<std::uint32_t> row_indices_;
  std::vector<float> t_weights_;
};

inline double pixel_delay(PixelPos p, PlaneWaveTx tx, double element_x, double c) {
  return tx_delay_plane_wave(p, tx, c) + rx_delay(p, element_x, c);
}

// Number of samples per element needed to record every pixel's echo.
inline std::size_t default_num_samples(const ProbeGeometry& probe, const ImagingGrid& grid,
                                       PlaneWaveTx tx) {
  probe.validate();
  grid.validate();
  const auto xe = element_positions(probe);
  double tau_max = -INFINITY;
  const double zs[2] = {grid.z0, grid.z_max()};
  const double xs[2] = {grid.x_min(), grid.x_max()};
  // Delay is convex in (z, x), so its maximum over the grid box is at a corner.
  for (double z : zs)
    for (double x : xs)
      for (double e : xe) tau_max = std::max(tau_max, pixel_delay({z, x}, tx, e, probe.sound_speed));
  const double last = std::floor((tau_max - probe.time_offset) * probe.sampling_freq) + 1.0;
  if (last < 0) throw std::invalid_argument("time_offset is later than every echo");
  return static_cast<std::size_t>(last) + 1;
}

inline SparseModel build_model(const ProbeGeometry& probe, const ImagingGrid& grid, PlaneWaveTx tx,
                               const ApodizationSpec& apod, std::size_t num_samples = 0) {
  probe.validate();
  grid.validate();
  tx.validate();
  apod.validate();
  if (num_samples == 0) num_samples = default_num_samples(probe, grid, tx);
  if (grid.num_pixels() > std::size_t{0xFFFFFFFFu})
    throw std::invalid_argument("build_model: grid too large for 32-bit column indices");

  const double fs = probe.sampling_freq;
  const double ts = 1.0 / fs;
  const double c = probe.sound_speed;
  const double t0 = probe.time_offset;
  const auto xe = element_positions(probe);
  const auto num_elements = static_cast<std::size_t>(probe.num_elements);

  struct Hit {
    std::uint32_t col;
    double dt;    // |t_i - tau_j|
    double apod;
  };
  std::vector<std::vector<Hit>> buckets(num_samples);

  std::vector<std::uint64_t> row_offsets;
  row_offsets.reserve(num_samples * num_elements + 1);
  row_offsets.push_back(0);
  std::vector<std::uint32_t> cols;
  std::vector<float> weights;

  for (std::size_t n = 0; n < num_elements; ++n) {
    for (auto& b : buckets) b.clear();
    for (std::size_t iz = 0; iz < grid.num_z; ++iz) {
      for (std::size_t ix = 0; ix < grid.num_x; ++ix) {
        const PixelPos p{grid.z(iz), grid.x(ix)};
        const double tau = pixel_delay(p, tx, xe[n], c);
        const double a = apodization_weight(p, xe[n], apod);
        const double lo = std::ceil((tau - ts - t0) * fs) - 1.0;
        const double hi = std::floor((tau + ts - t0) * fs) + 1.0;
        for (double mf = std::max(lo, 0.0); mf <= hi && mf < static_cast<double>(num_samples);
             mf += 1.0) {
          const double t = t0 + mf / fs;
          const double dt = std::abs(t - tau);
          if (dt <= ts)
            buckets[static_cast<std::size_t>(mf)].push_back(
                {static_cast<std::uint32_t>(grid.index(iz, ix)), dt, a});
        }
      }
    }
    for (std::size_t m = 0; m < num_samples; ++m) {
      const auto& hits = buckets[m];
      double t_max = 0.0;
      for (const auto& h : hits) t_max = std::max(t_max, h.dt);
      for (const auto& h : hits) {
        // A row whose only delay match is exact (t_max = 0) gets weight 1.
        const double w = (t_max > 0 ? 1.0 - h.dt / t_max : 1.0) * h.apod;
        const auto wf = static_cast<float>(w);
        if (wf > 0.0f) {
          cols.push_back(h.col);
          weights.push_back(wf);
        }
      }
      row_offsets.push_back(weights.size());
    }
  }
  const ModelProvenance prov{probe, grid, tx, apod, num_samples};
  return SparseModel(num_samples, num_elements, grid.num_pixels(), std::move(row_offsets),
                     std::move(cols), std::move(weights), prov.hash());
}

}  // namespace pwbeam
