#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pwbeam {

using Vector = std::vector<double>;

// Dense 2-D array of doubles stored row-major: rows run along depth (z),
// columns along the lateral axis (x). Index (iz, ix) -> iz * num_x + ix.
class Image2D {
 public:
  Image2D() = default;
  Image2D(std::size_t num_z, std::size_t num_x, double fill = 0.0)
      : num_z_(num_z), num_x_(num_x), values_(num_z * num_x, fill) {}
  Image2D(std::size_t num_z, std::size_t num_x, Vector values)
      : num_z_(num_z), num_x_(num_x), values_(std::move(values)) {
    if (values_.size() != num_z_ * num_x_)
      throw std::invalid_argument("Image2D: value count does not match shape");
  }

  std::size_t num_z() const { return num_z_; }
  std::size_t num_x() const { return num_x_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t iz, std::size_t ix) { return values_[iz * num_x_ + ix]; }
  double operator()(std::size_t iz, std::size_t ix) const { return values_[iz * num_x_ + ix]; }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  friend bool operator==(const Image2D&, const Image2D&) = default;

 private:
  std::size_t num_z_ = 0;
  std::size_t num_x_ = 0;
  Vector values_;
};

}  // namespace pwbeam
