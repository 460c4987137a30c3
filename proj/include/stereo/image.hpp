#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "stereo/errors.hpp"

namespace stereo {

/// Single-band intensity raster. Intensities live in [0,1] regardless of the
/// source bit depth; loaders are responsible for the mapping.
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(int width, int height, float value = 0.0f)
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw DimensionError("GrayImage: dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(width) * height, value);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  float at(int x, int y) const {
    assert(in_bounds(x, y));
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  float& at(int x, int y) {
    assert(in_bounds(x, y));
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  bool in_bounds(int x, int y) const noexcept {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Per-pixel disparity with an explicit validity flag. On disk invalid pixels
/// are stored as -inf; in memory validity is a separate flag so values stay
/// clean for arithmetic.
class DisparityMap {
 public:
  DisparityMap() = default;

  /// All pixels start invalid with value 0.
  DisparityMap(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw DimensionError("DisparityMap: dimensions must be positive");
    }
    const std::size_t n = static_cast<std::size_t>(width) * height;
    values_.assign(n, 0.0f);
    valid_.assign(n, 0);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  bool is_valid(int x, int y) const {
    assert(in_bounds(x, y));
    return valid_[index(x, y)] != 0;
  }
  float value(int x, int y) const {
    assert(in_bounds(x, y));
    return values_[index(x, y)];
  }

  void set(int x, int y, float d) {
    assert(in_bounds(x, y));
    values_[index(x, y)] = d;
    valid_[index(x, y)] = 1;
  }
  void set_invalid(int x, int y) {
    assert(in_bounds(x, y));
    valid_[index(x, y)] = 0;
  }

  bool in_bounds(int x, int y) const noexcept {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  std::size_t valid_count() const noexcept {
    std::size_t n = 0;
    for (auto v : valid_) n += v != 0;
    return n;
  }

  /// Dimensions, validity masks and valid values all identical. Values at
  /// invalid pixels are ignored (they do not survive a disk round trip).
  friend bool operator==(const DisparityMap& a, const DisparityMap& b) {
    if (a.width_ != b.width_ || a.height_ != b.height_) return false;
    for (std::size_t i = 0; i < a.values_.size(); ++i) {
      if (a.valid_[i] != b.valid_[i]) return false;
      if (a.valid_[i] && a.values_[i] != b.values_[i]) return false;
    }
    return true;
  }

  const std::vector<float>& values() const noexcept { return values_; }
  const std::vector<std::uint8_t>& validity() const noexcept { return valid_; }

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
  std::vector<std::uint8_t> valid_;
};

/// Dense per-pixel, per-disparity matching costs; lower = more similar.
/// Candidate disparities run 0..d_max inclusive. Cells whose correspondence
/// falls outside the matched image carry border_cost, which producers pick so
/// an infeasible candidate can never win a winner-take-all pass.
class CostVolume {
 public:
  CostVolume() = default;

  CostVolume(int width, int height, int d_max, float border_cost)
      : width_(width), height_(height), d_max_(d_max),
        border_cost_(border_cost) {
    if (width <= 0 || height <= 0 || d_max < 0) {
      throw DimensionError("CostVolume: bad dimensions");
    }
    costs_.assign(static_cast<std::size_t>(width) * height * (d_max + 1),
                  0.0f);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int d_max() const noexcept { return d_max_; }
  int planes() const noexcept { return d_max_ + 1; }
  std::size_t size() const noexcept { return costs_.size(); }

  float border_cost() const noexcept { return border_cost_; }
  void set_border_cost(float c) noexcept { border_cost_ = c; }

  float at(int x, int y, int d) const {
    assert(in_bounds(x, y, d));
    return costs_[index(x, y, d)];
  }
  float& at(int x, int y, int d) {
    assert(in_bounds(x, y, d));
    return costs_[index(x, y, d)];
  }

  /// Pointer to the disparity-contiguous slice for one pixel.
  const float* pixel_costs(int x, int y) const {
    return costs_.data() + index(x, y, 0);
  }
  float* pixel_costs(int x, int y) { return costs_.data() + index(x, y, 0); }

  bool in_bounds(int x, int y, int d) const noexcept {
    return x >= 0 && x < width_ && y >= 0 && y < height_ && d >= 0 &&
           d <= d_max_;
  }

  bool all_finite() const noexcept {
    for (float c : costs_) {
      if (!std::isfinite(c)) return false;
    }
    return true;
  }

  const std::vector<float>& costs() const noexcept { return costs_; }
  std::vector<float>& costs() noexcept { return costs_; }

  std::size_t index(int x, int y, int d) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * (d_max_ + 1) + d;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int d_max_ = 0;
  float border_cost_ = 0.0f;
  std::vector<float> costs_;
};

}  // namespace stereo
