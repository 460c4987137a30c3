#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stereo/image.hpp"

namespace stereo {

/// Per-pixel census bit strings. Bit k of S(p) is 1 iff the center intensity
/// is strictly greater than the k-th window pixel (row-major, center
/// skipped); ties give 0. Strings are packed LSB-first into 64-bit words.
/// Pixels whose window exits the image are undefined.
class CensusGrid {
 public:
  CensusGrid() = default;
  CensusGrid(int width, int height, int radius);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int radius() const noexcept { return radius_; }

  /// String length: (2*radius+1)^2 - 1 bits.
  int bit_count() const noexcept {
    const int side = 2 * radius_ + 1;
    return side * side - 1;
  }
  int words_per_pixel() const noexcept { return (bit_count() + 63) / 64; }

  bool defined(int x, int y) const {
    return defined_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }

  std::span<const std::uint64_t> bits(int x, int y) const {
    const std::size_t base =
        (static_cast<std::size_t>(y) * width_ + x) * words_per_pixel();
    return {words_.data() + base, static_cast<std::size_t>(words_per_pixel())};
  }

  std::uint64_t* mutable_bits(int x, int y) {
    return words_.data() +
           (static_cast<std::size_t>(y) * width_ + x) * words_per_pixel();
  }
  void mark_defined(int x, int y) {
    defined_[static_cast<std::size_t>(y) * width_ + x] = 1;
  }

  friend bool operator==(const CensusGrid& a, const CensusGrid& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           a.radius_ == b.radius_ && a.defined_ == b.defined_ &&
           a.words_ == b.words_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int radius_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<std::uint8_t> defined_;
};

/// Census transform with a (2*radius+1)^2 window.
/// Throws DimensionError if the image is smaller than the window.
CensusGrid census_transform(const GrayImage& img, int radius);

/// Hamming-distance cost volume between two census grids of equal shape.
/// cost(p,d) compares S_left(p) with S_right(x-d, y). Infeasible
/// correspondences and undefined strings get border cost = bit_count().
CostVolume census_cost_volume(const CensusGrid& left, const CensusGrid& right,
                              int d_max);

/// Hamming distance between two packed bit strings of equal word count.
std::uint32_t hamming_distance(std::span<const std::uint64_t> a,
                               std::span<const std::uint64_t> b);

}  // namespace stereo
