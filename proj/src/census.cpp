#include "stereo/census.hpp"

#include <bit>
#include <cassert>

#include "stereo/errors.hpp"

namespace stereo {

CensusGrid::CensusGrid(int width, int height, int radius)
    : width_(width), height_(height), radius_(radius) {
  if (width <= 0 || height <= 0) {
    throw DimensionError("CensusGrid: dimensions must be positive");
  }
  if (radius < 1) throw ConfigError("CensusGrid: radius must be >= 1");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  words_.assign(n * words_per_pixel(), 0);
  defined_.assign(n, 0);
}

CensusGrid census_transform(const GrayImage& img, int radius) {
  if (radius < 1) throw ConfigError("census_transform: radius must be >= 1");
  const int side = 2 * radius + 1;
  if (img.width() < side || img.height() < side) {
    throw DimensionError("census_transform: image smaller than census window");
  }

  CensusGrid grid(img.width(), img.height(), radius);
  for (int y = radius; y < img.height() - radius; ++y) {
    for (int x = radius; x < img.width() - radius; ++x) {
      const float center = img.at(x, y);
      std::uint64_t* words = grid.mutable_bits(x, y);
      int k = 0;
      for (int wy = -radius; wy <= radius; ++wy) {
        for (int wx = -radius; wx <= radius; ++wx) {
          if (wx == 0 && wy == 0) continue;
          if (center > img.at(x + wx, y + wy)) {
            words[k >> 6] |= std::uint64_t{1} << (k & 63);
          }
          ++k;
        }
      }
      grid.mark_defined(x, y);
    }
  }
  return grid;
}

std::uint32_t hamming_distance(std::span<const std::uint64_t> a,
                               std::span<const std::uint64_t> b) {
  assert(a.size() == b.size());
  std::uint32_t dist = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dist += static_cast<std::uint32_t>(std::popcount(a[i] ^ b[i]));
  }
  return dist;
}

CostVolume census_cost_volume(const CensusGrid& left, const CensusGrid& right,
                              int d_max) {
  if (left.width() != right.width() || left.height() != right.height()) {
    throw DimensionError("census_cost_volume: grid dimensions differ");
  }
  if (left.radius() != right.radius()) {
    throw DimensionError("census_cost_volume: grid radii differ");
  }
  if (d_max < 0) throw ConfigError("census_cost_volume: d_max must be >= 0");

  const float border = static_cast<float>(left.bit_count());
  CostVolume cv(left.width(), left.height(), d_max, border);
  for (int y = 0; y < left.height(); ++y) {
    for (int x = 0; x < left.width(); ++x) {
      float* costs = cv.pixel_costs(x, y);
      if (!left.defined(x, y)) {
        for (int d = 0; d <= d_max; ++d) costs[d] = border;
        continue;
      }
      const auto s_left = left.bits(x, y);
      for (int d = 0; d <= d_max; ++d) {
        const int xr = x - d;
        costs[d] = (xr >= 0 && right.defined(xr, y))
                       ? static_cast<float>(
                             hamming_distance(s_left, right.bits(xr, y)))
                       : border;
      }
    }
  }
  return cv;
}

}  // namespace stereo
