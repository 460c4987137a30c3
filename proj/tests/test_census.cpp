#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "stereo/census.hpp"
#include "stereo/errors.hpp"
#include "test_util.hpp"

using namespace stereo;

namespace {

// Straight re-statement of the transform definition, bit by bit, without
// any packing; used as the oracle for the cost volume.
int naive_census_cost(const GrayImage& left, const GrayImage& right, int x,
                      int y, int d, int radius) {
  const int bits = (2 * radius + 1) * (2 * radius + 1) - 1;
  const int xr = x - d;
  auto window_inside = [&](const GrayImage& img, int cx, int cy) {
    return cx - radius >= 0 && cx + radius < img.width() && cy - radius >= 0 &&
           cy + radius < img.height();
  };
  if (xr < 0 || !window_inside(left, x, y) || !window_inside(right, xr, y)) {
    return bits;
  }
  int dist = 0;
  for (int wy = -radius; wy <= radius; ++wy) {
    for (int wx = -radius; wx <= radius; ++wx) {
      if (wx == 0 && wy == 0) continue;
      const bool bl = left.at(x, y) > left.at(x + wx, y + wy);
      const bool br = right.at(xr, y) > right.at(xr + wx, y + wy);
      dist += bl != br;
    }
  }
  return dist;
}

}  // namespace

TEST_CASE("census: 3x3 patch bit pattern by hand") {
  GrayImage img(3, 3);
  float v = 0.1f;
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) {
      img.at(x, y) = v;  // 0.1 .. 0.9 in raster order
      v += 0.1f;
    }
  }
  const CensusGrid grid = census_transform(img, 1);
  REQUIRE(grid.defined(1, 1));
  REQUIRE(grid.bit_count() == 8);
  // center 0.5 vs neighbors (0.1,0.2,0.3,0.4,0.6,0.7,0.8,0.9)
  // -> bits 1,1,1,1,0,0,0,0 packed LSB-first
  CHECK(grid.bits(1, 1)[0] == 0x0Fu);
  // corner windows exit the image
  CHECK_FALSE(grid.defined(0, 0));
  CHECK_FALSE(grid.defined(2, 2));
}

TEST_CASE("census: constant image gives all-zero strings (ties are 0)") {
  const GrayImage img(12, 10, 0.42f);
  const CensusGrid grid = census_transform(img, 2);
  for (int y = 2; y < 8; ++y) {
    for (int x = 2; x < 10; ++x) {
      REQUIRE(grid.defined(x, y));
      for (auto w : grid.bits(x, y)) CHECK(w == 0u);
    }
  }
}

TEST_CASE("census: invariant under strictly increasing intensity maps") {
  for (std::uint32_t seed : {3u, 14u, 15u}) {
    const GrayImage img = testutil::random_image(16, 16, seed);
    GrayImage gamma = img;
    for (auto& v : gamma.data()) v = std::sqrt(v);
    GrayImage affine = img;
    for (auto& v : affine.data()) v = 0.2f + 0.5f * v;

    const CensusGrid base = census_transform(img, 3);
    CHECK(census_transform(gamma, 3) == base);
    CHECK(census_transform(affine, 3) == base);
  }
}

TEST_CASE("census: hamming distance basics") {
  const std::uint64_t a[] = {0x0Fu};
  const std::uint64_t b[] = {0x3Fu};  // differs in 2 positions
  CHECK(hamming_distance({a, 1}, {b, 1}) == 2);
  CHECK(hamming_distance({b, 1}, {a, 1}) == 2);
  CHECK(hamming_distance({a, 1}, {a, 1}) == 0);

  std::mt19937 rng(9);
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t w[2] = {rng(), rng()};
    const std::uint64_t v[2] = {rng(), rng()};
    CHECK(hamming_distance({w, 2}, {v, 2}) == hamming_distance({v, 2}, {w, 2}));
  }
}

TEST_CASE("census: identical images cost 0 at d = 0") {
  const GrayImage img = testutil::random_image(14, 11, 21);
  const CensusGrid g = census_transform(img, 2);
  const CostVolume cv = census_cost_volume(g, g, 3);
  for (int y = 2; y < 9; ++y) {
    for (int x = 2; x < 12; ++x) CHECK(cv.at(x, y, 0) == 0.0f);
  }
}

TEST_CASE("census: cost volume equals the per-bit oracle") {
  const GrayImage left = testutil::random_image(12, 12, 30);
  const GrayImage right = testutil::random_image(12, 12, 31);
  const int radius = 2;
  const CensusGrid gl = census_transform(left, radius);
  const CensusGrid gr = census_transform(right, radius);
  const CostVolume cv = census_cost_volume(gl, gr, 4);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 12; ++x) {
      for (int d = 0; d <= 4; ++d) {
        CHECK(cv.at(x, y, d) ==
              static_cast<float>(
                  naive_census_cost(left, right, x, y, d, radius)));
      }
    }
  }
}

TEST_CASE("census: costs bounded by the string length") {
  const GrayImage left = testutil::random_image(20, 15, 40);
  const GrayImage right = testutil::random_image(20, 15, 41);
  const CensusGrid gl = census_transform(left, 4);
  const CensusGrid gr = census_transform(right, 4);
  const CostVolume cv = census_cost_volume(gl, gr, 6);
  CHECK(gl.bit_count() == 80);
  for (float c : cv.costs()) {
    CHECK(c >= 0.0f);
    CHECK(c <= 80.0f);
  }
}

TEST_CASE("census: one-image monotone map leaves the cost volume bit-identical") {
  const GrayImage left = testutil::random_image(16, 16, 50);
  const GrayImage right = testutil::random_image(16, 16, 51);
  GrayImage right_gamma = right;
  for (auto& v : right_gamma.data()) v = std::sqrt(v);

  const CensusGrid gl = census_transform(left, 3);
  const CostVolume a = census_cost_volume(gl, census_transform(right, 3), 5);
  const CostVolume b =
      census_cost_volume(gl, census_transform(right_gamma, 3), 5);
  CHECK(a.costs() == b.costs());
}

TEST_CASE("census: contract errors") {
  CHECK_THROWS_AS(census_transform(GrayImage(5, 5), 3), DimensionError);
  CHECK_THROWS_AS(census_transform(GrayImage(10, 10), 0), ConfigError);

  const CensusGrid a = census_transform(GrayImage(10, 10, 0.5f), 2);
  const CensusGrid b = census_transform(GrayImage(11, 10, 0.5f), 2);
  const CensusGrid c = census_transform(GrayImage(10, 10, 0.5f), 3);
  CHECK_THROWS_AS(census_cost_volume(a, b, 2), DimensionError);
  CHECK_THROWS_AS(census_cost_volume(a, c, 2), DimensionError);
}
