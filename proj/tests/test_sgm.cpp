#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "stereo/disparity.hpp"
#include "stereo/errors.hpp"
#include "stereo/sgm.hpp"
#include "test_util.hpp"

using namespace stereo;

namespace {

// Brute-force Viterbi along a single row, left to right, without the
// min_k renormalization. The subtraction is constant in d at each pixel,
// so per-pixel argmins must agree with aggregate_path.
std::vector<int> viterbi_argmin_row(const CostVolume& cv, int y, float p1,
                                    float p2) {
  const int w = cv.width();
  const int planes = cv.planes();
  std::vector<float> prev(planes), curr(planes);
  std::vector<int> arg(w);
  for (int d = 0; d < planes; ++d) prev[d] = cv.at(0, y, d);
  auto best_of = [&](const std::vector<float>& v) {
    int b = 0;
    for (int d = 1; d < planes; ++d) {
      if (v[d] < v[b]) b = d;
    }
    return b;
  };
  arg[0] = best_of(prev);
  for (int x = 1; x < w; ++x) {
    for (int d = 0; d < planes; ++d) {
      float best = std::numeric_limits<float>::infinity();
      for (int k = 0; k < planes; ++k) {
        const float pen = k == d ? 0.0f : (std::abs(k - d) == 1 ? p1 : p2);
        best = std::min(best, prev[k] + pen);
      }
      curr[d] = cv.at(x, y, d) + best;
    }
    arg[x] = best_of(curr);
    prev = curr;
  }
  return arg;
}

}  // namespace

TEST_CASE("sgm: zero penalties collapse to num_paths x input, exactly") {
  const CostVolume cv = testutil::random_volume(9, 7, 4, 3, 0.0f, 5.0f);
  for (int paths : {4, 8}) {
    SgmParams p;
    p.p1 = 0.0f;
    p.p2 = 0.0f;
    p.num_paths = paths;
    p.normalize = false;
    const CostVolume agg = aggregate(cv, p);
    for (std::size_t i = 0; i < cv.size(); ++i) {
      CHECK(agg.costs()[i] == static_cast<float>(paths) * cv.costs()[i]);
    }
  }
}

TEST_CASE("sgm: single-path argmin matches the Viterbi oracle") {
  int checked = 0;
  for (std::uint32_t seed = 1; seed <= 50; ++seed) {
    const int w = 2 + seed % 7;       // up to 8
    const int d_max = 1 + seed % 3;   // up to 3
    const CostVolume cv = testutil::random_volume(w, 1, d_max, seed);
    const CostVolume agg = aggregate_path(cv, 1, 0, 0.1f, 0.4f);
    const std::vector<int> oracle = viterbi_argmin_row(cv, 0, 0.1f, 0.4f);
    for (int x = 0; x < w; ++x) {
      int best = 0;
      for (int d = 1; d <= d_max; ++d) {
        if (agg.at(x, 0, d) < agg.at(x, 0, best)) best = d;
      }
      CHECK(best == oracle[x]);
      ++checked;
    }
  }
  CHECK(checked > 200);
}

TEST_CASE("sgm: constant volume stays constant across d") {
  const CostVolume cv(6, 5, 3, 2.0f);
  CostVolume filled = cv;
  for (auto& c : filled.costs()) c = 2.0f;
  SgmParams p;
  p.normalize = false;
  const CostVolume agg = aggregate(filled, p);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 6; ++x) {
      for (int d = 1; d <= 3; ++d) {
        CHECK(agg.at(x, y, d) == agg.at(x, y, 0));
      }
    }
  }
}

TEST_CASE("sgm: normalize maps affinely onto [0,1]") {
  CostVolume cv(2, 1, 2, 80.0f);
  cv.at(0, 0, 0) = 0.0f;
  cv.at(0, 0, 1) = 40.0f;
  cv.at(0, 0, 2) = 80.0f;
  cv.at(1, 0, 0) = 10.0f;
  cv.at(1, 0, 1) = 20.0f;
  cv.at(1, 0, 2) = 30.0f;
  const CostVolume n = normalize_costs(cv);
  CHECK(n.at(0, 0, 0) == 0.0f);
  CHECK(n.at(0, 0, 1) == 0.5f);
  CHECK(n.at(0, 0, 2) == 1.0f);

  CostVolume cv2(1, 1, 1, 1.0f);
  cv2.at(0, 0, 0) = -1.0f;
  cv2.at(0, 0, 1) = 1.0f;
  const CostVolume n2 = normalize_costs(cv2);
  CHECK(n2.at(0, 0, 0) == 0.0f);
  CHECK(n2.at(0, 0, 1) == 1.0f);

  CostVolume flat(3, 3, 2, 7.0f);
  for (auto& c : flat.costs()) c = 7.0f;
  const CostVolume nf = normalize_costs(flat);
  for (float c : nf.costs()) CHECK(c == 0.0f);
}

TEST_CASE("sgm: normalization preserves per-pixel argmin") {
  for (std::uint32_t seed : {5u, 6u, 7u}) {
    const CostVolume cv = testutil::random_volume(7, 6, 5, seed, -3.0f, 9.0f);
    const CostVolume n = normalize_costs(cv);
    const DisparityMap a = wta(cv);
    const DisparityMap b = wta(n);
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 7; ++x) {
        CHECK(a.value(x, y) == b.value(x, y));
      }
    }
  }
}

TEST_CASE("sgm: adding a constant shifts output by num_paths x constant") {
  const CostVolume cv = testutil::random_volume(8, 6, 3, 11);
  CostVolume shifted = cv;
  const float c = 0.375f;
  for (auto& v : shifted.costs()) v += c;
  SgmParams p;
  p.normalize = false;
  const CostVolume a = aggregate(cv, p);
  const CostVolume b = aggregate(shifted, p);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b.costs()[i] ==
          doctest::Approx(a.costs()[i] + 8.0f * c).epsilon(1e-4));
  }
  // argmin is untouched
  const DisparityMap da = wta(a);
  const DisparityMap db = wta(b);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) CHECK(da.value(x, y) == db.value(x, y));
  }
}

TEST_CASE("sgm: 8 paths equal the sum of eight single-path runs") {
  const CostVolume cv = testutil::random_volume(9, 8, 4, 17);
  SgmParams p;
  p.normalize = false;
  const CostVolume agg = aggregate(cv, p);

  static constexpr int dirs[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                     {1, 1},  {-1, -1}, {1, -1}, {-1, 1}};
  std::vector<double> sum(cv.size(), 0.0);
  for (const auto& d : dirs) {
    const CostVolume path = aggregate_path(cv, d[0], d[1], p.p1, p.p2);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += path.costs()[i];
  }
  for (std::size_t i = 0; i < sum.size(); ++i) {
    CHECK(agg.costs()[i] == static_cast<float>(sum[i]));
  }
}

TEST_CASE("sgm: parameter and data validation") {
  const CostVolume cv = testutil::random_volume(4, 4, 2, 1);
  SgmParams p;
  p.p1 = 0.5f;
  p.p2 = 0.1f;  // p2 < p1
  CHECK_THROWS_AS(aggregate(cv, p), ConfigError);
  p = SgmParams{};
  p.num_paths = 5;
  CHECK_THROWS_AS(aggregate(cv, p), ConfigError);

  CostVolume bad = cv;
  bad.at(1, 1, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(aggregate(bad, SgmParams{}), DataError);
  CHECK_THROWS_AS(normalize_costs(bad), DataError);
}
