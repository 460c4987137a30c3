#include "stereo/sgm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "stereo/errors.hpp"

namespace stereo {

namespace {

void validate_params(const SgmParams& p) {
  if (p.p1 < 0.0f || p.p2 < p.p1) {
    throw ConfigError("SgmParams: need 0 <= p1 <= p2");
  }
  if (p.p1 > 0.0f && p.p2 <= 0.0f) {
    throw ConfigError("SgmParams: p2 must be positive when p1 is");
  }
  if (p.num_paths != 4 && p.num_paths != 8) {
    throw ConfigError("SgmParams: num_paths must be 4 or 8");
  }
}

// One scanline pass. Writes the full L volume; assumes finite input.
void aggregate_path_impl(const CostVolume& cv, int dir_x, int dir_y,
                         float p1, float p2, std::vector<float>& out) {
  const int w = cv.width();
  const int h = cv.height();
  const int planes = cv.planes();
  const float* c = cv.costs().data();

  out.assign(cv.size(), 0.0f);
  // Minimum of L over d for every already-processed pixel.
  std::vector<float> min_l(static_cast<std::size_t>(w) * h, 0.0f);

  const int y0 = dir_y >= 0 ? 0 : h - 1;
  const int y_step = dir_y >= 0 ? 1 : -1;
  const int x0 = dir_x >= 0 ? 0 : w - 1;
  const int x_step = dir_x >= 0 ? 1 : -1;

  for (int yi = 0; yi < h; ++yi) {
    const int y = y0 + yi * y_step;
    for (int xi = 0; xi < w; ++xi) {
      const int x = x0 + xi * x_step;
      const std::size_t pix = static_cast<std::size_t>(y) * w + x;
      const std::size_t base = pix * planes;

      const int px = x - dir_x;
      const int py = y - dir_y;
      float lo = std::numeric_limits<float>::infinity();
      if (px < 0 || px >= w || py < 0 || py >= h) {
        // Path start.
        for (int d = 0; d < planes; ++d) {
          const float v = c[base + d];
          out[base + d] = v;
          lo = std::min(lo, v);
        }
      } else {
        const std::size_t prev_pix = static_cast<std::size_t>(py) * w + px;
        const float* lp = out.data() + prev_pix * planes;
        const float m = min_l[prev_pix];
        // Work with L(q,.) - m so zero penalties collapse to L = C exactly.
        for (int d = 0; d < planes; ++d) {
          float best = lp[d] - m;
          if (d > 0) best = std::min(best, lp[d - 1] - m + p1);
          if (d + 1 < planes) best = std::min(best, lp[d + 1] - m + p1);
          best = std::min(best, p2);
          const float v = c[base + d] + best;
          out[base + d] = v;
          lo = std::min(lo, v);
        }
      }
      min_l[pix] = lo;
    }
  }
}

}  // namespace

CostVolume normalize_costs(const CostVolume& cv) {
  if (!cv.all_finite()) throw DataError("normalize_costs: non-finite cost");

  const auto [lo_it, hi_it] =
      std::minmax_element(cv.costs().begin(), cv.costs().end());
  const float lo = *lo_it;
  const float hi = *hi_it;

  CostVolume out(cv.width(), cv.height(), cv.d_max(), 0.0f);
  if (hi == lo) {
    return out;  // constant volume maps to all zeros
  }
  const float scale = 1.0f / (hi - lo);
  for (std::size_t i = 0; i < cv.size(); ++i) {
    out.costs()[i] = (cv.costs()[i] - lo) * scale;
  }
  out.set_border_cost((cv.border_cost() - lo) * scale);
  return out;
}

CostVolume aggregate_path(const CostVolume& cv, int dir_x, int dir_y,
                          float p1, float p2) {
  if ((dir_x == 0 && dir_y == 0) || dir_x < -1 || dir_x > 1 || dir_y < -1 ||
      dir_y > 1) {
    throw ConfigError("aggregate_path: direction must be a unit step");
  }
  if (p1 < 0.0f || p2 < p1) {
    throw ConfigError("aggregate_path: need 0 <= p1 <= p2");
  }
  if (!cv.all_finite()) throw DataError("aggregate_path: non-finite cost");

  CostVolume out(cv.width(), cv.height(), cv.d_max(), cv.border_cost());
  aggregate_path_impl(cv, dir_x, dir_y, p1, p2, out.costs());
  out.set_border_cost(
      *std::max_element(out.costs().begin(), out.costs().end()));
  return out;
}

CostVolume aggregate(const CostVolume& cv, const SgmParams& params) {
  validate_params(params);
  if (!cv.all_finite()) throw DataError("aggregate: non-finite cost");

  static constexpr std::array<std::array<int, 2>, 8> kDirections = {{
      {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1},
  }};

  const CostVolume* input = &cv;
  CostVolume normalized;
  if (params.normalize) {
    normalized = normalize_costs(cv);
    input = &normalized;
  }

  // Per-path sums are accumulated in double, in the fixed direction order,
  // so the result is schedule-independent and exact when penalties are zero.
  std::vector<double> acc(cv.size(), 0.0);
  std::vector<float> path;
  for (int i = 0; i < params.num_paths; ++i) {
    aggregate_path_impl(*input, kDirections[i][0], kDirections[i][1],
                        params.p1, params.p2, path);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += path[j];
  }

  CostVolume out(cv.width(), cv.height(), cv.d_max(), 0.0f);
  float hi = -std::numeric_limits<float>::infinity();
  for (std::size_t j = 0; j < acc.size(); ++j) {
    const float v = static_cast<float>(acc[j]);
    out.costs()[j] = v;
    hi = std::max(hi, v);
  }
  out.set_border_cost(hi);
  return out;
}

}  // namespace stereo
