#include "stereo/disparity.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "stereo/errors.hpp"

namespace stereo {

DisparityMap wta(const CostVolume& cv) {
  if (!cv.all_finite()) throw DataError("wta: non-finite cost");

  DisparityMap map(cv.width(), cv.height());
  for (int y = 0; y < cv.height(); ++y) {
    for (int x = 0; x < cv.width(); ++x) {
      const float* costs = cv.pixel_costs(x, y);
      int best = 0;
      for (int d = 1; d <= cv.d_max(); ++d) {
        if (costs[d] < costs[best]) best = d;
      }
      map.set(x, y, static_cast<float>(best));
    }
  }
  return map;
}

DisparityMap subpixel_refine(const CostVolume& cv, const DisparityMap& d) {
  if (cv.width() != d.width() || cv.height() != d.height()) {
    throw DimensionError("subpixel_refine: dimensions differ");
  }

  DisparityMap out = d;
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      if (!d.is_valid(x, y)) continue;
      const int di = static_cast<int>(std::lround(d.value(x, y)));
      if (di <= 0 || di >= cv.d_max()) continue;  // range boundary
      const float* costs = cv.pixel_costs(x, y);
      const float cm = costs[di - 1];
      const float c0 = costs[di];
      const float cp = costs[di + 1];
      const float denom = cm - 2.0f * c0 + cp;
      if (denom <= 0.0f) continue;
      float offset = (cm - cp) / (2.0f * denom);
      offset = std::clamp(offset, -0.5f, 0.5f);
      out.set(x, y, static_cast<float>(di) + offset);
    }
  }
  return out;
}

DisparityMap lr_check(const DisparityMap& left, const DisparityMap& right,
                      float tol) {
  if (left.width() != right.width() || left.height() != right.height()) {
    throw DimensionError("lr_check: dimensions differ");
  }

  DisparityMap out = left;
  for (int y = 0; y < left.height(); ++y) {
    for (int x = 0; x < left.width(); ++x) {
      if (!left.is_valid(x, y)) continue;
      const float dl = left.value(x, y);
      const int xr = x - static_cast<int>(std::lround(dl));
      if (xr < 0 || xr >= right.width() || !right.is_valid(xr, y) ||
          std::fabs(dl - right.value(xr, y)) > tol) {
        out.set_invalid(x, y);
      }
    }
  }
  return out;
}

CostVolume right_cost_volume(const CostVolume& left) {
  if (!left.all_finite()) throw DataError("right_cost_volume: non-finite cost");

  CostVolume out(left.width(), left.height(), left.d_max(),
                 left.border_cost());
  for (int y = 0; y < left.height(); ++y) {
    for (int x = 0; x < left.width(); ++x) {
      float* costs = out.pixel_costs(x, y);
      for (int d = 0; d <= left.d_max(); ++d) {
        const int xl = x + d;
        costs[d] = xl < left.width() ? left.at(xl, y, d) : left.border_cost();
      }
    }
  }
  return out;
}

DisparityMap median_fuse(std::span<const DisparityMap> maps) {
  if (maps.empty()) throw ConfigError("median_fuse: need at least one map");
  const int w = maps.front().width();
  const int h = maps.front().height();
  for (const auto& m : maps) {
    if (m.width() != w || m.height() != h) {
      throw DimensionError("median_fuse: map dimensions differ");
    }
  }

  DisparityMap out(w, h);
  std::vector<float> vals;
  vals.reserve(maps.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      vals.clear();
      for (const auto& m : maps) {
        if (m.is_valid(x, y)) vals.push_back(m.value(x, y));
      }
      if (vals.empty()) continue;
      const std::size_t k = (vals.size() - 1) / 2;  // lower median
      std::nth_element(vals.begin(), vals.begin() + k, vals.end());
      out.set(x, y, vals[k]);
    }
  }
  return out;
}

}  // namespace stereo
