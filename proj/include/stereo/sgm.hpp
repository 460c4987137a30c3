#pragma once

#include "stereo/image.hpp"

namespace stereo {

/// Semi-global aggregation parameters. Penalties apply to costs after the
/// optional normalization to [0,1], so one (p1,p2) pair works for both
/// matching metrics.
struct SgmParams {
  float p1 = 0.03f;      ///< penalty for |delta d| == 1
  float p2 = 0.3f;       ///< penalty for |delta d| > 1
  int num_paths = 8;     ///< 4 (axis-aligned) or 8 (plus diagonals)
  bool normalize = true; ///< affinely map input costs to [0,1] first
};

/// Affine map of the whole volume onto [0,1]; a constant volume maps to all
/// zeros. Per-pixel argmin over d is unchanged.
CostVolume normalize_costs(const CostVolume& cv);

/// Aggregate along a single path direction (dir_x, dir_y), both in {-1,0,1},
/// not both zero. Scanline recurrence, initialized with L = C at path starts:
///
///   L(p,d) = C(p,d) + min( L(q,d),
///                          L(q,d-1) + p1, L(q,d+1) + p1,
///                          min_k L(q,k) + p2 ) - min_k L(q,k),  q = p - dir
///
/// computed so that p1 = p2 = 0 collapses to L = C exactly.
CostVolume aggregate_path(const CostVolume& cv, int dir_x, int dir_y,
                          float p1, float p2);

/// Sum of single-path aggregations over a fixed direction order
/// (W, E, N, S, then the four diagonals), first num_paths directions.
/// Output is independent of any internal scheduling.
CostVolume aggregate(const CostVolume& cv, const SgmParams& params);

}  // namespace stereo
