#pragma once

#include <span>

#include "stereo/image.hpp"

namespace stereo {

/// Winner-take-all: d(p) = argmin over d of cost(p,d), ties broken toward
/// the smaller disparity. Every pixel gets a value.
DisparityMap wta(const CostVolume& cv);

/// Parabolic subpixel refinement through the costs at (d-1, d, d+1):
///   offset = (c_m - c_p) / (2 * (c_m - 2*c_0 + c_p)), clamped to [-0.5, 0.5].
/// Skipped at the disparity range boundaries and when the denominator is
/// not positive. `d` must come from wta on `cv`.
DisparityMap subpixel_refine(const CostVolume& cv, const DisparityMap& d);

/// Left-right consistency: pixel p stays valid iff
/// |dL(p) - dR(p - dL(p))| <= tol and the lookup lands on a valid pixel
/// inside the right map. Values are never changed, only validity.
DisparityMap lr_check(const DisparityMap& left, const DisparityMap& right,
                      float tol = 1.0f);

/// Matched-image cost volume from the base-image one:
/// C_R(x,d) = C_L(x+d, d) where in range, border cost otherwise. Valid
/// because both metrics' pairwise costs are symmetric in the two patches.
CostVolume right_cost_volume(const CostVolume& left);

/// Per-pixel median of the valid values across maps (lower median for even
/// counts). A pixel is invalid iff no input is valid there.
DisparityMap median_fuse(std::span<const DisparityMap> maps);

}  // namespace stereo
