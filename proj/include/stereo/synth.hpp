#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "stereo/cnn.hpp"
#include "stereo/image.hpp"

namespace stereo {

enum class Terrain { kConstant, kBlocks, kRamp };

/// Description of a synthetic rectified stereo scene: a random-dot left
/// image, a truth disparity field, and a right image produced by warping
/// the left with it.
struct SceneSpec {
  int width = 256;
  int height = 256;
  int d_max = 16;

  Terrain terrain = Terrain::kBlocks;
  double d_const = 5.0;  ///< constant terrain (integer-valued)
  double d_bg = 5.0;     ///< blocks: background disparity (integer-valued)
  double d_fg = 12.0;    ///< blocks: raised-rectangle disparity
  int num_blocks = 4;
  int block_min = 24;    ///< rectangle side range, pixels
  int block_max = 72;
  double ramp_min = 2.0; ///< ramp: disparity at x = 0
  double ramp_max = 10.0;///< ramp: disparity at x = width-1

  double noise_sigma = 0.0;  ///< additive Gaussian noise on the right image
  double gain = 1.0;         ///< radiometric distortion of the right image
  double bias = 0.0;

  std::uint32_t seed = 1;

  void validate() const;
};

/// Flat key=value config (one per line, '#' comments). Unknown keys are an
/// error.
SceneSpec parse_scene_spec(std::istream& in);
SceneSpec load_scene_spec(const std::filesystem::path& path);

struct Scene {
  GrayImage left;
  GrayImage right;
  DisparityMap truth;
};

/// Deterministic per spec (seed included). The right image is the left
/// warped by x' = x - d(x,y); truth is invalid where the warp occludes a
/// pixel or pushes its correspondence off-image. Gain, bias and noise apply
/// to the right image only, clamped back to [0,1].
Scene generate(const SceneSpec& spec);

/// Training triples sampled where truth is valid and all patches (with a
/// one-row jitter margin) fit. The negative patch center is offset from the
/// true position by +-[2,8] pixels. With vertical_jitter on, positive and
/// negative patches are shifted up or down by one pixel with probability
/// 0.5 each (geometric training augmentation); by default patches sit
/// exactly at the sampled row. Throws a DataError when the scene has too
/// little usable area.
std::vector<PatchTriple> extract_triples(const GrayImage& left,
                                         const GrayImage& right,
                                         const DisparityMap& truth, int count,
                                         std::uint32_t seed,
                                         bool vertical_jitter = false);

}  // namespace stereo
