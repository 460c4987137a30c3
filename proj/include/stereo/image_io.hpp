#pragma once

#include <filesystem>

#include "stereo/image.hpp"

namespace stereo {

/// Load a binary PGM (magic "P5", maxval 255). 8-bit values map to
/// intensities v/255 in [0,1].
GrayImage load_pgm(const std::filesystem::path& path);

/// Write a binary PGM (magic "P5", maxval 255). Intensities are clamped to
/// [0,1] and quantized by rounding.
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

/// Load a grayscale PFM (magic "Pf", negative scale = little-endian,
/// bottom-up rows). -inf samples become invalid pixels; NaN or +inf is a
/// data error.
DisparityMap load_pfm(const std::filesystem::path& path);

/// Write a grayscale PFM with scale line "-1.0". Invalid pixels are stored
/// as -inf. load_pfm(save_pfm(m)) == m bit-exactly.
void save_pfm(const DisparityMap& map, const std::filesystem::path& path);

}  // namespace stereo
