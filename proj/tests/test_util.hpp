#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "stereo/image.hpp"
#include "stereo/rng.hpp"

namespace testutil {

/// Unique temp directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937 rng(std::random_device{}());
    dir_ = std::filesystem::temp_directory_path() /
           ("stereodm_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path path(const std::string& name) const {
    return dir_ / name;
  }

 private:
  std::filesystem::path dir_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_bytes(const std::filesystem::path& p,
                        const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline stereo::GrayImage random_image(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  stereo::GrayImage img(w, h);
  for (auto& v : img.data()) v = stereo::uniform01(rng);
  return img;
}

inline stereo::DisparityMap random_map(int w, int h, float d_max,
                                       double invalid_frac,
                                       std::uint32_t seed) {
  std::mt19937 rng(seed);
  stereo::DisparityMap map(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (stereo::uniform01(rng) < invalid_frac) continue;
      map.set(x, y, stereo::uniform01(rng) * d_max);
    }
  }
  return map;
}

inline stereo::CostVolume random_volume(int w, int h, int d_max,
                                        std::uint32_t seed, float lo = 0.0f,
                                        float hi = 1.0f) {
  std::mt19937 rng(seed);
  stereo::CostVolume cv(w, h, d_max, hi);
  for (auto& c : cv.costs()) c = lo + stereo::uniform01(rng) * (hi - lo);
  return cv;
}

}  // namespace testutil
