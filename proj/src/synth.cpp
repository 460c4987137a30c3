#include "stereo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "stereo/errors.hpp"
#include "stereo/rng.hpp"

namespace stereo {

namespace {

bool is_integral(double v) { return v == std::floor(v); }

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

void SceneSpec::validate() const {
  if (width < 16 || height < 16) {
    throw ConfigError("SceneSpec: scene must be at least 16x16");
  }
  if (d_max < 1) throw ConfigError("SceneSpec: d_max must be >= 1");
  if (noise_sigma < 0.0) throw ConfigError("SceneSpec: negative noise_sigma");
  if (gain <= 0.0) throw ConfigError("SceneSpec: gain must be positive");

  auto in_range = [&](double d) { return d >= 0.0 && d <= d_max; };
  switch (terrain) {
    case Terrain::kConstant:
      if (!in_range(d_const) || !is_integral(d_const)) {
        throw ConfigError(
            "SceneSpec: d_const must be an integer in [0, d_max]");
      }
      break;
    case Terrain::kBlocks:
      if (!in_range(d_bg) || !in_range(d_fg) || !is_integral(d_bg) ||
          !is_integral(d_fg)) {
        throw ConfigError(
            "SceneSpec: block disparities must be integers in [0, d_max]");
      }
      if (num_blocks < 1) throw ConfigError("SceneSpec: num_blocks < 1");
      if (block_min < 4 || block_max < block_min || block_max > width) {
        throw ConfigError("SceneSpec: bad block size range");
      }
      break;
    case Terrain::kRamp:
      if (!in_range(ramp_min) || !in_range(ramp_max)) {
        throw ConfigError("SceneSpec: ramp endpoints outside [0, d_max]");
      }
      if (std::fabs(ramp_max - ramp_min) >= width - 1) {
        throw ConfigError("SceneSpec: ramp slope must stay below 1 px/px");
      }
      break;
  }
}

SceneSpec parse_scene_spec(std::istream& in) {
  SceneSpec spec;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("scene config line " + std::to_string(lineno) +
                        ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto lb = s.find_first_not_of(" \t");
      if (lb == std::string::npos) return std::string();
      const auto le = s.find_last_not_of(" \t");
      return s.substr(lb, le - lb + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("scene config line " + std::to_string(lineno) +
                        ": empty key or value");
    }

    auto as_int = [&](int& out) { out = std::stoi(value); };
    auto as_double = [&](double& out) { out = std::stod(value); };
    try {
      if (key == "width") as_int(spec.width);
      else if (key == "height") as_int(spec.height);
      else if (key == "dmax") as_int(spec.d_max);
      else if (key == "terrain") {
        if (value == "constant") spec.terrain = Terrain::kConstant;
        else if (value == "blocks") spec.terrain = Terrain::kBlocks;
        else if (value == "ramp") spec.terrain = Terrain::kRamp;
        else throw ConfigError("scene config: unknown terrain '" + value + "'");
      }
      else if (key == "d_const") as_double(spec.d_const);
      else if (key == "d_bg") as_double(spec.d_bg);
      else if (key == "d_fg") as_double(spec.d_fg);
      else if (key == "num_blocks") as_int(spec.num_blocks);
      else if (key == "block_min") as_int(spec.block_min);
      else if (key == "block_max") as_int(spec.block_max);
      else if (key == "ramp_min") as_double(spec.ramp_min);
      else if (key == "ramp_max") as_double(spec.ramp_max);
      else if (key == "noise_sigma") as_double(spec.noise_sigma);
      else if (key == "gain") as_double(spec.gain);
      else if (key == "bias") as_double(spec.bias);
      else if (key == "seed") {
        spec.seed = static_cast<std::uint32_t>(std::stoul(value));
      }
      else {
        throw ConfigError("scene config line " + std::to_string(lineno) +
                          ": unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("scene config line " + std::to_string(lineno) +
                        ": malformed value '" + value + "'");
    }
  }
  spec.validate();
  return spec;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_scene_spec(in);
}

Scene generate(const SceneSpec& spec) {
  spec.validate();
  const int w = spec.width;
  const int h = spec.height;
  std::mt19937 rng(spec.seed);

  // 1. Random-dot left image.
  GrayImage left(w, h);
  for (auto& v : left.data()) v = uniform01(rng);

  // 2. Truth disparity field.
  std::vector<double> field(static_cast<std::size_t>(w) * h, 0.0);
  switch (spec.terrain) {
    case Terrain::kConstant:
      std::fill(field.begin(), field.end(), spec.d_const);
      break;
    case Terrain::kBlocks: {
      std::fill(field.begin(), field.end(), spec.d_bg);
      for (int b = 0; b < spec.num_blocks; ++b) {
        const int bw = spec.block_min +
                       static_cast<int>(bounded_uint(
                           rng, spec.block_max - spec.block_min + 1));
        const int bh = spec.block_min +
                       static_cast<int>(bounded_uint(
                           rng, spec.block_max - spec.block_min + 1));
        const int x0 = static_cast<int>(
            bounded_uint(rng, std::max(1, w - bw)));
        const int y0 = static_cast<int>(
            bounded_uint(rng, std::max(1, h - bh)));
        for (int y = y0; y < std::min(h, y0 + bh); ++y) {
          for (int x = x0; x < std::min(w, x0 + bw); ++x) {
            field[static_cast<std::size_t>(y) * w + x] = spec.d_fg;
          }
        }
      }
      break;
    }
    case Terrain::kRamp:
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          field[static_cast<std::size_t>(y) * w + x] =
              spec.ramp_min +
              (spec.ramp_max - spec.ramp_min) * x / (w - 1);
        }
      }
      break;
  }

  // 3. Warp left into right, row by row, marking occlusions and off-image
  //    correspondences invalid in truth.
  DisparityMap truth(w, h);
  GrayImage right(w, h);
  std::vector<std::uint8_t> covered(static_cast<std::size_t>(w));

  const bool fractional = spec.terrain == Terrain::kRamp;
  for (int y = 0; y < h; ++y) {
    const double* drow = field.data() + static_cast<std::size_t>(y) * w;

    if (!fractional) {
      // Integer warp. A pixel is visible iff its target is strictly left of
      // every target to its right (closer surfaces have larger disparity).
      std::fill(covered.begin(), covered.end(), 0);
      int min_target = w;  // running min of targets seen right of x
      for (int x = w - 1; x >= 0; --x) {
        const int target = x - static_cast<int>(drow[x]);
        if (target < 0 || target >= min_target) continue;  // off-image/occluded
        min_target = target;
        truth.set(x, y, static_cast<float>(drow[x]));
        right.at(target, y) = left.at(x, y);
        covered[static_cast<std::size_t>(target)] = 1;
      }
      // Disoccluded right pixels show fresh texture.
      for (int t = 0; t < w; ++t) {
        if (!covered[t]) right.at(t, y) = uniform01(rng);
      }
    } else {
      // Monotone fractional warp (slope below 1): invert x - d(x) by
      // marching both coordinates and sample the left image linearly.
      int k = 0;
      auto target = [&](int x) { return x - drow[x]; };
      for (int t = 0; t < w; ++t) {
        while (k + 1 < w && target(k + 1) <= t) ++k;
        if (target(k) > t || k + 1 >= w) {
          right.at(t, y) = uniform01(rng);  // revealed at the image edge
          continue;
        }
        const double span = target(k + 1) - target(k);
        const double frac = span > 0.0 ? (t - target(k)) / span : 0.0;
        right.at(t, y) = static_cast<float>(
            (1.0 - frac) * left.at(k, y) + frac * left.at(k + 1, y));
      }
      for (int x = 0; x < w; ++x) {
        if (target(x) >= 0.0) truth.set(x, y, static_cast<float>(drow[x]));
      }
    }
  }

  // 4. Radiometric distortion and noise on the right image.
  const bool noisy = spec.noise_sigma > 0.0;
  if (spec.gain != 1.0 || spec.bias != 0.0 || noisy) {
    for (auto& v : right.data()) {
      double out = spec.gain * v + spec.bias;
      if (noisy) out += spec.noise_sigma * normal01(rng);
      v = static_cast<float>(clamp01(out));
    }
  }

  return Scene{std::move(left), std::move(right), std::move(truth)};
}

std::vector<PatchTriple> extract_triples(const GrayImage& left,
                                         const GrayImage& right,
                                         const DisparityMap& truth, int count,
                                         std::uint32_t seed,
                                         bool vertical_jitter) {
  if (left.width() != right.width() || left.height() != right.height() ||
      left.width() != truth.width() || left.height() != truth.height()) {
    throw DimensionError("extract_triples: input dimensions differ");
  }
  if (count < 1) throw ConfigError("extract_triples: count must be >= 1");

  constexpr int kHalf = PatchTriple::kPatch / 2;
  constexpr int kJitterMargin = 1;
  const int w = left.width();
  const int h = left.height();
  if (w < PatchTriple::kPatch + 2 ||
      h < PatchTriple::kPatch + 2 * kJitterMargin) {
    throw DimensionError("extract_triples: scene too small for patches");
  }

  std::mt19937 rng(seed);
  std::vector<PatchTriple> out;
  out.reserve(static_cast<std::size_t>(count));

  auto cut = [&](const GrayImage& img, int cx, int cy,
                 std::array<float, PatchTriple::kPixels>& dst) {
    int i = 0;
    for (int py = cy - kHalf; py <= cy + kHalf; ++py) {
      for (int px = cx - kHalf; px <= cx + kHalf; ++px) {
        dst[i++] = img.at(px, py);
      }
    }
  };

  const long max_attempts = static_cast<long>(count) * 1000L;
  long attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > max_attempts) {
      throw DataError(
          "extract_triples: insufficient valid area in the scene");
    }
    const int x = kHalf + static_cast<int>(
                              bounded_uint(rng, w - 2 * kHalf));
    const int y = kHalf + kJitterMargin +
                  static_cast<int>(bounded_uint(
                      rng, h - 2 * (kHalf + kJitterMargin)));
    if (!truth.is_valid(x, y)) continue;
    const int d = static_cast<int>(std::lround(truth.value(x, y)));

    const int x_pos = x - d;
    if (x_pos - kHalf < 0 || x_pos + kHalf >= w) continue;

    // Negative offset: magnitude 2..8, random sign, kept in-image.
    const int mag = 2 + static_cast<int>(bounded_uint(rng, 7));
    const bool flip = bounded_uint(rng, 2) != 0;
    int x_neg = x_pos + (flip ? mag : -mag);
    if (x_neg - kHalf < 0 || x_neg + kHalf >= w) {
      x_neg = x_pos + (flip ? -mag : mag);
      if (x_neg - kHalf < 0 || x_neg + kHalf >= w) continue;
    }

    auto vjitter = [&]() {
      if (!vertical_jitter || uniform01(rng) >= 0.5f) return 0;
      return bounded_uint(rng, 2) != 0 ? 1 : -1;
    };

    PatchTriple t;
    cut(left, x, y, t.reference);
    cut(right, x_pos, y + vjitter(), t.positive);
    cut(right, x_neg, y + vjitter(), t.negative);
    out.push_back(t);
  }
  return out;
}

}  // namespace stereo
