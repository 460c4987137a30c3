#include "stereo/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "stereo/errors.hpp"

namespace stereo {

int EvalConfig::bin_count() const {
  return static_cast<int>(std::llround(sigma / bin_width));
}

void EvalConfig::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("EvalConfig: sigma must be positive");
  if (!(bin_width > 0.0)) {
    throw ConfigError("EvalConfig: bin_width must be positive");
  }
  const double k = sigma / bin_width;
  if (std::fabs(k - std::llround(k)) > 1e-9 * std::max(1.0, k)) {
    throw ConfigError(
        "EvalConfig: sigma must be an integer multiple of bin_width");
  }
}

namespace {

void check_dims(const DisparityMap& a, const DisparityMap& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionError("evaluate: map dimensions differ");
  }
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

EvalReport evaluate(const DisparityMap& d, const DisparityMap& truth,
                    const EvalConfig& cfg) {
  cfg.validate();
  check_dims(d, truth);

  EvalReport r;
  r.sigma = cfg.sigma;
  r.bin_width = cfg.bin_width;
  r.histogram.assign(static_cast<std::size_t>(cfg.bin_count()), 0);

  double abs_sum = 0.0;
  double signed_sum = 0.0;
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      if (d.is_valid(x, y)) {
        ++r.n_valid;
      } else {
        ++r.n_invalid;
        continue;
      }
      if (!truth.is_valid(x, y)) continue;
      ++r.n_compared;
      const double diff =
          static_cast<double>(d.value(x, y)) - truth.value(x, y);
      const double err = std::min(std::fabs(diff), cfg.sigma);
      abs_sum += err;
      signed_sum += sign_of(diff) * err;
      int bin = static_cast<int>(std::floor(err / cfg.bin_width));
      if (bin >= cfg.bin_count()) bin = cfg.bin_count() - 1;  // err == sigma
      ++r.histogram[static_cast<std::size_t>(bin)];
    }
  }

  if (r.n_valid == 0) throw EvalError("evaluate: estimate has no valid pixel");
  if (r.n_compared == 0) {
    throw EvalError("evaluate: no pixel is valid in both maps");
  }

  r.m_ab = abs_sum / static_cast<double>(r.n_compared);
  r.m_sys = signed_sum / static_cast<double>(r.n_compared);
  r.m_cpl = 1.0 - static_cast<double>(r.n_invalid) /
                      static_cast<double>(r.n_valid);
  return r;
}

double absolute_accuracy(const DisparityMap& d, const DisparityMap& truth,
                         const EvalConfig& cfg) {
  return evaluate(d, truth, cfg).m_ab;
}

double systematic_error(const DisparityMap& d, const DisparityMap& truth,
                        const EvalConfig& cfg) {
  return evaluate(d, truth, cfg).m_sys;
}

double completeness(const DisparityMap& d) {
  std::uint64_t valid = 0;
  std::uint64_t invalid = 0;
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      if (d.is_valid(x, y)) {
        ++valid;
      } else {
        ++invalid;
      }
    }
  }
  if (valid == 0) throw EvalError("completeness: no valid pixel");
  return 1.0 - static_cast<double>(invalid) / static_cast<double>(valid);
}

std::vector<std::uint64_t> error_histogram(const DisparityMap& d,
                                           const DisparityMap& truth,
                                           const EvalConfig& cfg) {
  return evaluate(d, truth, cfg).histogram;
}

void write_report(const EvalReport& r, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path) {
  nlohmann::json j;
  j["m_ab"] = r.m_ab;
  j["m_sys"] = r.m_sys;
  j["m_cpl"] = r.m_cpl;
  j["n_valid"] = r.n_valid;
  j["n_invalid"] = r.n_invalid;
  j["n_compared"] = r.n_compared;
  j["sigma"] = r.sigma;
  j["bin_width"] = r.bin_width;
  j["histogram"] = r.histogram;

  std::ofstream jf(json_path, std::ios::trunc);
  if (!jf) throw IoError("cannot open " + json_path.string() + " for writing");
  jf << j.dump(2) << "\n";
  if (!jf) throw IoError("write failed for " + json_path.string());

  std::ofstream cf(csv_path, std::ios::trunc);
  if (!cf) throw IoError("cannot open " + csv_path.string() + " for writing");
  cf << "bin_lower,count\n";
  char buf[64];
  for (std::size_t i = 0; i < r.histogram.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.10g",
                  static_cast<double>(i) * r.bin_width);
    cf << buf << "," << r.histogram[i] << "\n";
  }
  if (!cf) throw IoError("write failed for " + csv_path.string());
}

EvalReport load_report(const std::filesystem::path& json_path) {
  std::ifstream jf(json_path);
  if (!jf) throw IoError("cannot open " + json_path.string());
  nlohmann::json j;
  try {
    jf >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed report " + json_path.string() + ": " +
                      e.what());
  }
  EvalReport r;
  try {
    r.m_ab = j.at("m_ab").get<double>();
    r.m_sys = j.at("m_sys").get<double>();
    r.m_cpl = j.at("m_cpl").get<double>();
    r.n_valid = j.at("n_valid").get<std::uint64_t>();
    r.n_invalid = j.at("n_invalid").get<std::uint64_t>();
    r.n_compared = j.at("n_compared").get<std::uint64_t>();
    r.sigma = j.at("sigma").get<double>();
    r.bin_width = j.at("bin_width").get<double>();
    r.histogram = j.at("histogram").get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("incomplete report " + json_path.string() + ": " +
                      e.what());
  }
  return r;
}

GrayImage error_magnitude_image(const DisparityMap& d,
                                const DisparityMap& truth,
                                const EvalConfig& cfg) {
  cfg.validate();
  check_dims(d, truth);
  GrayImage img(d.width(), d.height(), 0.0f);
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      if (!d.is_valid(x, y) || !truth.is_valid(x, y)) continue;
      const double err = std::min(
          std::fabs(static_cast<double>(d.value(x, y)) - truth.value(x, y)),
          cfg.sigma);
      img.at(x, y) = static_cast<float>(err / cfg.sigma);
    }
  }
  return img;
}

}  // namespace stereo
