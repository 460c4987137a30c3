#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "stereo/image.hpp"

namespace stereo {

/// Error cap and histogram bin width, in disparity units.
struct EvalConfig {
  double sigma = 10.0;
  double bin_width = 0.1;

  int bin_count() const;
  /// sigma > 0, bin_width > 0, sigma an integer multiple of bin_width.
  void validate() const;
};

/// One disparity-vs-truth comparison. m_ab and m_sys average the capped
/// error min(|d - d_g|, sigma) over pixels valid in both maps; m_cpl is
/// 1 - n_invalid / n_valid over the estimate alone; the histogram bins the
/// same capped errors with half-open bins, the cap landing in the last one.
struct EvalReport {
  double m_ab = 0.0;
  double m_sys = 0.0;
  double m_cpl = 0.0;
  std::vector<std::uint64_t> histogram;
  std::uint64_t n_valid = 0;    ///< valid pixels in the estimate
  std::uint64_t n_invalid = 0;  ///< invalid pixels in the estimate
  std::uint64_t n_compared = 0; ///< co-valid pixels entering m_ab / m_sys
  double sigma = 0.0;
  double bin_width = 0.0;
};

/// All metrics and the histogram in a single pass.
/// Throws EvalError when no co-valid pixel exists or the estimate has no
/// valid pixel.
EvalReport evaluate(const DisparityMap& d, const DisparityMap& truth,
                    const EvalConfig& cfg);

/// Mean capped absolute error over co-valid pixels.
double absolute_accuracy(const DisparityMap& d, const DisparityMap& truth,
                         const EvalConfig& cfg);

/// Mean signed capped error over co-valid pixels; sign(0) = 0.
double systematic_error(const DisparityMap& d, const DisparityMap& truth,
                        const EvalConfig& cfg);

/// 1 - n_invalid / n_valid, exactly as written (can go negative).
double completeness(const DisparityMap& d);

/// Capped-error histogram alone.
std::vector<std::uint64_t> error_histogram(const DisparityMap& d,
                                           const DisparityMap& truth,
                                           const EvalConfig& cfg);

/// Deterministic JSON report plus a CSV sidecar of histogram bins
/// (columns: bin_lower, count).
void write_report(const EvalReport& r, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path);

/// Reads back a JSON report written by write_report.
EvalReport load_report(const std::filesystem::path& json_path);

/// Per-pixel capped error magnitudes scaled to [0,1] for a quick-look dump;
/// pixels invalid in either map render as 0.
GrayImage error_magnitude_image(const DisparityMap& d,
                                const DisparityMap& truth,
                                const EvalConfig& cfg);

}  // namespace stereo
