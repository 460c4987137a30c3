#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stereo/image.hpp"

namespace stereo {

/// One valid 3x3 convolution. Weights are laid out [out][ky][kx][in],
/// contiguous over the input channel.
template <typename T>
struct ConvLayer {
  int out_channels = 0;
  int in_channels = 0;
  std::vector<T> weights;
  std::vector<T> bias;

  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * 9 * in_channels;
  }
};

/// Tied-weights feature extractor: four valid 3x3 convolutions, ReLU after
/// the first three, nothing after the last. Each layer shrinks each side by
/// 2, so a feature depends on its 9x9 neighborhood. Both siamese branches
/// share these parameters. The scalar type is templated so the gradient can
/// be checked in double precision; the production network is float.
template <typename T>
class FeatureNetworkT {
 public:
  static constexpr int kLayerCount = 4;
  static constexpr int kKernel = 3;
  static constexpr int kReceptiveField = 9;

  FeatureNetworkT() = default;

  /// Zero-initialized network with the given output widths per layer.
  explicit FeatureNetworkT(const std::array<int, kLayerCount>& widths) {
    int in = 1;
    for (int l = 0; l < kLayerCount; ++l) {
      layers_[l].in_channels = in;
      layers_[l].out_channels = widths[l];
      layers_[l].weights.assign(
          static_cast<std::size_t>(widths[l]) * 9 * in, T{0});
      layers_[l].bias.assign(static_cast<std::size_t>(widths[l]), T{0});
      in = widths[l];
    }
    validate();
  }

  const ConvLayer<T>& layer(int i) const { return layers_[i]; }
  ConvLayer<T>& layer(int i) { return layers_[i]; }

  int feature_dim() const { return layers_.back().out_channels; }

  /// Channel chain, first-layer input of 1, and buffer sizes.
  void validate() const {
    int in = 1;
    for (const auto& l : layers_) {
      if (l.in_channels != in || l.out_channels <= 0) {
        throw FormatError("FeatureNetwork: broken channel chain");
      }
      if (l.weights.size() != l.weight_count() ||
          l.bias.size() != static_cast<std::size_t>(l.out_channels)) {
        throw FormatError("FeatureNetwork: parameter buffer size mismatch");
      }
      in = l.out_channels;
    }
  }

  bool all_finite() const {
    for (const auto& l : layers_) {
      for (T v : l.weights) {
        if (!std::isfinite(static_cast<double>(v))) return false;
      }
      for (T v : l.bias) {
        if (!std::isfinite(static_cast<double>(v))) return false;
      }
    }
    return true;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  /// Flat parameter access in canonical order (per layer: weights, bias).
  T& param(std::size_t i) {
    for (auto& l : layers_) {
      if (i < l.weights.size()) return l.weights[i];
      i -= l.weights.size();
      if (i < l.bias.size()) return l.bias[i];
      i -= l.bias.size();
    }
    throw ConfigError("FeatureNetwork: parameter index out of range");
  }
  T param(std::size_t i) const {
    return const_cast<FeatureNetworkT*>(this)->param(i);
  }

  template <typename U>
  FeatureNetworkT<U> cast() const {
    std::array<int, kLayerCount> widths{};
    for (int l = 0; l < kLayerCount; ++l) {
      widths[l] = layers_[l].out_channels;
    }
    FeatureNetworkT<U> out(widths);
    for (int l = 0; l < kLayerCount; ++l) {
      auto& dst = out.layer(l);
      for (std::size_t i = 0; i < layers_[l].weights.size(); ++i) {
        dst.weights[i] = static_cast<U>(layers_[l].weights[i]);
      }
      for (std::size_t i = 0; i < layers_[l].bias.size(); ++i) {
        dst.bias[i] = static_cast<U>(layers_[l].bias[i]);
      }
    }
    return out;
  }

  friend bool operator==(const FeatureNetworkT& a, const FeatureNetworkT& b) {
    for (int l = 0; l < kLayerCount; ++l) {
      if (a.layers_[l].out_channels != b.layers_[l].out_channels ||
          a.layers_[l].in_channels != b.layers_[l].in_channels ||
          a.layers_[l].weights != b.layers_[l].weights ||
          a.layers_[l].bias != b.layers_[l].bias) {
        return false;
      }
    }
    return true;
  }

 private:
  std::array<ConvLayer<T>, kLayerCount> layers_;
};

using FeatureNetwork = FeatureNetworkT<float>;

/// He-normal initialization, bias zero, deterministic per seed.
FeatureNetwork make_network(
    const std::array<int, FeatureNetwork::kLayerCount>& widths, //
    std::uint32_t seed);
FeatureNetwork make_network(std::uint32_t seed);  // default widths 64^4

/// Per-pixel feature vectors, unit L2 norm or exactly zero. Pixels within
/// (receptive field)/2 of an edge, and pixels whose raw feature norm fell
/// below 1e-12, are zero and flagged invalid.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int width, int height, int dim)
      : width_(width), height_(height), dim_(dim),
        data_(static_cast<std::size_t>(width) * height * dim, 0.0f),
        valid_(static_cast<std::size_t>(width) * height, 0) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int dim() const noexcept { return dim_; }

  const float* vector(int x, int y) const {
    return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * dim_;
  }
  float* vector(int x, int y) {
    return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * dim_;
  }
  bool valid(int x, int y) const {
    return valid_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set_valid(int x, int y, bool v) {
    valid_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int dim_ = 0;
  std::vector<float> data_;
  std::vector<std::uint8_t> valid_;
};

/// Dense feature extraction over a whole image (valid convolutions only).
/// Throws DimensionError if the image is smaller than the receptive field.
FeatureGrid forward_features(const FeatureNetwork& net, const GrayImage& img);

/// Normalized feature of a single receptive-field patch (81 samples,
/// row-major). Matches the corresponding interior pixel of
/// forward_features up to float summation differences.
template <typename T>
std::vector<T> forward_patch(const FeatureNetworkT<T>& net,
                             std::span<const T> patch);

/// cost(p,d) = -dot(left(p), right(x-d,y)), in [-1,1]. Infeasible or
/// zero-feature entries get border cost +1.
CostVolume cnn_cost_volume(const FeatureGrid& left, const FeatureGrid& right,
                           int d_max);

/// Reference, positive and negative receptive-field patches; reference from
/// the base image, the other two from the matched image. Positive sits at
/// the true disparity, negative is offset from it.
struct PatchTriple {
  static constexpr int kPatch = 9;
  static constexpr int kPixels = kPatch * kPatch;
  std::array<float, kPixels> reference{};
  std::array<float, kPixels> positive{};
  std::array<float, kPixels> negative{};
};

/// loss = max(0, margin + s_neg - s_pos).
template <typename T>
T hinge_from_similarities(T s_pos, T s_neg, T margin) {
  const T v = margin + s_neg - s_pos;
  return v > T{0} ? v : T{0};
}

template <typename T>
struct HingeResult {
  T loss = T{0};
  T s_pos = T{0};
  T s_neg = T{0};
  /// Fingerprint of every branch decision taken in the forward pass (ReLU
  /// signs, degenerate-norm flags, hinge activity). Two evaluations with
  /// equal fingerprints lie on the same smooth piece of the loss, which is
  /// what makes a central-difference estimate of the gradient meaningful.
  std::uint64_t branch_fingerprint = 0;
};

/// Loss and, when `grad` is non-null, the gradient over all parameters
/// (canonical flat order) ACCUMULATED into *grad. The gradient flows through
/// the dot products, the normalization, the ReLUs and the convolutions of
/// all three tied branches; it is exactly zero when the loss is zero.
template <typename T>
HingeResult<T> hinge_loss(const FeatureNetworkT<T>& net, const PatchTriple& t,
                          T margin, std::vector<T>* grad = nullptr);

struct TrainParams {
  float margin = 0.2f;
  float learning_rate = 0.002f;
  int epochs = 20;
  int batch_size = 128;
  std::uint32_t seed = 1;
  bool augment = true;  ///< radiometric gain/bias jitter per presentation
};

struct TrainStats {
  std::vector<double> epoch_mean_loss;
};

/// Mini-batch SGD on the hinge loss. Deterministic per seed: shuffling,
/// augmentation draws and gradient summation all follow a fixed order.
/// Throws NumericError on a non-finite loss.
TrainStats train(FeatureNetwork& net, std::span<const PatchTriple> data,
                 const TrainParams& params);

/// Self-describing binary weight format, magic "FCNN1": layer count,
/// per-layer shape header, then little-endian 32-bit reals. Round trips
/// bit-exactly.
void save_weights(const FeatureNetwork& net,
                  const std::filesystem::path& path);
FeatureNetwork load_weights(const std::filesystem::path& path);

}  // namespace stereo
