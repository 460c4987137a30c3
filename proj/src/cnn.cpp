#include "stereo/cnn.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "stereo/errors.hpp"
#include "stereo/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight files assume a little-endian host");

namespace stereo {

namespace {

constexpr double kNormEpsilon = 1e-12;
constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;
constexpr std::uint64_t kInactiveFingerprint = 0;

inline void hash_bit(std::uint64_t& h, bool b) {
  h ^= static_cast<std::uint64_t>(b ? 1 : 0);
  h *= kFnvPrime;
}

/// Activations of one siamese branch, kept for backprop. Buffers are reused
/// across calls through thread-local scratch.
template <typename T>
struct BranchContext {
  // act[l]: input to layer l as [pixel][channel]; act[0] is the raw patch.
  std::array<std::vector<T>, FeatureNetwork::kLayerCount> act;
  // z[l]: layer-l convolution output before activation.
  std::array<std::vector<T>, FeatureNetwork::kLayerCount> z;
  std::vector<T> unit;  // normalized top feature, or all zeros
  T norm = T{0};
  bool degenerate = false;
};

/// Weights rearranged to [t][in][out] so the convolution accumulates along
/// the contiguous output-channel axis (independent FMA streams, which the
/// compiler can vectorize without reordering a float reduction).
template <typename T>
void transpose_weights(const ConvLayer<T>& layer, std::vector<T>& wt) {
  const int ic = layer.in_channels;
  const int oc = layer.out_channels;
  wt.resize(static_cast<std::size_t>(9) * ic * oc);
  for (int o = 0; o < oc; ++o) {
    for (int t = 0; t < 9; ++t) {
      for (int i = 0; i < ic; ++i) {
        wt[(static_cast<std::size_t>(t) * ic + i) * oc + o] =
            layer.weights[(static_cast<std::size_t>(o) * 9 + t) * ic + i];
      }
    }
  }
}

/// Valid 3x3 convolution over a [pixel][channel] buffer with row stride
/// in_w, using transposed weights.
template <typename T>
void conv_forward(const T* in, int in_w, int out_w, int out_h, const T* wt,
                  const T* bias, int ic, int oc, bool relu, T* out) {
  std::vector<T> acc(static_cast<std::size_t>(oc));
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      std::copy(bias, bias + oc, acc.begin());
      for (int t = 0; t < 9; ++t) {
        const T* a =
            in + (static_cast<std::size_t>(y + t / 3) * in_w + x + t % 3) * ic;
        const T* w = wt + static_cast<std::size_t>(t) * ic * oc;
        for (int i = 0; i < ic; ++i) {
          const T av = a[i];
          const T* wo = w + static_cast<std::size_t>(i) * oc;
          T* ao = acc.data();
          for (int o = 0; o < oc; ++o) ao[o] += av * wo[o];
        }
      }
      T* o = out + (static_cast<std::size_t>(y) * out_w + x) * oc;
      if (relu) {
        for (int k = 0; k < oc; ++k) o[k] = acc[k] > T{0} ? acc[k] : T{0};
      } else {
        std::copy(acc.begin(), acc.end(), o);
      }
    }
  }
}

template <typename T>
using TransposedWeights =
    std::array<std::vector<T>, FeatureNetwork::kLayerCount>;

template <typename T>
void transpose_all(const FeatureNetworkT<T>& net, TransposedWeights<T>& wts) {
  for (int l = 0; l < FeatureNetwork::kLayerCount; ++l) {
    transpose_weights(net.layer(l), wts[l]);
  }
}

/// Forward one patch, recording activations and (optionally) every branch
/// decision into the fingerprint.
template <typename T>
void forward_branch(const FeatureNetworkT<T>& net,
                    const TransposedWeights<T>& wts, const T* patch,
                    BranchContext<T>& ctx, std::uint64_t* fp) {
  constexpr int kRf = FeatureNetwork::kReceptiveField;
  ctx.act[0].assign(patch, patch + kRf * kRf);

  int s = kRf;
  for (int l = 0; l < FeatureNetwork::kLayerCount; ++l) {
    const auto& layer = net.layer(l);
    const int so = s - 2;
    ctx.z[l].assign(
        static_cast<std::size_t>(so) * so * layer.out_channels, T{0});
    conv_forward(ctx.act[l].data(), s, so, so, wts[l].data(),
                 layer.bias.data(), layer.in_channels, layer.out_channels,
                 false, ctx.z[l].data());
    if (l + 1 < FeatureNetwork::kLayerCount) {
      ctx.act[l + 1].resize(ctx.z[l].size());
      for (std::size_t i = 0; i < ctx.z[l].size(); ++i) {
        const bool active = ctx.z[l][i] > T{0};
        ctx.act[l + 1][i] = active ? ctx.z[l][i] : T{0};
        if (fp) hash_bit(*fp, active);
      }
    }
    s = so;
  }

  const auto& top = ctx.z[FeatureNetwork::kLayerCount - 1];
  T norm2 = T{0};
  for (T v : top) norm2 += v * v;
  ctx.norm = std::sqrt(norm2);
  ctx.degenerate = !(ctx.norm >= T(kNormEpsilon));
  if (fp) hash_bit(*fp, ctx.degenerate);

  ctx.unit.assign(top.size(), T{0});
  if (!ctx.degenerate) {
    const T inv = T{1} / ctx.norm;
    for (std::size_t i = 0; i < top.size(); ++i) ctx.unit[i] = top[i] * inv;
  }
}

/// Backprop one branch given dL/d(unit feature); parameter gradients are
/// accumulated into `grad` (canonical flat order).
template <typename T>
void backward_branch(const FeatureNetworkT<T>& net,
                     const BranchContext<T>& ctx,
                     const std::vector<T>& d_unit, std::vector<T>& grad) {
  if (ctx.degenerate) return;  // feature pinned at zero, no gradient

  // u = z / |z|:  dL/dz = (g - (g.u) u) / |z|
  const auto& unit = ctx.unit;
  T gu = T{0};
  for (std::size_t i = 0; i < unit.size(); ++i) gu += d_unit[i] * unit[i];
  const T inv_norm = T{1} / ctx.norm;
  std::vector<T> dz(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    dz[i] = (d_unit[i] - gu * unit[i]) * inv_norm;
  }

  // Flat offsets of each layer's weight block.
  std::array<std::size_t, FeatureNetwork::kLayerCount> w_off{};
  std::size_t off = 0;
  for (int l = 0; l < FeatureNetwork::kLayerCount; ++l) {
    w_off[l] = off;
    off += net.layer(l).weights.size() + net.layer(l).bias.size();
  }

  std::vector<T> da;
  int s_out = 1;
  for (int l = FeatureNetwork::kLayerCount - 1; l >= 0; --l) {
    const auto& layer = net.layer(l);
    const int s_in = s_out + 2;
    const int ic = layer.in_channels;
    const int oc = layer.out_channels;
    T* gw = grad.data() + w_off[l];
    T* gb = gw + layer.weights.size();
    const T* act = ctx.act[l].data();

    da.assign(static_cast<std::size_t>(s_in) * s_in * ic, T{0});
    for (int y = 0; y < s_out; ++y) {
      for (int x = 0; x < s_out; ++x) {
        const T* gz = dz.data() + (static_cast<std::size_t>(y) * s_out + x) * oc;
        for (int k = 0; k < oc; ++k) {
          const T g = gz[k];
          gb[k] += g;
          const T* w =
              layer.weights.data() + static_cast<std::size_t>(k) * 9 * ic;
          T* gwk = gw + static_cast<std::size_t>(k) * 9 * ic;
          for (int t = 0; t < 9; ++t) {
            const std::size_t pix =
                (static_cast<std::size_t>(y + t / 3) * s_in + x + t % 3) * ic;
            const T* __restrict a = act + pix;
            T* __restrict dai = da.data() + pix;
            const T* __restrict wt = w + static_cast<std::size_t>(t) * ic;
            T* __restrict gwt = gwk + static_cast<std::size_t>(t) * ic;
            for (int i = 0; i < ic; ++i) {
              gwt[i] += g * a[i];
              dai[i] += g * wt[i];
            }
          }
        }
      }
    }

    if (l > 0) {
      // act[l] = relu(z[l-1]): gate the incoming gradient.
      const auto& zprev = ctx.z[l - 1];
      dz.resize(da.size());
      for (std::size_t i = 0; i < da.size(); ++i) {
        dz[i] = zprev[i] > T{0} ? da[i] : T{0};
      }
    }
    s_out = s_in;
  }
}

template <typename T>
BranchContext<T>& scratch_context(int which) {
  thread_local std::array<BranchContext<T>, 3> ctx;
  return ctx[which];
}

}  // namespace

template <typename T>
std::vector<T> forward_patch(const FeatureNetworkT<T>& net,
                             std::span<const T> patch) {
  net.validate();
  if (patch.size() !=
      static_cast<std::size_t>(FeatureNetwork::kReceptiveField) *
          FeatureNetwork::kReceptiveField) {
    throw DimensionError("forward_patch: patch must be 9x9");
  }
  TransposedWeights<T> wts;
  transpose_all(net, wts);
  BranchContext<T> ctx;
  forward_branch(net, wts, patch.data(), ctx, nullptr);
  return ctx.unit;
}

template <typename T>
HingeResult<T> hinge_loss(const FeatureNetworkT<T>& net, const PatchTriple& t,
                          T margin, std::vector<T>* grad) {
  if (!(margin > T{0})) throw ConfigError("hinge_loss: margin must be > 0");
  if (grad && grad->size() != net.param_count()) {
    throw ConfigError("hinge_loss: gradient buffer size mismatch");
  }

  std::array<T, PatchTriple::kPixels> ref{}, pos{}, neg{};
  for (int i = 0; i < PatchTriple::kPixels; ++i) {
    ref[i] = static_cast<T>(t.reference[i]);
    pos[i] = static_cast<T>(t.positive[i]);
    neg[i] = static_cast<T>(t.negative[i]);
  }

  auto& c_ref = scratch_context<T>(0);
  auto& c_pos = scratch_context<T>(1);
  auto& c_neg = scratch_context<T>(2);
  thread_local TransposedWeights<T> wts;
  transpose_all(net, wts);

  std::uint64_t fp = kFnvOffset;
  forward_branch(net, wts, ref.data(), c_ref, &fp);
  forward_branch(net, wts, pos.data(), c_pos, &fp);
  forward_branch(net, wts, neg.data(), c_neg, &fp);

  HingeResult<T> res;
  for (std::size_t i = 0; i < c_ref.unit.size(); ++i) {
    res.s_pos += c_ref.unit[i] * c_pos.unit[i];
    res.s_neg += c_ref.unit[i] * c_neg.unit[i];
  }
  const T raw = margin + res.s_neg - res.s_pos;
  const bool active = raw > T{0};
  res.loss = active ? raw : T{0};
  // An inactive hinge is identically zero, so interior branch flips cannot
  // matter; collapse the fingerprint to a sentinel in that case.
  if (active) {
    hash_bit(fp, true);
    res.branch_fingerprint = fp;
  } else {
    res.branch_fingerprint = kInactiveFingerprint;
  }

  if (grad && active) {
    const std::size_t dim = c_ref.unit.size();
    std::vector<T> d_ref(dim), d_pos(dim), d_neg(dim);
    // loss = margin + u_ref.u_neg - u_ref.u_pos  (when active)
    for (std::size_t i = 0; i < dim; ++i) {
      d_ref[i] = c_neg.unit[i] - c_pos.unit[i];
      d_pos[i] = -c_ref.unit[i];
      d_neg[i] = c_ref.unit[i];
    }
    backward_branch(net, c_ref, d_ref, *grad);
    backward_branch(net, c_pos, d_pos, *grad);
    backward_branch(net, c_neg, d_neg, *grad);
  }
  return res;
}

template std::vector<float> forward_patch<float>(
    const FeatureNetworkT<float>&, std::span<const float>);
template std::vector<double> forward_patch<double>(
    const FeatureNetworkT<double>&, std::span<const double>);
template HingeResult<float> hinge_loss<float>(const FeatureNetworkT<float>&,
                                              const PatchTriple&, float,
                                              std::vector<float>*);
template HingeResult<double> hinge_loss<double>(const FeatureNetworkT<double>&,
                                                const PatchTriple&, double,
                                                std::vector<double>*);

FeatureNetwork make_network(
    const std::array<int, FeatureNetwork::kLayerCount>& widths,
    std::uint32_t seed) {
  FeatureNetwork net(widths);
  std::mt19937 rng(seed);
  for (int l = 0; l < FeatureNetwork::kLayerCount; ++l) {
    auto& layer = net.layer(l);
    const double stddev = std::sqrt(2.0 / (9.0 * layer.in_channels));
    for (auto& w : layer.weights) {
      w = static_cast<float>(normal01(rng) * stddev);
    }
    // biases stay zero
  }
  return net;
}

FeatureNetwork make_network(std::uint32_t seed) {
  return make_network({64, 64, 64, 64}, seed);
}

FeatureGrid forward_features(const FeatureNetwork& net, const GrayImage& img) {
  net.validate();
  constexpr int kRf = FeatureNetwork::kReceptiveField;
  constexpr int kMargin = kRf / 2;
  if (img.width() < kRf || img.height() < kRf) {
    throw DimensionError("forward_features: image smaller than 9x9");
  }

  std::vector<float> cur(img.data());
  std::vector<float> next;
  std::vector<float> wt;
  int cw = img.width();
  int ch = img.height();
  for (int l = 0; l < FeatureNetwork::kLayerCount; ++l) {
    const auto& layer = net.layer(l);
    const int ow = cw - 2;
    const int oh = ch - 2;
    const bool relu = l + 1 < FeatureNetwork::kLayerCount;
    next.assign(static_cast<std::size_t>(ow) * oh * layer.out_channels, 0.0f);
    transpose_weights(layer, wt);
    conv_forward(cur.data(), cw, ow, oh, wt.data(), layer.bias.data(),
                 layer.in_channels, layer.out_channels, relu, next.data());
    cur.swap(next);
    cw = ow;
    ch = oh;
  }

  const int dim = net.feature_dim();
  FeatureGrid grid(img.width(), img.height(), dim);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      const float* v = cur.data() + (static_cast<std::size_t>(y) * cw + x) * dim;
      float norm2 = 0.0f;
      for (int i = 0; i < dim; ++i) norm2 += v[i] * v[i];
      const float norm = std::sqrt(norm2);
      if (!(norm >= static_cast<float>(kNormEpsilon))) continue;
      float* out = grid.vector(x + kMargin, y + kMargin);
      const float inv = 1.0f / norm;
      for (int i = 0; i < dim; ++i) out[i] = v[i] * inv;
      grid.set_valid(x + kMargin, y + kMargin, true);
    }
  }
  return grid;
}

CostVolume cnn_cost_volume(const FeatureGrid& left, const FeatureGrid& right,
                           int d_max) {
  if (left.width() != right.width() || left.height() != right.height()) {
    throw DimensionError("cnn_cost_volume: grid dimensions differ");
  }
  if (left.dim() != right.dim()) {
    throw DimensionError("cnn_cost_volume: feature dimensions differ");
  }
  if (d_max < 0) throw ConfigError("cnn_cost_volume: d_max must be >= 0");

  constexpr float kBorder = 1.0f;
  const int dim = left.dim();
  CostVolume cv(left.width(), left.height(), d_max, kBorder);
  for (int y = 0; y < left.height(); ++y) {
    for (int x = 0; x < left.width(); ++x) {
      float* costs = cv.pixel_costs(x, y);
      if (!left.valid(x, y)) {
        for (int d = 0; d <= d_max; ++d) costs[d] = kBorder;
        continue;
      }
      const float* fl = left.vector(x, y);
      for (int d = 0; d <= d_max; ++d) {
        const int xr = x - d;
        if (xr < 0 || !right.valid(xr, y)) {
          costs[d] = kBorder;
          continue;
        }
        const float* fr = right.vector(xr, y);
        float dot = 0.0f;
        for (int i = 0; i < dim; ++i) dot += fl[i] * fr[i];
        costs[d] = -dot;
      }
    }
  }
  return cv;
}

TrainStats train(FeatureNetwork& net, std::span<const PatchTriple> data,
                 const TrainParams& params) {
  net.validate();
  if (data.empty()) throw ConfigError("train: no training data");
  if (!(params.margin > 0.0f)) throw ConfigError("train: margin must be > 0");
  if (params.learning_rate < 0.0f) {
    throw ConfigError("train: learning rate must be >= 0");
  }
  if (params.epochs < 1 || params.batch_size < 1) {
    throw ConfigError("train: epochs and batch size must be >= 1");
  }

  std::mt19937 rng(params.seed);
  std::vector<std::uint32_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = static_cast<std::uint32_t>(i);
  }

  std::vector<float> grad(net.param_count(), 0.0f);
  TrainStats stats;
  PatchTriple presented;

  auto jitter = [&](std::array<float, PatchTriple::kPixels>& p) {
    if (uniform01(rng) >= 0.5f) return;
    const float gain = 0.8f + uniform01(rng) * 0.45f;
    const float bias = -0.1f + uniform01(rng) * 0.2f;
    for (auto& v : p) v = std::clamp(gain * v + bias, 0.0f, 1.0f);
  };

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += params.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + params.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0f);
      for (std::size_t i = start; i < end; ++i) {
        presented = data[order[i]];
        if (params.augment) {
          jitter(presented.reference);
          jitter(presented.positive);
          jitter(presented.negative);
        }
        const auto res = hinge_loss<float>(net, presented, params.margin,
                                           &grad);
        if (!std::isfinite(res.loss)) {
          throw NumericError("train: non-finite loss at epoch " +
                             std::to_string(epoch) + ", sample " +
                             std::to_string(i));
        }
        loss_sum += res.loss;
      }
      const float step =
          params.learning_rate / static_cast<float>(end - start);
      std::size_t off = 0;
      for (int l = 0; l < FeatureNetwork::kLayerCount; ++l) {
        auto& layer = net.layer(l);
        for (auto& w : layer.weights) w -= step * grad[off++];
        for (auto& b : layer.bias) b -= step * grad[off++];
      }
    }
    stats.epoch_mean_loss.push_back(loss_sum /
                                    static_cast<double>(data.size()));
  }
  return stats;
}

namespace {

constexpr char kWeightMagic[5] = {'F', 'C', 'N', 'N', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (in.gcount() != 4) throw FormatError("truncated weight file " + path);
  return v;
}

}  // namespace

void save_weights(const FeatureNetwork& net,
                  const std::filesystem::path& path) {
  net.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");

  out.write(kWeightMagic, sizeof(kWeightMagic));
  write_u32(out, FeatureNetwork::kLayerCount);
  for (int l = 0; l < FeatureNetwork::kLayerCount; ++l) {
    write_u32(out, static_cast<std::uint32_t>(net.layer(l).out_channels));
    write_u32(out, static_cast<std::uint32_t>(net.layer(l).in_channels));
    write_u32(out, FeatureNetwork::kKernel);
  }
  for (int l = 0; l < FeatureNetwork::kLayerCount; ++l) {
    const auto& layer = net.layer(l);
    out.write(reinterpret_cast<const char*>(layer.weights.data()),
              static_cast<std::streamsize>(layer.weights.size()) * 4);
    out.write(reinterpret_cast<const char*>(layer.bias.data()),
              static_cast<std::streamsize>(layer.bias.size()) * 4);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

FeatureNetwork load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  char magic[sizeof(kWeightMagic)] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) ||
      std::memcmp(magic, kWeightMagic, sizeof(magic)) != 0) {
    if (in.gcount() == sizeof(magic) &&
        std::memcmp(magic, kWeightMagic, 4) == 0) {
      throw FormatError("unsupported weight format version in " +
                        path.string());
    }
    throw FormatError("not a weight file: " + path.string());
  }

  const std::uint32_t count = read_u32(in, path.string());
  if (count != FeatureNetwork::kLayerCount) {
    throw FormatError("expected 4 layers in " + path.string() + ", found " +
                      std::to_string(count));
  }

  std::array<int, FeatureNetwork::kLayerCount> widths{};
  int expected_in = 1;
  for (int l = 0; l < FeatureNetwork::kLayerCount; ++l) {
    const std::uint32_t out_ch = read_u32(in, path.string());
    const std::uint32_t in_ch = read_u32(in, path.string());
    const std::uint32_t kernel = read_u32(in, path.string());
    if (kernel != FeatureNetwork::kKernel) {
      throw FormatError("unsupported kernel size in " + path.string());
    }
    if (out_ch == 0 || out_ch > 4096) {
      throw FormatError("implausible channel count in " + path.string());
    }
    if (static_cast<int>(in_ch) != expected_in) {
      throw FormatError("broken layer chain in " + path.string() +
                        ": layer " + std::to_string(l) + " expects input " +
                        std::to_string(in_ch) + ", previous layer provides " +
                        std::to_string(expected_in));
    }
    widths[l] = static_cast<int>(out_ch);
    expected_in = static_cast<int>(out_ch);
  }

  FeatureNetwork net(widths);
  for (int l = 0; l < FeatureNetwork::kLayerCount; ++l) {
    auto& layer = net.layer(l);
    in.read(reinterpret_cast<char*>(layer.weights.data()),
            static_cast<std::streamsize>(layer.weights.size()) * 4);
    if (in.gcount() != static_cast<std::streamsize>(layer.weights.size()) * 4) {
      throw FormatError("truncated weight file " + path.string());
    }
    in.read(reinterpret_cast<char*>(layer.bias.data()),
            static_cast<std::streamsize>(layer.bias.size()) * 4);
    if (in.gcount() != static_cast<std::streamsize>(layer.bias.size()) * 4) {
      throw FormatError("truncated weight file " + path.string());
    }
  }
  if (!net.all_finite()) {
    throw DataError("non-finite parameters in " + path.string());
  }
  return net;
}

}  // namespace stereo
