#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "evfuse/binary_io.hpp"
#include "evfuse/common.hpp"

namespace evfuse {

using FeatureMap = Tensor3<double>;

// Per-element blending weights for the image branch; every entry lies in (0, 1).
struct AttentionMap {
  Tensor3<double> tensor;

  static AttentionMap constant(std::size_t c, std::size_t h, std::size_t w, double value) {
    return AttentionMap{Tensor3<double>(c, h, w, value)};
  }
};

// Per-location noise variances of the two observations of a shared latent.
struct VarianceField {
  Field2 img;
  Field2 evt;

  VarianceField(Field2 sigma2_img, Field2 sigma2_evt) : img(std::move(sigma2_img)), evt(std::move(sigma2_evt)) {
    if (img.height != evt.height || img.width != evt.width) {
      throw ValidationError("variance fields differ in shape");
    }
  }
};

// Minimum-variance weight on the image observation: s_evt / (s_img + s_evt).
// The smaller of the two ratios is computed directly and the other as its
// complement, so optimal_alpha(a, b) + optimal_alpha(b, a) == 1 exactly.
inline double optimal_alpha(double sigma2_img, double sigma2_evt) {
  if (!(sigma2_img >= 0.0) || !(sigma2_evt >= 0.0)) throw ValidationError("variances must be >= 0");
  const double total = sigma2_img + sigma2_evt;
  if (!(total > 0.0)) throw ValidationError("both variances are zero");
  if (sigma2_evt <= sigma2_img) return sigma2_evt / total;
  return 1.0 - sigma2_img / total;
}

// Variance of the optimally fused estimator, s_img * s_evt / (s_img + s_evt).
inline double fused_variance(double sigma2_img, double sigma2_evt) {
  if (!(sigma2_img >= 0.0) || !(sigma2_evt >= 0.0)) throw ValidationError("variances must be >= 0");
  const double total = sigma2_img + sigma2_evt;
  if (!(total > 0.0)) throw ValidationError("both variances are zero");
  const double lo = std::min(sigma2_img, sigma2_evt);
  const double hi = std::max(sigma2_img, sigma2_evt);
  return lo * (hi / total);
}

// Variance of alpha * F_img + (1 - alpha) * F_evt for independent noises.
inline double blend_variance(double alpha, double sigma2_img, double sigma2_evt) {
  return alpha * alpha * sigma2_img + (1.0 - alpha) * (1.0 - alpha) * sigma2_evt;
}

inline Field2 optimal_alpha(const VarianceField& vars) {
  Field2 out(vars.img.height, vars.img.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    if (!(vars.img.data[i] + vars.evt.data[i] > 0.0)) {
      throw ValidationError("both variances are zero at (" + std::to_string(i / out.width) + ", " +
                            std::to_string(i % out.width) + ")");
    }
    out.data[i] = optimal_alpha(vars.img.data[i], vars.evt.data[i]);
  }
  return out;
}

inline Field2 fused_variance(const VarianceField& vars) {
  Field2 out(vars.img.height, vars.img.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    if (!(vars.img.data[i] + vars.evt.data[i] > 0.0)) {
      throw ValidationError("both variances are zero at (" + std::to_string(i / out.width) + ", " +
                            std::to_string(i % out.width) + ")");
    }
    out.data[i] = fused_variance(vars.img.data[i], vars.evt.data[i]);
  }
  return out;
}

// alpha * f_img + (1 - alpha) * f_evt, elementwise. Evaluated as
// f_evt + alpha * (f_img - f_evt) so equal inputs are returned bit-exactly.
inline FeatureMap weighted_fuse(const FeatureMap& f_img, const FeatureMap& f_evt, const AttentionMap& alpha) {
  if (!f_img.same_shape(f_evt) || !f_img.same_shape(alpha.tensor)) {
    throw ValidationError("weighted_fuse shape mismatch: img " + shape_string(f_img) + ", evt " +
                          shape_string(f_evt) + ", alpha " + shape_string(alpha.tensor));
  }
  FeatureMap out(f_img.channels, f_img.height, f_img.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double a = alpha.tensor.data[i];
    out.data[i] = f_evt.data[i] + a * (f_img.data[i] - f_evt.data[i]);
  }
  return out;
}

// Convolution kernel bank, weights laid out (out, in, kh, kw).
struct ConvWeights {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  ConvWeights() = default;
  ConvWeights(std::size_t out, std::size_t in, std::size_t kh, std::size_t kw)
      : out_channels(out), in_channels(in), kernel_h(kh), kernel_w(kw),
        weights(out * in * kh * kw, 0.0), bias(out, 0.0) {}

  double& w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
    return weights[((o * in_channels + i) * kernel_h + ky) * kernel_w + kx];
  }
  double w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights[((o * in_channels + i) * kernel_h + ky) * kernel_w + kx];
  }

  void validate() const {
    if (weights.size() != out_channels * in_channels * kernel_h * kernel_w || bias.size() != out_channels) {
      throw ValidationError("conv weights do not match declared shape");
    }
  }
};

// Stride-1 cross-correlation with symmetric zero padding `pad`, plus bias.
inline FeatureMap conv2d(const FeatureMap& input, const ConvWeights& k, std::size_t pad) {
  k.validate();
  if (input.channels != k.in_channels) {
    throw ValidationError("conv expects " + std::to_string(k.in_channels) + " input channels, got " +
                          std::to_string(input.channels));
  }
  if (input.height + 2 * pad < k.kernel_h || input.width + 2 * pad < k.kernel_w) {
    throw ValidationError("conv kernel larger than padded input");
  }
  const std::size_t oh = input.height + 2 * pad - k.kernel_h + 1;
  const std::size_t ow = input.width + 2 * pad - k.kernel_w + 1;
  FeatureMap out(k.out_channels, oh, ow);
  for (std::size_t o = 0; o < k.out_channels; ++o) {
    auto dst = out.plane(o);
    std::fill(dst.begin(), dst.end(), k.bias[o]);
    for (std::size_t i = 0; i < k.in_channels; ++i) {
      const auto src = input.plane(i);
      for (std::size_t ky = 0; ky < k.kernel_h; ++ky) {
        for (std::size_t kx = 0; kx < k.kernel_w; ++kx) {
          const double wv = k.w(o, i, ky, kx);
          if (wv == 0.0) continue;
          // Output rows/cols whose tap lands inside the unpadded input.
          const std::size_t y_lo = pad > ky ? pad - ky : 0;
          const std::size_t x_lo = pad > kx ? pad - kx : 0;
          const std::size_t y_hi = std::min(oh, input.height + pad - ky);
          const std::size_t x_hi = std::min(ow, input.width + pad - kx);
          for (std::size_t y = y_lo; y < y_hi; ++y) {
            const std::size_t sy = y + ky - pad;
            for (std::size_t x = x_lo; x < x_hi; ++x) {
              dst[y * ow + x] += wv * src[sy * input.width + x + kx - pad];
            }
          }
        }
      }
    }
  }
  return out;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Attention forward pass: sigmoid(conv3x3(relu(conv1x1([f_img; f_evt])))).
// w1 maps 2C -> C with a 1x1 kernel, w2 maps C -> C with a 3x3 kernel, pad 1.
inline AttentionMap acmf_attention(const FeatureMap& f_img, const FeatureMap& f_evt, const ConvWeights& w1,
                                   const ConvWeights& w2) {
  if (!f_img.same_shape(f_evt)) {
    throw ValidationError("attention inputs differ in shape: " + shape_string(f_img) + " vs " +
                          shape_string(f_evt));
  }
  const std::size_t c = f_img.channels;
  if (w1.kernel_h != 1 || w1.kernel_w != 1 || w1.in_channels != 2 * c || w1.out_channels != c) {
    throw ValidationError("w1 must be a 1x1 conv from " + std::to_string(2 * c) + " to " +
                          std::to_string(c) + " channels");
  }
  if (w2.kernel_h != 3 || w2.kernel_w != 3 || w2.in_channels != c || w2.out_channels != c) {
    throw ValidationError("w2 must be a 3x3 conv from " + std::to_string(c) + " to " + std::to_string(c) +
                          " channels");
  }

  FeatureMap stacked(2 * c, f_img.height, f_img.width);
  std::copy(f_img.data.begin(), f_img.data.end(), stacked.data.begin());
  std::copy(f_evt.data.begin(), f_evt.data.end(), stacked.data.begin() + static_cast<std::ptrdiff_t>(f_img.size()));

  auto hidden = conv2d(stacked, w1, 0);
  for (double& v : hidden.data) v = std::max(0.0, v);
  auto logits = conv2d(hidden, w2, 1);

  AttentionMap alpha{std::move(logits)};
  for (double& v : alpha.tensor.data) {
    // Clamp into the open interval: sigmoid saturates to exactly 0/1 in double
    // beyond |z| ~ 37.
    v = std::clamp(sigmoid(v), std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
  }
  return alpha;
}

inline constexpr double kDefaultAlphaLambda = 1e-3;

// lambda * sum (alpha - 0.5)^2.
inline double alpha_regularizer(const AttentionMap& alpha, double lambda = kDefaultAlphaLambda) {
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  double s = 0.0;
  for (double a : alpha.tensor.data) s += (a - 0.5) * (a - 0.5);
  return lambda * s;
}

// d/d alpha of alpha_regularizer: 2 * lambda * (alpha - 0.5).
inline Tensor3<double> alpha_regularizer_grad(const AttentionMap& alpha, double lambda = kDefaultAlphaLambda) {
  Tensor3<double> g = alpha.tensor;
  for (double& a : g.data) a = 2.0 * lambda * (a - 0.5);
  return g;
}

// Expands a 3-input-channel first layer to `target_in` channels by giving
// every new input slice the mean of the three RGB slices.
inline ConvWeights channel_avg_init(const ConvWeights& w_rgb, std::size_t target_in = 8) {
  w_rgb.validate();
  if (w_rgb.in_channels != 3) {
    throw ValidationError("channel_avg_init expects 3 input channels, got " + std::to_string(w_rgb.in_channels));
  }
  if (target_in == 0) throw ValidationError("target_in must be > 0");
  ConvWeights out(w_rgb.out_channels, target_in, w_rgb.kernel_h, w_rgb.kernel_w);
  out.bias = w_rgb.bias;
  for (std::size_t o = 0; o < w_rgb.out_channels; ++o) {
    for (std::size_t ky = 0; ky < w_rgb.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < w_rgb.kernel_w; ++kx) {
        // Anchored on the first slice so equal slices map to themselves exactly.
        const double r = w_rgb.w(o, 0, ky, kx);
        const double mean = r + ((w_rgb.w(o, 1, ky, kx) - r) + (w_rgb.w(o, 2, ky, kx) - r)) / 3.0;
        for (std::size_t i = 0; i < target_in; ++i) out.w(o, i, ky, kx) = mean;
      }
    }
  }
  return out;
}

namespace detail {

// Channel-pooled unbiased sample variance per (y, x): each sample is centred on
// the per-(c, y, x) mean of its own modality.
inline Field2 pooled_sample_variance(std::span<const FeatureMap> samples) {
  const auto& first = samples.front();
  for (const auto& s : samples) {
    if (!s.same_shape(first)) throw ValidationError("samples differ in shape");
  }
  const auto n = static_cast<double>(samples.size());
  const std::size_t plane = first.plane_size();
  Field2 out(first.height, first.width, 0.0);
  for (std::size_t c = 0; c < first.channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      // Welford over the n samples at this element.
      double mean = 0.0;
      double m2 = 0.0;
      double k = 0.0;
      for (const auto& s : samples) {
        const double v = s.data[c * plane + p];
        k += 1.0;
        const double d = v - mean;
        mean += d / k;
        m2 += d * (v - mean);
      }
      out.data[p] += m2 / (n - 1.0);
    }
  }
  for (double& v : out.data) v /= static_cast<double>(first.channels);
  return out;
}

}  // namespace detail

// Plug-in estimate of the optimal weight field from repeated observations of
// both modalities.
inline Field2 estimate_alpha_from_samples(std::span<const FeatureMap> samples_img,
                                          std::span<const FeatureMap> samples_evt) {
  if (samples_img.size() < 2 || samples_evt.size() < 2) {
    throw ValidationError("need at least 2 samples per modality");
  }
  if (!samples_img.front().same_shape(samples_evt.front())) {
    throw ValidationError("modalities differ in shape");
  }
  return optimal_alpha(VarianceField(detail::pooled_sample_variance(samples_img),
                                     detail::pooled_sample_variance(samples_evt)));
}

// EVWT: "EVWT", u32 version, u32 out, in, kh, kw, f32 weights, f32 biases.
inline std::vector<char> encode_conv_weights(const ConvWeights& k) {
  k.validate();
  binary::Writer w;
  w.magic("EVWT");
  w.u32(binary::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(k.out_channels));
  w.u32(static_cast<std::uint32_t>(k.in_channels));
  w.u32(static_cast<std::uint32_t>(k.kernel_h));
  w.u32(static_cast<std::uint32_t>(k.kernel_w));
  for (double v : k.weights) w.f32(static_cast<float>(v));
  for (double v : k.bias) w.f32(static_cast<float>(v));
  return w.bytes();
}

inline ConvWeights decode_conv_weights(std::span<const char> bytes) {
  binary::Reader r(bytes, "EVWT");
  r.expect_magic("EVWT");
  r.expect_version();
  const auto o = r.u32();
  const auto i = r.u32();
  const auto kh = r.u32();
  const auto kw = r.u32();
  r.require_remaining((std::uint64_t{o} * i * kh * kw + o) * 4);
  ConvWeights k(o, i, kh, kw);
  for (double& v : k.weights) v = r.f32();
  for (double& v : k.bias) v = r.f32();
  r.expect_end();
  for (double v : k.weights) {
    if (!std::isfinite(v)) throw ValidationError("EVWT: non-finite weight");
  }
  return k;
}

// EVFM: "EVFM", u32 version, u32 C, H, W, then C*H*W f32. Used for feature
// maps and attention maps.
inline std::vector<char> encode_feature_map(const FeatureMap& f) {
  binary::Writer w;
  w.magic("EVFM");
  w.u32(binary::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(f.channels));
  w.u32(static_cast<std::uint32_t>(f.height));
  w.u32(static_cast<std::uint32_t>(f.width));
  for (double v : f.data) w.f32(static_cast<float>(v));
  return w.bytes();
}

inline FeatureMap decode_feature_map(std::span<const char> bytes) {
  binary::Reader r(bytes, "EVFM");
  r.expect_magic("EVFM");
  r.expect_version();
  const auto c = r.u32();
  const auto h = r.u32();
  const auto w = r.u32();
  r.require_remaining(std::uint64_t{c} * h * w * 4);
  FeatureMap f(c, h, w);
  for (double& v : f.data) {
    v = r.f32();
    if (!std::isfinite(v)) throw ValidationError("EVFM: non-finite value");
  }
  r.expect_end();
  return f;
}

}  // namespace evfuse
