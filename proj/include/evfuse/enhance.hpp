#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "evfuse/binary_io.hpp"
#include "evfuse/common.hpp"

namespace evfuse {

enum class ValueRange : std::uint8_t {
  kByte = 0,  // integer values 0..255 stored as float
  kUnit = 1,  // reals in [0, 1]
};

struct ImageTensor {
  Tensor3<float> tensor;
  ValueRange range = ValueRange::kUnit;

  ImageTensor() = default;
  ImageTensor(std::size_t c, std::size_t h, std::size_t w, ValueRange r, float fill = 0.0f)
      : tensor(c, h, w, fill), range(r) {}

  std::size_t channels() const { return tensor.channels; }
  std::size_t height() const { return tensor.height; }
  std::size_t width() const { return tensor.width; }
  float& at(std::size_t c, std::size_t y, std::size_t x) { return tensor.at(c, y, x); }
  float at(std::size_t c, std::size_t y, std::size_t x) const { return tensor.at(c, y, x); }

  void validate() const {
    for (float v : tensor.data) {
      if (range == ValueRange::kByte) {
        if (!(v >= 0.0f && v <= 255.0f) || v != std::nearbyint(v)) {
          throw ValidationError("image value " + std::to_string(v) + " not an integer in 0..255");
        }
      } else if (!(v >= 0.0f && v <= 1.0f)) {
        throw ValidationError("image value " + std::to_string(v) + " outside [0, 1]");
      }
    }
  }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;
};

// Low-light synthesis: clip(gamma * clean + N, 0, 1), N ~ Normal(0, sigma_c^2)
// independently per pixel with a per-channel sigma (one value broadcasts).
inline ImageTensor degrade(const ImageTensor& clean, double gamma, std::span<const double> sigma,
                           std::uint64_t seed) {
  if (clean.range != ValueRange::kUnit) throw ValidationError("degrade expects a [0,1] image");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in (0, 1]");
  if (sigma.size() != 1 && sigma.size() != clean.channels()) {
    throw ValidationError("sigma must have 1 or C entries");
  }
  for (double s : sigma) {
    if (!(s >= 0.0)) throw ValidationError("sigma must be >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ImageTensor out = clean;
  for (std::size_t c = 0; c < clean.channels(); ++c) {
    const double s = sigma.size() == 1 ? sigma[0] : sigma[c];
    for (float& v : out.tensor.plane(c)) {
      double noisy = gamma * v;
      if (s > 0.0) noisy += s * normal(rng);
      v = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
    }
  }
  return out;
}

inline ImageTensor degrade(const ImageTensor& clean, double gamma, double sigma, std::uint64_t seed) {
  const double s[1] = {sigma};
  return degrade(clean, gamma, s, seed);
}

// Neumaier-compensated sum.
inline double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    comp += std::fabs(sum) >= std::fabs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

// h'(v) = min(h(v), kappa) + sum_{h(v') > kappa} (h(v') - kappa) / |V|.
// Single pass: redistribution may push bins back above kappa.
inline std::vector<double> clip_histogram(std::span<const std::uint64_t> hist, double kappa_abs) {
  if (!(kappa_abs > 0.0)) throw ValidationError("clip limit must be > 0");
  if (hist.empty()) return {};
  std::vector<double> excess_terms;
  std::vector<double> out(hist.size());
  for (std::size_t v = 0; v < hist.size(); ++v) {
    const auto h = static_cast<double>(hist[v]);
    if (h > kappa_abs) {
      excess_terms.push_back(h - kappa_abs);
      out[v] = kappa_abs;
    } else {
      out[v] = h;
    }
  }
  const double share = compensated_sum(excess_terms) / static_cast<double>(hist.size());
  for (double& v : out) v += share;
  return out;
}

enum class ClaheMode {
  kPerChannel,  // each channel equalized independently
  kLuminance,   // equalize BT.601 luma, rescale channels by the luma gain
};

struct ClaheParams {
  std::size_t tiles = 8;       // M, tiles per side
  double clip_limit = 2.0;     // kappa, in multiples of the uniform bin height
  std::size_t gray_levels = 256;
  ClaheMode mode = ClaheMode::kPerChannel;

  void validate() const {
    if (tiles < 1) throw ValidationError("clahe tiles must be >= 1");
    if (!(clip_limit > 0.0)) throw ValidationError("clahe clip limit must be > 0");
    if (gray_levels < 2 || gray_levels > 256) throw ValidationError("gray_levels must be in 2..256");
  }
};

namespace detail {

// Tile partition along one axis: tiles of ceil(n/M) pixels, last one truncated.
struct TileAxis {
  std::vector<std::size_t> begin;
  std::vector<std::size_t> end;
  std::vector<double> center;

  TileAxis(std::size_t n, std::size_t m) {
    const std::size_t step = (n + m - 1) / m;
    for (std::size_t b = 0; b < n; b += step) {
      begin.push_back(b);
      end.push_back(std::min(n, b + step));
      center.push_back((static_cast<double>(b) + static_cast<double>(end.back()) - 1.0) / 2.0);
    }
  }
  std::size_t count() const { return begin.size(); }

  // Lower tile index and interpolation weight toward the next tile, clamped at the borders.
  void locate(std::size_t p, std::size_t& lo, double& w) const {
    const double pos = static_cast<double>(p);
    if (pos <= center.front()) {
      lo = 0;
      w = 0.0;
      return;
    }
    if (pos >= center.back()) {
      lo = count() - 1;
      w = 0.0;
      return;
    }
    lo = 0;
    while (center[lo + 1] <= pos) ++lo;
    w = (pos - center[lo]) / (center[lo + 1] - center[lo]);
  }
};

// Level -> output level lookup for one tile, from its clipped histogram.
inline std::vector<double> equalization_lut(std::span<const std::uint64_t> hist, std::size_t pixels,
                                            double clip_limit) {
  const auto levels = hist.size();
  const double kappa_abs = clip_limit * static_cast<double>(pixels) / static_cast<double>(levels);
  const auto clipped = clip_histogram(hist, kappa_abs);
  std::vector<double> lut(levels);
  double cdf = 0.0;
  for (std::size_t v = 0; v < levels; ++v) {
    cdf += clipped[v];
    lut[v] = std::round(static_cast<double>(levels - 1) * cdf / static_cast<double>(pixels));
  }
  return lut;
}

inline std::vector<std::uint8_t> clahe_plane(std::span<const std::uint8_t> plane, std::size_t h,
                                             std::size_t w, const ClaheParams& params) {
  const TileAxis rows(h, params.tiles);
  const TileAxis cols(w, params.tiles);
  const auto levels = params.gray_levels;

  std::vector<std::vector<double>> luts(rows.count() * cols.count());
  for (std::size_t tr = 0; tr < rows.count(); ++tr) {
    for (std::size_t tc = 0; tc < cols.count(); ++tc) {
      std::vector<std::uint64_t> hist(levels, 0);
      for (std::size_t y = rows.begin[tr]; y < rows.end[tr]; ++y) {
        for (std::size_t x = cols.begin[tc]; x < cols.end[tc]; ++x) ++hist[plane[y * w + x]];
      }
      const auto pixels = (rows.end[tr] - rows.begin[tr]) * (cols.end[tc] - cols.begin[tc]);
      luts[tr * cols.count() + tc] = equalization_lut(hist, pixels, params.clip_limit);
    }
  }

  std::vector<std::uint8_t> out(plane.size());
  for (std::size_t y = 0; y < h; ++y) {
    std::size_t r0 = 0;
    double wy = 0.0;
    rows.locate(y, r0, wy);
    const std::size_t r1 = std::min(r0 + 1, rows.count() - 1);
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t c0 = 0;
      double wx = 0.0;
      cols.locate(x, c0, wx);
      const std::size_t c1 = std::min(c0 + 1, cols.count() - 1);
      const auto v = plane[y * w + x];
      auto lut = [&](std::size_t r, std::size_t c) { return luts[r * cols.count() + c][v]; };
      const double top = (1.0 - wx) * lut(r0, c0) + wx * lut(r0, c1);
      const double bottom = (1.0 - wx) * lut(r1, c0) + wx * lut(r1, c1);
      const double value = (1.0 - wy) * top + wy * bottom;
      out[y * w + x] = static_cast<std::uint8_t>(
          std::clamp(std::round(value), 0.0, static_cast<double>(levels - 1)));
    }
  }
  return out;
}

}  // namespace detail

// Contrast-limited adaptive histogram equalization on a 0..255 image.
inline ImageTensor clahe(const ImageTensor& img, const ClaheParams& params) {
  params.validate();
  if (img.range != ValueRange::kByte) throw ValidationError("clahe expects an integer 0..255 image");
  if (img.height() < params.tiles || img.width() < params.tiles) {
    throw ValidationError("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                          " is smaller than the " + std::to_string(params.tiles) + "x" +
                          std::to_string(params.tiles) + " tile grid");
  }
  img.validate();
  const auto h = img.height();
  const auto w = img.width();
  const auto max_level = static_cast<float>(params.gray_levels - 1);
  for (float v : img.tensor.data) {
    if (v > max_level) throw ValidationError("image value exceeds gray_levels - 1");
  }

  auto to_bytes = [&](std::span<const float> plane) {
    std::vector<std::uint8_t> b(plane.size());
    std::transform(plane.begin(), plane.end(), b.begin(),
                   [](float v) { return static_cast<std::uint8_t>(v); });
    return b;
  };

  ImageTensor out(img.channels(), h, w, ValueRange::kByte);
  if (params.mode == ClaheMode::kPerChannel || img.channels() != 3) {
    for (std::size_t c = 0; c < img.channels(); ++c) {
      const auto eq = detail::clahe_plane(to_bytes(img.tensor.plane(c)), h, w, params);
      std::copy(eq.begin(), eq.end(), out.tensor.plane(c).begin());
    }
    return out;
  }

  std::vector<std::uint8_t> luma(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    const double y = 0.299 * img.tensor.data[i] + 0.587 * img.tensor.data[h * w + i] +
                     0.114 * img.tensor.data[2 * h * w + i];
    luma[i] = static_cast<std::uint8_t>(std::clamp(std::round(y), 0.0, static_cast<double>(max_level)));
  }
  const auto eq = detail::clahe_plane(luma, h, w, params);
  for (std::size_t i = 0; i < h * w; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const float src = img.tensor.data[c * h * w + i];
      const double scaled = luma[i] == 0 ? static_cast<double>(eq[i])
                                         : src * static_cast<double>(eq[i]) / luma[i];
      out.tensor.data[c * h * w + i] =
          static_cast<float>(std::clamp(std::round(scaled), 0.0, static_cast<double>(max_level)));
    }
  }
  return out;
}

inline std::size_t round_up(std::size_t n, std::size_t multiple) {
  return (n + multiple - 1) / multiple * multiple;
}

// Scales 0..255 to [0, 1] and zero-pads bottom/right to multiples of `multiple`.
inline ImageTensor normalize_and_pad(const ImageTensor& img, std::size_t multiple = 32) {
  if (img.range != ValueRange::kByte) throw ValidationError("normalize_and_pad expects a 0..255 image");
  ImageTensor out(img.channels(), round_up(img.height(), multiple), round_up(img.width(), multiple),
                  ValueRange::kUnit);
  for (std::size_t c = 0; c < img.channels(); ++c) {
    for (std::size_t y = 0; y < img.height(); ++y) {
      for (std::size_t x = 0; x < img.width(); ++x) out.at(c, y, x) = img.at(c, y, x) / 255.0f;
    }
  }
  return out;
}

// EVIM: "EVIM", u32 version, u32 C, H, W, u8 range tag, then C*H*W f32.
inline std::vector<char> encode_image(const ImageTensor& img) {
  binary::Writer w;
  w.magic("EVIM");
  w.u32(binary::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(img.channels()));
  w.u32(static_cast<std::uint32_t>(img.height()));
  w.u32(static_cast<std::uint32_t>(img.width()));
  w.u8(static_cast<std::uint8_t>(img.range));
  for (float v : img.tensor.data) w.f32(v);
  return w.bytes();
}

inline ImageTensor decode_image(std::span<const char> bytes) {
  binary::Reader r(bytes, "EVIM");
  r.expect_magic("EVIM");
  r.expect_version();
  const auto c = r.u32();
  const auto h = r.u32();
  const auto w = r.u32();
  const auto tag = r.u8();
  if (tag > 1) throw ValidationError("EVIM: unknown range tag " + std::to_string(tag));
  r.require_remaining(std::uint64_t{c} * h * w * 4);
  ImageTensor img(c, h, w, static_cast<ValueRange>(tag));
  for (float& v : img.tensor.data) v = r.f32();
  r.expect_end();
  img.validate();
  return img;
}

}  // namespace evfuse
