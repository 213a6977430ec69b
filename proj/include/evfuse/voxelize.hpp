#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "evfuse/binary_io.hpp"
#include "evfuse/common.hpp"
#include "evfuse/events.hpp"

namespace evfuse {

// Polarity-split temporal voxel grid of shape (2B, H, W). Channel c = q*B + b,
// where q = 0 holds negative and q = 1 positive events. Values are summed in
// double precision; the on-disk format stores f32.
struct VoxelGrid {
  std::size_t bins = 0;
  Tensor3<double> tensor;

  VoxelGrid() = default;
  VoxelGrid(std::size_t b, std::size_t height, std::size_t width)
      : bins(b), tensor(2 * b, height, width, 0.0) {}

  std::size_t channels() const { return tensor.channels; }
  std::size_t height() const { return tensor.height; }
  std::size_t width() const { return tensor.width; }

  static std::size_t channel(std::size_t bin, std::size_t q, std::size_t bins) { return q * bins + bin; }
  std::size_t channel(std::size_t bin, std::size_t q) const { return channel(bin, q, bins); }

  double& at(std::size_t bin, std::size_t q, std::size_t y, std::size_t x) {
    return tensor.at(channel(bin, q), y, x);
  }
  double at(std::size_t bin, std::size_t q, std::size_t y, std::size_t x) const {
    return tensor.at(channel(bin, q), y, x);
  }

  double channel_mass(std::size_t c) const {
    double s = 0.0;
    for (double v : tensor.plane(c)) s += v;
    return s;
  }
  // Total mass of polarity block q (0 = negative, 1 = positive).
  double polarity_mass(std::size_t q) const {
    double s = 0.0;
    for (std::size_t b = 0; b < bins; ++b) s += channel_mass(channel(b, q));
    return s;
  }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;
};

struct VoxelParams {
  std::size_t bins = 4;
  double theta_dens = 5.0;

  void validate() const {
    if (bins < 2) throw ValidationError("bins must be >= 2 (got " + std::to_string(bins) + ")");
    if (!(theta_dens >= 0.0)) throw ValidationError("theta_dens must be >= 0");
  }
};

inline std::size_t polarity_index(std::int8_t p) { return p > 0 ? 1 : 0; }

// tau = (t - t0) / dt * (B - 1), defined on the closed window [t0, t0 + dt].
inline double normalize_timestamp(std::uint64_t t, const TimeWindow& window, std::size_t bins) {
  if (t < window.t0 || t > window.end()) {
    throw ValidationError("timestamp " + std::to_string(t) + " outside window [" +
                          std::to_string(window.t0) + ", " + std::to_string(window.end()) + "]");
  }
  return static_cast<double>(t - window.t0) / static_cast<double>(window.dt) *
         static_cast<double>(bins - 1);
}

inline double kernel(double tau, double bin) { return std::fmax(0.0, 1.0 - std::fabs(tau - bin)); }

// Accumulates the two non-zero kernel taps of one event into `grid`.
inline void scatter_event(VoxelGrid& grid, const Event& e, double tau) {
  const std::size_t q = polarity_index(e.p);
  const double lower = std::floor(tau);
  const auto b0 = static_cast<std::size_t>(lower);
  // Bins b0 and b0+1 are the only ones with non-zero weight; b0+1 may fall
  // off the end when tau == B-1 exactly.
  grid.at(b0, q, e.y, e.x) += kernel(tau, lower);
  if (b0 + 1 < grid.bins) grid.at(b0 + 1, q, e.y, e.x) += kernel(tau, lower + 1.0);
}

// Restricts `stream` to `window` and splats each event across its two
// neighbouring temporal bins.
inline VoxelGrid voxelize(const EventStream& stream, const TimeWindow& window, const VoxelParams& params) {
  if (params.bins < 2) {
    throw ValidationError("bins must be >= 2 (got " + std::to_string(params.bins) + ")");
  }
  VoxelGrid grid(params.bins, stream.height(), stream.width());
  for (const auto& e : stream.events()) {
    if (!window.contains(e.t)) continue;
    scatter_event(grid, e, normalize_timestamp(e.t, window, params.bins));
  }
  return grid;
}

// Finest resolvable event separation in microseconds: dt / (B - 1).
inline double temporal_resolution(const TimeWindow& window, std::size_t bins) {
  if (bins < 2) throw ValidationError("bins must be >= 2 (got " + std::to_string(bins) + ")");
  return static_cast<double>(window.dt) / static_cast<double>(bins - 1);
}

struct ChannelId {
  std::size_t bin = 0;
  std::size_t q = 0;
  friend bool operator==(const ChannelId&, const ChannelId&) = default;
};

struct DensityFilterResult {
  VoxelGrid grid;
  std::vector<ChannelId> zeroed;
};

// Zeroes every (b, q) channel whose summed mass is strictly below theta_dens.
inline DensityFilterResult density_filter(const VoxelGrid& grid, double theta_dens) {
  if (!(theta_dens >= 0.0)) throw ValidationError("theta_dens must be >= 0");
  DensityFilterResult out{grid, {}};
  for (std::size_t q = 0; q < 2; ++q) {
    for (std::size_t b = 0; b < grid.bins; ++b) {
      const auto c = grid.channel(b, q);
      if (grid.channel_mass(c) < theta_dens) {
        for (double& v : out.grid.tensor.plane(c)) v = 0.0;
        out.zeroed.push_back({b, q});
      }
    }
  }
  return out;
}

// EVXG: "EVXG", u32 version, u32 B, u32 H, u32 W, then 2B*H*W f32.
inline std::vector<char> encode_voxel_grid(const VoxelGrid& grid) {
  binary::Writer w;
  w.magic("EVXG");
  w.u32(binary::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(grid.bins));
  w.u32(static_cast<std::uint32_t>(grid.height()));
  w.u32(static_cast<std::uint32_t>(grid.width()));
  for (double v : grid.tensor.data) w.f32(static_cast<float>(v));
  return w.bytes();
}

inline VoxelGrid decode_voxel_grid(std::span<const char> bytes) {
  binary::Reader r(bytes, "EVXG");
  r.expect_magic("EVXG");
  r.expect_version();
  const auto b = r.u32();
  const auto h = r.u32();
  const auto w = r.u32();
  if (b < 2) throw ValidationError("EVXG: bins must be >= 2");
  r.require_remaining(std::uint64_t{2} * b * h * w * 4);
  VoxelGrid grid(b, h, w);
  for (double& v : grid.tensor.data) {
    v = r.f32();
    if (!(v >= 0.0)) throw ValidationError("EVXG: negative or non-finite voxel value");
  }
  r.expect_end();
  return grid;
}

}  // namespace evfuse
