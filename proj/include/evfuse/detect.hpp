#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "evfuse/binary_io.hpp"
#include "evfuse/common.hpp"
#include "evfuse/fusion.hpp"

namespace evfuse {

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::size_t kAnchorsPerCell = 3;
// (t_x, t_y, t_w, t_h, t_obj, t_1, t_2, t_3)
inline constexpr std::size_t kRawFields = 5 + kNumClasses;

// Axis-aligned corner box in image pixels.
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const {
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max) &&
           x_min < x_max && y_min < y_max;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

inline double iou(const Box& a, const Box& b) {
  if (!a.valid() || !b.valid()) throw ValidationError("iou: degenerate box");
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

struct Anchor {
  double w = 0.0;
  double h = 0.0;
};

// Anchor templates for one pyramid level; stride is 2^scale pixels per cell.
struct ScaleSpec {
  int scale = 3;
  std::array<Anchor, kAnchorsPerCell> anchors{};

  double stride() const { return std::ldexp(1.0, scale); }
};

// Raw head output for one pyramid level, laid out (row i, col j, anchor k, field).
struct RawScale {
  int scale = 3;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  RawScale() = default;
  RawScale(int s, std::size_t h, std::size_t w)
      : scale(s), height(h), width(w), data(h * w * kAnchorsPerCell * kRawFields, 0.0) {}

  std::size_t slot(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * width + j) * kAnchorsPerCell + k;
  }
  std::size_t slots() const { return height * width * kAnchorsPerCell; }
  std::span<double, kRawFields> at(std::size_t i, std::size_t j, std::size_t k) {
    return std::span<double, kRawFields>(data.data() + slot(i, j, k) * kRawFields, kRawFields);
  }
  std::span<const double, kRawFields> at(std::size_t i, std::size_t j, std::size_t k) const {
    return std::span<const double, kRawFields>(data.data() + slot(i, j, k) * kRawFields, kRawFields);
  }
};

using RawPrediction = std::vector<RawScale>;

struct Detection {
  Box box;
  double objectness = 0.0;
  std::array<double, kNumClasses> class_scores{};
  int class_id = 1;  // 1-based
  double confidence = 0.0;
};

// Decodes every (cell, anchor) of one pyramid level. Centres are placed at
// (sigmoid(t) + cell) * stride; sizes are anchor * exp(t). Confidence is
// objectness times the best class score; ties pick the lower class id.
inline std::vector<Detection> decode_boxes(const RawScale& raw, std::span<const Anchor> anchors, double stride) {
  if (anchors.size() != kAnchorsPerCell) throw ValidationError("decode_boxes needs exactly 3 anchors");
  for (const auto& a : anchors) {
    if (!(a.w > 0.0 && a.h > 0.0)) throw ValidationError("anchor dimensions must be > 0");
  }
  if (!(stride > 0.0)) throw ValidationError("stride must be > 0");
  if (raw.data.size() != raw.slots() * kRawFields) throw ValidationError("raw prediction size mismatch");

  std::vector<Detection> out;
  out.reserve(raw.slots());
  for (std::size_t i = 0; i < raw.height; ++i) {
    for (std::size_t j = 0; j < raw.width; ++j) {
      for (std::size_t k = 0; k < kAnchorsPerCell; ++k) {
        const auto t = raw.at(i, j, k);
        for (double v : t) {
          if (!std::isfinite(v)) {
            throw ValidationError("non-finite raw value at scale " + std::to_string(raw.scale) + " cell (" +
                                  std::to_string(i) + ", " + std::to_string(j) + ") anchor " +
                                  std::to_string(k));
          }
        }
        const double bx = (sigmoid(t[0]) + static_cast<double>(j)) * stride;
        const double by = (sigmoid(t[1]) + static_cast<double>(i)) * stride;
        const double bw = anchors[k].w * std::exp(t[2]);
        const double bh = anchors[k].h * std::exp(t[3]);

        Detection d;
        d.box = {bx - bw / 2.0, by - bh / 2.0, bx + bw / 2.0, by + bh / 2.0};
        d.objectness = sigmoid(t[4]);
        std::size_t best = 0;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
          d.class_scores[c] = sigmoid(t[5 + c]);
          if (d.class_scores[c] > d.class_scores[best]) best = c;
        }
        d.class_id = static_cast<int>(best) + 1;
        d.confidence = d.objectness * d.class_scores[best];
        out.push_back(d);
      }
    }
  }
  return out;
}

inline std::vector<Detection> decode_all(const RawPrediction& raw, std::span<const ScaleSpec> scales) {
  std::vector<Detection> out;
  for (const auto& level : raw) {
    auto spec = std::find_if(scales.begin(), scales.end(), [&](const ScaleSpec& s) { return s.scale == level.scale; });
    if (spec == scales.end()) {
      throw ValidationError("no anchors configured for scale " + std::to_string(level.scale));
    }
    auto dets = decode_boxes(level, spec->anchors, spec->stride());
    out.insert(out.end(), dets.begin(), dets.end());
  }
  return out;
}

// Confidence threshold followed by greedy per-class NMS. Survivors are ordered
// by descending confidence; equal confidences keep input order.
inline std::vector<Detection> nms(std::span<const Detection> dets, double tau_conf, double tau_nms) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!(dets[i].confidence < tau_conf)) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
  std::vector<Detection> kept;
  for (std::size_t idx : order) {
    const auto& cand = dets[idx];
    bool suppressed = false;
    for (const auto& k : kept) {
      if (k.class_id == cand.class_id && iou(k.box, cand.box) > tau_nms) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

// Regression and classification targets for one anchor slot. Box targets
// are (offset_x, offset_y, log(w / a_w), log(h / a_h)) in cell units.
struct AnchorTarget {
  bool positive = false;
  std::array<double, 4> box{};
  std::array<double, kNumClasses> cls{};
};

struct ScaleTargets {
  int scale = 3;
  std::vector<AnchorTarget> slots;  // same (i, j, k) order as RawScale
};

struct LossWeights {
  double box = 5.0;
  double obj = 10.0;
  double cls = 1.0;
};

struct LossBreakdown {
  double total = 0.0;
  double box = 0.0;  // sum over scales of the unweighted box MSE
  double obj = 0.0;
  double cls = 0.0;
};

// Sum over scales of w_box * L_box + w_obj * L_obj + w_cls * L_cls. Box and
// class terms are MSE over positive anchors (0 when a scale has none); the
// objectness term is MSE over all anchors against 1/0.
inline LossBreakdown detection_loss(const RawPrediction& raw, std::span<const ScaleTargets> targets,
                                    const LossWeights& weights = {}) {
  if (raw.size() != targets.size()) throw ValidationError("loss: scale count mismatch");
  LossBreakdown out;
  for (std::size_t s = 0; s < raw.size(); ++s) {
    const auto& level = raw[s];
    const auto& tg = targets[s];
    if (tg.slots.size() != level.slots()) throw ValidationError("loss: target size mismatch");
    double box_sq = 0.0;
    double cls_sq = 0.0;
    double obj_sq = 0.0;
    std::size_t positives = 0;
    for (std::size_t slot = 0; slot < level.slots(); ++slot) {
      const double* t = level.data.data() + slot * kRawFields;
      const auto& target = tg.slots[slot];
      const double p_obj = sigmoid(t[4]);
      const double obj_target = target.positive ? 1.0 : 0.0;
      obj_sq += (p_obj - obj_target) * (p_obj - obj_target);
      if (!target.positive) continue;
      ++positives;
      const std::array<double, 4> pred_box = {sigmoid(t[0]), sigmoid(t[1]), t[2], t[3]};
      for (std::size_t c = 0; c < 4; ++c) {
        const double d = pred_box[c] - target.box[c];
        box_sq += d * d;
      }
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double d = sigmoid(t[5 + c]) - target.cls[c];
        cls_sq += d * d;
      }
    }
    const double l_box = positives ? box_sq / static_cast<double>(4 * positives) : 0.0;
    const double l_cls = positives ? cls_sq / static_cast<double>(kNumClasses * positives) : 0.0;
    const double l_obj = level.slots() ? obj_sq / static_cast<double>(level.slots()) : 0.0;
    out.box += l_box;
    out.cls += l_cls;
    out.obj += l_obj;
    out.total += weights.box * l_box + weights.obj * l_obj + weights.cls * l_cls;
  }
  return out;
}

struct LabeledBox {
  Box box;
  int class_id = 1;
};

enum class AssignStrategy {
  kBestAnchorOverall,   // one positive per box: best anchor shape across all scales
  kBestAnchorPerScale,  // one positive per box on every scale
};

struct GridShape {
  int scale = 3;
  std::size_t height = 0;
  std::size_t width = 0;
};

namespace detail {

inline double shape_iou(double w, double h, const Anchor& a) {
  const double inter = std::min(w, a.w) * std::min(h, a.h);
  return inter / (w * h + a.w * a.h - inter);
}

inline void place_target(ScaleTargets& tg, const GridShape& grid, const ScaleSpec& spec, std::size_t k,
                         const LabeledBox& gt) {
  const double stride = spec.stride();
  const double cx = (gt.box.x_min + gt.box.x_max) / 2.0 / stride;
  const double cy = (gt.box.y_min + gt.box.y_max) / 2.0 / stride;
  const auto j = static_cast<std::size_t>(std::clamp(std::floor(cx), 0.0, static_cast<double>(grid.width - 1)));
  const auto i = static_cast<std::size_t>(std::clamp(std::floor(cy), 0.0, static_cast<double>(grid.height - 1)));
  auto& slot = tg.slots[(i * grid.width + j) * kAnchorsPerCell + k];
  if (slot.positive) return;  // first box wins a contested slot
  slot.positive = true;
  slot.box = {cx - static_cast<double>(j), cy - static_cast<double>(i), std::log(gt.box.width() / spec.anchors[k].w),
              std::log(gt.box.height() / spec.anchors[k].h)};
  slot.cls = {};
  slot.cls[static_cast<std::size_t>(gt.class_id - 1)] = 1.0;
}

}  // namespace detail

// Builds per-anchor targets: each box goes to the cell containing its centre,
// on the anchor whose shape has the highest centred IoU with it.
inline std::vector<ScaleTargets> assign_targets(std::span<const LabeledBox> gts, std::span<const GridShape> grids,
                                                std::span<const ScaleSpec> scales,
                                                AssignStrategy strategy = AssignStrategy::kBestAnchorOverall) {
  std::vector<ScaleTargets> out;
  std::vector<const ScaleSpec*> specs;
  for (const auto& g : grids) {
    auto it = std::find_if(scales.begin(), scales.end(), [&](const ScaleSpec& s) { return s.scale == g.scale; });
    if (it == scales.end()) throw ValidationError("no anchors configured for scale " + std::to_string(g.scale));
    specs.push_back(&*it);
    out.push_back({g.scale, std::vector<AnchorTarget>(g.height * g.width * kAnchorsPerCell)});
  }
  for (const auto& gt : gts) {
    if (!gt.box.valid()) throw ValidationError("assign_targets: degenerate ground-truth box");
    if (gt.class_id < 1 || gt.class_id > static_cast<int>(kNumClasses)) {
      throw ValidationError("assign_targets: class id out of range");
    }
    std::size_t best_s = 0;
    std::size_t best_k = 0;
    double best = -1.0;
    for (std::size_t s = 0; s < grids.size(); ++s) {
      std::size_t local_k = 0;
      double local = -1.0;
      for (std::size_t k = 0; k < kAnchorsPerCell; ++k) {
        const double v = detail::shape_iou(gt.box.width(), gt.box.height(), specs[s]->anchors[k]);
        if (v > local) {
          local = v;
          local_k = k;
        }
      }
      if (strategy == AssignStrategy::kBestAnchorPerScale) {
        detail::place_target(out[s], grids[s], *specs[s], local_k, gt);
      } else if (local > best) {
        best = local;
        best_s = s;
        best_k = local_k;
      }
    }
    if (strategy == AssignStrategy::kBestAnchorOverall && !grids.empty()) {
      detail::place_target(out[best_s], grids[best_s], *specs[best_s], best_k, gt);
    }
  }
  return out;
}

// EVRP: "EVRP", u32 version, u32 scale count, then per scale u32 scale,
// u32 H, u32 W, u32 anchors (= 3), followed by H*W*3*8 f32 in (i, j, k, field) order.
inline std::vector<char> encode_raw_prediction(const RawPrediction& raw) {
  binary::Writer w;
  w.magic("EVRP");
  w.u32(binary::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(raw.size()));
  for (const auto& level : raw) {
    w.u32(static_cast<std::uint32_t>(level.scale));
    w.u32(static_cast<std::uint32_t>(level.height));
    w.u32(static_cast<std::uint32_t>(level.width));
    w.u32(static_cast<std::uint32_t>(kAnchorsPerCell));
    for (double v : level.data) w.f32(static_cast<float>(v));
  }
  return w.bytes();
}

inline RawPrediction decode_raw_prediction(std::span<const char> bytes) {
  binary::Reader r(bytes, "EVRP");
  r.expect_magic("EVRP");
  r.expect_version();
  const auto n = r.u32();
  RawPrediction raw;
  for (std::uint32_t s = 0; s < n; ++s) {
    const auto scale = r.u32();
    const auto h = r.u32();
    const auto w = r.u32();
    const auto a = r.u32();
    if (a != kAnchorsPerCell) throw ValidationError("EVRP: expected 3 anchors per cell, got " + std::to_string(a));
    if (scale > 30) throw ValidationError("EVRP: implausible scale " + std::to_string(scale));
    r.require_remaining(std::uint64_t{h} * w * kAnchorsPerCell * kRawFields * 4);
    RawScale level(static_cast<int>(scale), h, w);
    for (double& v : level.data) v = r.f32();
    raw.push_back(std::move(level));
  }
  r.expect_end();
  return raw;
}

}  // namespace evfuse
