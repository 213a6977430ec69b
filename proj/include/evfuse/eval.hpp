#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evfuse/detect.hpp"

namespace evfuse {

using GroundTruth = LabeledBox;

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

struct MatchResult {
  MatchCounts counts;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (detection index, gt index)
  std::array<MatchCounts, kNumClasses> per_class{};
};

// Greedy matching in descending confidence (ties keep input order). A
// detection is a true positive when an unmatched same-class ground truth has
// IoU >= iou_thresh; it takes the highest-IoU such box, lower index on ties.
inline MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                    double iou_thresh) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });

  auto class_slot = [](int class_id) {
    if (class_id < 1 || class_id > static_cast<int>(kNumClasses)) {
      throw ValidationError("class id " + std::to_string(class_id) + " outside 1..3");
    }
    return static_cast<std::size_t>(class_id - 1);
  };

  MatchResult out;
  std::vector<char> taken(gts.size(), 0);
  for (std::size_t d : order) {
    const auto& det = dets[d];
    const auto cs = class_slot(det.class_id);
    std::size_t best = gts.size();
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].class_id != det.class_id) continue;
      const double v = iou(det.box, gts[g].box);
      if (v >= iou_thresh && v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best < gts.size()) {
      taken[best] = 1;
      out.pairs.emplace_back(d, best);
      ++out.counts.tp;
      ++out.per_class[cs].tp;
    } else {
      ++out.counts.fp;
      ++out.per_class[cs].fp;
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!taken[g]) {
      ++out.counts.fn;
      ++out.per_class[class_slot(gts[g].class_id)].fn;
    }
  }
  return out;
}

struct PrfScores {
  MatchCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  PrfScores overall;
  std::array<PrfScores, kNumClasses> per_class{};
};

// Zero denominators give 0 rather than 1.
inline PrfScores compute_prf(const MatchCounts& c) {
  PrfScores s;
  s.counts = c;
  s.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  s.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

inline PrfScores compute_prf(std::size_t tp, std::size_t fp, std::size_t fn) { return compute_prf({tp, fp, fn}); }

inline EvalReport make_report(const MatchCounts& overall, const std::array<MatchCounts, kNumClasses>& per_class) {
  EvalReport r;
  r.overall = compute_prf(overall);
  for (std::size_t c = 0; c < kNumClasses; ++c) r.per_class[c] = compute_prf(per_class[c]);
  return r;
}

// Percentage with two decimals, e.g. 0.538461... -> "53.85".
inline std::string percent_2dp(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

}  // namespace evfuse
