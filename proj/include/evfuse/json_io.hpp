#pragma once

// JSON encodings for detections, ground truth, anchor sets and evaluation
// reports.

#include <string>
#include <vector>

#include "evfuse/detect.hpp"
#include "evfuse/eval.hpp"
#include "json.hpp"

namespace evfuse::json_io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace detail {

inline double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path + ": expected a number");
  return j.get<double>();
}

inline Box box_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4) throw ValidationError(path + ": expected [x0, y0, x1, y1]");
  Box b{number_at(j[0], path + "[0]"), number_at(j[1], path + "[1]"), number_at(j[2], path + "[2]"),
        number_at(j[3], path + "[3]")};
  if (!b.valid()) throw ValidationError(path + ": box must satisfy x0 < x1 and y0 < y1");
  return b;
}

inline int class_from(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ValidationError(path + ": expected an integer class id");
  const int c = j.get<int>();
  if (c < 1 || c > static_cast<int>(kNumClasses)) throw ValidationError(path + ": class must be 1, 2 or 3");
  return c;
}

inline const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw ValidationError(path + ": missing \"" + key + "\"");
  return obj.at(key);
}

}  // namespace detail

inline ordered_json to_json(const Detection& d) {
  ordered_json j;
  j["box"] = {d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max};
  j["class"] = d.class_id;
  j["objectness"] = d.objectness;
  j["scores"] = {d.class_scores[0], d.class_scores[1], d.class_scores[2]};
  j["confidence"] = d.confidence;
  return j;
}

inline ordered_json detections_to_json(std::span<const Detection> dets) {
  ordered_json arr = ordered_json::array();
  for (const auto& d : dets) arr.push_back(to_json(d));
  return arr;
}

inline std::vector<Detection> detections_from_json(const json& arr) {
  if (!arr.is_array()) throw ValidationError("detections: expected a JSON array");
  std::vector<Detection> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "detections[" + std::to_string(i) + "]";
    const auto& o = arr[i];
    Detection d;
    d.box = detail::box_from(detail::field(o, "box", path), path + ".box");
    d.class_id = detail::class_from(detail::field(o, "class", path), path + ".class");
    d.objectness = detail::number_at(detail::field(o, "objectness", path), path + ".objectness");
    d.confidence = detail::number_at(detail::field(o, "confidence", path), path + ".confidence");
    const auto& scores = detail::field(o, "scores", path);
    if (!scores.is_array() || scores.size() != kNumClasses) {
      throw ValidationError(path + ".scores: expected 3 numbers");
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      d.class_scores[c] = detail::number_at(scores[c], path + ".scores[" + std::to_string(c) + "]");
    }
    out.push_back(d);
  }
  return out;
}

inline ordered_json ground_truth_to_json(std::span<const GroundTruth> gts) {
  ordered_json arr = ordered_json::array();
  for (const auto& g : gts) {
    ordered_json j;
    j["box"] = {g.box.x_min, g.box.y_min, g.box.x_max, g.box.y_max};
    j["class"] = g.class_id;
    arr.push_back(j);
  }
  return arr;
}

inline std::vector<GroundTruth> ground_truth_from_json(const json& arr) {
  if (!arr.is_array()) throw ValidationError("ground truth: expected a JSON array");
  std::vector<GroundTruth> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "gt[" + std::to_string(i) + "]";
    GroundTruth g;
    g.box = detail::box_from(detail::field(arr[i], "box", path), path + ".box");
    g.class_id = detail::class_from(detail::field(arr[i], "class", path), path + ".class");
    out.push_back(g);
  }
  return out;
}

inline ordered_json scales_to_json(std::span<const ScaleSpec> scales) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : scales) {
    ordered_json anchors = ordered_json::array();
    for (const auto& a : s.anchors) anchors.push_back({a.w, a.h});
    arr.push_back({{"scale", s.scale}, {"anchors", anchors}});
  }
  return arr;
}

inline std::vector<ScaleSpec> scales_from_json(const json& arr, const std::string& path) {
  if (!arr.is_array() || arr.empty()) throw ValidationError(path + ": expected a non-empty array");
  std::vector<ScaleSpec> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    ScaleSpec s;
    const auto& scale = detail::field(arr[i], "scale", p);
    if (!scale.is_number_integer() || scale.get<int>() < 0 || scale.get<int>() > 30) {
      throw ValidationError(p + ".scale: expected an integer in 0..30");
    }
    s.scale = scale.get<int>();
    const auto& anchors = detail::field(arr[i], "anchors", p);
    if (!anchors.is_array() || anchors.size() != kAnchorsPerCell) {
      throw ValidationError(p + ".anchors: expected 3 [w, h] pairs");
    }
    for (std::size_t k = 0; k < kAnchorsPerCell; ++k) {
      const std::string ap = p + ".anchors[" + std::to_string(k) + "]";
      if (!anchors[k].is_array() || anchors[k].size() != 2) throw ValidationError(ap + ": expected [w, h]");
      s.anchors[k] = {detail::number_at(anchors[k][0], ap + "[0]"), detail::number_at(anchors[k][1], ap + "[1]")};
      if (!(s.anchors[k].w > 0.0 && s.anchors[k].h > 0.0)) throw ValidationError(ap + ": must be > 0");
    }
    for (const auto& prev : out) {
      if (prev.scale == s.scale) throw ValidationError(p + ".scale: duplicate scale " + std::to_string(s.scale));
    }
    out.push_back(s);
  }
  return out;
}

inline ordered_json to_json(const PrfScores& s) {
  ordered_json j;
  j["tp"] = s.counts.tp;
  j["fp"] = s.counts.fp;
  j["fn"] = s.counts.fn;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  j["precision_pct"] = percent_2dp(s.precision);
  j["recall_pct"] = percent_2dp(s.recall);
  j["f1_pct"] = percent_2dp(s.f1);
  return j;
}

inline ordered_json to_json(const EvalReport& r, double iou_thresh) {
  ordered_json j;
  j["iou_threshold"] = iou_thresh;
  j["overall"] = to_json(r.overall);
  ordered_json per = ordered_json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto e = to_json(r.per_class[c]);
    e["class"] = c + 1;
    per.push_back(e);
  }
  j["per_class"] = per;
  return j;
}

// Plot-ready table: one row per class plus an "all" row.
inline std::string report_csv(const EvalReport& r) {
  std::string out = "class,tp,fp,fn,precision_pct,recall_pct,f1_pct\n";
  auto row = [&](const std::string& name, const PrfScores& s) {
    out += name + "," + std::to_string(s.counts.tp) + "," + std::to_string(s.counts.fp) + "," +
           std::to_string(s.counts.fn) + "," + percent_2dp(s.precision) + "," + percent_2dp(s.recall) + "," +
           percent_2dp(s.f1) + "\n";
  };
  for (std::size_t c = 0; c < kNumClasses; ++c) row(std::to_string(c + 1), r.per_class[c]);
  row("all", r.overall);
  return out;
}

inline json parse(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ValidationError(what + ": invalid JSON: " + e.what());
  }
}

}  // namespace evfuse::json_io
