#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evfuse/detect.hpp"
#include "evfuse/enhance.hpp"
#include "evfuse/json_io.hpp"
#include "evfuse/voxelize.hpp"

namespace evfuse {

// Anchor templates are not published with the detector; these are the
// common YOLOv3-style priors extended by one finer level.
inline std::vector<ScaleSpec> default_scales() {
  return {
      {2, {{{5, 7}, {9, 16}, {16, 11}}}},
      {3, {{{10, 13}, {16, 30}, {33, 23}}}},
      {4, {{{30, 61}, {62, 45}, {59, 119}}}},
      {5, {{{116, 90}, {156, 198}, {373, 326}}}},
  };
}

struct PipelineConfig {
  std::uint64_t seed = 0;

  // events
  std::uint64_t window_dt_us = 30000;
  std::optional<std::uint64_t> window_t0_us;  // defaults to the first event timestamp
  double theta_hot_hz = 500.0;

  // voxelize
  std::size_t bins = 4;
  double theta_dens = 5.0;

  // enhance
  ClaheParams clahe{};
  bool pad32 = true;

  // fusion
  double alpha_lambda = kDefaultAlphaLambda;

  // detect
  double tau_conf = 0.1;
  double tau_nms = 0.4;
  std::vector<ScaleSpec> scales = default_scales();

  // eval
  double iou_thresh = 0.4;

  // Throws ValidationError naming the offending field path.
  void validate() const {
    auto bad = [](const std::string& path, const std::string& msg) { throw ValidationError(path + ": " + msg); };
    if (window_dt_us == 0) bad("events.window_dt_us", "must be > 0");
    if (!(theta_hot_hz > 0.0)) bad("events.theta_hot_hz", "must be > 0");
    if (bins < 2) {
      bad("voxel.bins", "must be >= 2 (B >= 2 is required for event conservation), got " + std::to_string(bins));
    }
    if (!(theta_dens >= 0.0)) bad("voxel.theta_dens", "must be >= 0");
    if (clahe.tiles < 1) bad("clahe.tiles", "must be >= 1");
    if (!(clahe.clip_limit > 0.0)) bad("clahe.clip", "must be > 0");
    if (clahe.gray_levels < 2 || clahe.gray_levels > 256) bad("clahe.gray_levels", "must be in 2..256");
    if (!(alpha_lambda >= 0.0)) bad("fusion.lambda", "must be >= 0");
    if (!(tau_conf >= 0.0 && tau_conf <= 1.0)) bad("detect.conf", "must be in [0, 1]");
    if (!(tau_nms >= 0.0 && tau_nms <= 1.0)) bad("detect.nms", "must be in [0, 1]");
    if (scales.empty()) bad("detect.scales", "must not be empty");
    if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) bad("eval.iou", "must be in (0, 1]");
  }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ValidationError((path.empty() ? "config" : path) + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ValidationError((path.empty() ? key : path + "." + key) + ": unknown field");
    }
  }
}

inline double get_number(const json& obj, const char* key, const std::string& path, double current) {
  if (!obj.contains(key)) return current;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::uint64_t get_uint(const json& obj, const char* key, const std::string& path, std::uint64_t current) {
  if (!obj.contains(key)) return current;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ValidationError(path + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

}  // namespace detail

// Overlays the fields present in `j` onto `base` and validates the result.
inline PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {}) {
  using detail::get_number;
  using detail::get_uint;
  detail::reject_unknown(j, "", {"note", "seed", "events", "voxel", "clahe", "fusion", "detect", "eval"});
  base.seed = get_uint(j, "seed", "config", base.seed);
  if (j.contains("events")) {
    const auto& e = j["events"];
    detail::reject_unknown(e, "events", {"window_dt_us", "window_t0_us", "theta_hot_hz"});
    base.window_dt_us = get_uint(e, "window_dt_us", "events", base.window_dt_us);
    if (e.contains("window_t0_us")) base.window_t0_us = get_uint(e, "window_t0_us", "events", 0);
    base.theta_hot_hz = get_number(e, "theta_hot_hz", "events", base.theta_hot_hz);
  }
  if (j.contains("voxel")) {
    const auto& v = j["voxel"];
    detail::reject_unknown(v, "voxel", {"bins", "theta_dens"});
    base.bins = get_uint(v, "bins", "voxel", base.bins);
    base.theta_dens = get_number(v, "theta_dens", "voxel", base.theta_dens);
  }
  if (j.contains("clahe")) {
    const auto& c = j["clahe"];
    detail::reject_unknown(c, "clahe", {"tiles", "clip", "gray_levels", "mode", "pad32"});
    base.clahe.tiles = get_uint(c, "tiles", "clahe", base.clahe.tiles);
    base.clahe.clip_limit = get_number(c, "clip", "clahe", base.clahe.clip_limit);
    base.clahe.gray_levels = get_uint(c, "gray_levels", "clahe", base.clahe.gray_levels);
    if (c.contains("mode")) {
      const auto& m = c["mode"];
      if (m == "per-channel") {
        base.clahe.mode = ClaheMode::kPerChannel;
      } else if (m == "luminance") {
        base.clahe.mode = ClaheMode::kLuminance;
      } else {
        throw ValidationError("clahe.mode: expected \"per-channel\" or \"luminance\"");
      }
    }
    if (c.contains("pad32")) {
      if (!c["pad32"].is_boolean()) throw ValidationError("clahe.pad32: expected a boolean");
      base.pad32 = c["pad32"].get<bool>();
    }
  }
  if (j.contains("fusion")) {
    const auto& f = j["fusion"];
    detail::reject_unknown(f, "fusion", {"lambda"});
    base.alpha_lambda = get_number(f, "lambda", "fusion", base.alpha_lambda);
  }
  if (j.contains("detect")) {
    const auto& d = j["detect"];
    detail::reject_unknown(d, "detect", {"conf", "nms", "scales"});
    base.tau_conf = get_number(d, "conf", "detect", base.tau_conf);
    base.tau_nms = get_number(d, "nms", "detect", base.tau_nms);
    if (d.contains("scales")) base.scales = json_io::scales_from_json(d["scales"], "detect.scales");
  }
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    detail::reject_unknown(e, "eval", {"iou"});
    base.iou_thresh = get_number(e, "iou", "eval", base.iou_thresh);
  }
  base.validate();
  return base;
}

inline nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["events"]["window_dt_us"] = c.window_dt_us;
  if (c.window_t0_us) j["events"]["window_t0_us"] = *c.window_t0_us;
  j["events"]["theta_hot_hz"] = c.theta_hot_hz;
  j["voxel"]["bins"] = c.bins;
  j["voxel"]["theta_dens"] = c.theta_dens;
  j["clahe"]["tiles"] = c.clahe.tiles;
  j["clahe"]["clip"] = c.clahe.clip_limit;
  j["clahe"]["gray_levels"] = c.clahe.gray_levels;
  j["clahe"]["mode"] = c.clahe.mode == ClaheMode::kPerChannel ? "per-channel" : "luminance";
  j["clahe"]["pad32"] = c.pad32;
  j["fusion"]["lambda"] = c.alpha_lambda;
  j["detect"]["conf"] = c.tau_conf;
  j["detect"]["nms"] = c.tau_nms;
  j["detect"]["scales"] = json_io::scales_to_json(c.scales);
  j["eval"]["iou"] = c.iou_thresh;
  return j;
}

}  // namespace evfuse
