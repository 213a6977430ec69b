#pragma once

// Directory-level driver chaining voxelize -> enhance -> (fuse) -> decode -> eval.
//
// Input directory, per frame <stem>:
//   <stem>.events.csv   event stream (required)
//   <stem>.evim         RGB frame, range tag 0 (required)
//   <stem>.raw.evrp     raw detection-head output (required)
//   <stem>.gt.json      ground truth (optional; frame skipped in eval if absent)
//   <stem>.fimg.evfm, <stem>.fevt.evfm   feature maps (optional, fused when
//                       acmf_w1.evwt and acmf_w2.evwt exist in the directory)
// Output directory: <stem>.evxg, <stem>.clahe.evim, <stem>.input.evim,
// [<stem>.attention.evfm, <stem>.fused.evfm], <stem>.dets.json,
// report.json and report.csv.

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "evfuse/binary_io.hpp"
#include "evfuse/config.hpp"
#include "evfuse/detect.hpp"
#include "evfuse/enhance.hpp"
#include "evfuse/eval.hpp"
#include "evfuse/events.hpp"
#include "evfuse/fusion.hpp"
#include "evfuse/json_io.hpp"
#include "evfuse/voxelize.hpp"

namespace evfuse {

namespace fs = std::filesystem;

struct EventStageResult {
  VoxelGrid grid;
  std::size_t events_in_window = 0;
  std::size_t events_kept = 0;
  std::size_t hot_pixels = 0;
  std::vector<ChannelId> zeroed;
  TimeWindow window;
};

// restrict -> hot-pixel filter -> voxelize -> density filter.
inline EventStageResult run_event_stage(const EventStream& stream, const TimeWindow& window,
                                        const PipelineConfig& cfg) {
  EventStageResult r;
  r.window = window;
  const auto windowed = restrict_to_window(stream, window);
  r.events_in_window = windowed.size();
  auto hot = hot_pixel_filter(windowed, window, cfg.theta_hot_hz);
  r.events_kept = hot.stream.size();
  r.hot_pixels = hot.removed.size();
  auto dens = density_filter(voxelize(hot.stream, window, {cfg.bins, cfg.theta_dens}), cfg.theta_dens);
  r.grid = std::move(dens.grid);
  r.zeroed = std::move(dens.zeroed);
  return r;
}

inline ImageTensor run_enhance_stage(const ImageTensor& img, const ClaheParams& params, bool pad32) {
  auto eq = clahe(img, params);
  return pad32 ? normalize_and_pad(eq) : eq;
}

struct PipelineSummary {
  std::vector<std::string> frames;
  EvalReport report;
  std::vector<fs::path> artifacts;
};

namespace detail {

inline std::vector<std::string> list_frames(const fs::path& dir) {
  constexpr std::string_view suffix = ".events.csv";
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix)) {
      stems.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

}  // namespace detail

inline PipelineSummary run_pipeline(const fs::path& in_dir, const fs::path& out_dir, const PipelineConfig& cfg) {
  cfg.validate();
  if (!fs::is_directory(in_dir)) throw IoError("input directory '" + in_dir.string() + "' does not exist");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  PipelineSummary summary;
  summary.frames = detail::list_frames(in_dir);
  if (summary.frames.empty()) throw ValidationError("no *.events.csv frames in '" + in_dir.string() + "'");

  std::optional<std::pair<ConvWeights, ConvWeights>> acmf;
  if (fs::exists(in_dir / "acmf_w1.evwt") && fs::exists(in_dir / "acmf_w2.evwt")) {
    acmf.emplace(decode_conv_weights(binary::read_file(in_dir / "acmf_w1.evwt")),
                 decode_conv_weights(binary::read_file(in_dir / "acmf_w2.evwt")));
  }

  auto emit = [&](const std::string& name, std::span<const char> bytes) {
    binary::write_file(out_dir / name, bytes);
    summary.artifacts.push_back(out_dir / name);
  };
  auto emit_text = [&](const std::string& name, const std::string& text) {
    emit(name, std::span<const char>(text.data(), text.size()));
  };

  MatchCounts overall;
  std::array<MatchCounts, kNumClasses> per_class{};
  nlohmann::ordered_json frames_json = nlohmann::ordered_json::array();
  std::string csv = "frame,events_in_window,events_kept,hot_pixels,detections,tp,fp,fn,precision_pct,recall_pct,f1_pct\n";

  for (const auto& stem : summary.frames) {
    nlohmann::ordered_json fj;
    fj["frame"] = stem;

    const auto stream = parse_stream(binary::read_text_file(in_dir / (stem + ".events.csv")));
    const std::uint64_t t0 = cfg.window_t0_us ? *cfg.window_t0_us : (stream.empty() ? 0 : stream.events().front().t);
    const auto ev = run_event_stage(stream, TimeWindow(t0, cfg.window_dt_us), cfg);
    emit(stem + ".evxg", encode_voxel_grid(ev.grid));
    fj["window"] = {{"t0_us", t0}, {"dt_us", cfg.window_dt_us}};
    fj["events_in_window"] = ev.events_in_window;
    fj["events_kept"] = ev.events_kept;
    fj["hot_pixels"] = ev.hot_pixels;
    fj["voxel_shape"] = {ev.grid.channels(), ev.grid.height(), ev.grid.width()};
    nlohmann::ordered_json zeroed = nlohmann::ordered_json::array();
    for (const auto& z : ev.zeroed) zeroed.push_back({{"bin", z.bin}, {"polarity", z.q}});
    fj["zeroed_channels"] = zeroed;

    const auto image = decode_image(binary::read_file(in_dir / (stem + ".evim")));
    const auto equalized = clahe(image, cfg.clahe);
    emit(stem + ".clahe.evim", encode_image(equalized));
    const auto input = cfg.pad32 ? normalize_and_pad(equalized) : equalized;
    emit(stem + ".input.evim", encode_image(input));
    fj["image_shape"] = {input.channels(), input.height(), input.width()};

    const auto fimg_path = in_dir / (stem + ".fimg.evfm");
    const auto fevt_path = in_dir / (stem + ".fevt.evfm");
    if (acmf && fs::exists(fimg_path) && fs::exists(fevt_path)) {
      const auto f_img = decode_feature_map(binary::read_file(fimg_path));
      const auto f_evt = decode_feature_map(binary::read_file(fevt_path));
      const auto alpha = acmf_attention(f_img, f_evt, acmf->first, acmf->second);
      emit(stem + ".attention.evfm", encode_feature_map(alpha.tensor));
      emit(stem + ".fused.evfm", encode_feature_map(weighted_fuse(f_img, f_evt, alpha)));
      double mean_alpha = 0.0;
      for (double a : alpha.tensor.data) mean_alpha += a;
      mean_alpha /= static_cast<double>(alpha.tensor.size());
      fj["fusion"] = {{"mean_alpha", mean_alpha}, {"regularizer", alpha_regularizer(alpha, cfg.alpha_lambda)}};
    }

    const auto raw = decode_raw_prediction(binary::read_file(in_dir / (stem + ".raw.evrp")));
    const auto dets = nms(decode_all(raw, cfg.scales), cfg.tau_conf, cfg.tau_nms);
    emit_text(stem + ".dets.json", json_io::detections_to_json(dets).dump(2) + "\n");
    fj["detections"] = dets.size();

    const auto gt_path = in_dir / (stem + ".gt.json");
    std::string counts_csv = ",,,,,";
    if (fs::exists(gt_path)) {
      const auto gts = json_io::ground_truth_from_json(
          json_io::parse(binary::read_text_file(gt_path), gt_path.filename().string()));
      const auto m = match_detections(dets, gts, cfg.iou_thresh);
      overall += m.counts;
      for (std::size_t c = 0; c < kNumClasses; ++c) per_class[c] += m.per_class[c];
      const auto s = compute_prf(m.counts);
      fj["eval"] = json_io::to_json(s);
      counts_csv = std::to_string(s.counts.tp) + "," + std::to_string(s.counts.fp) + "," +
                   std::to_string(s.counts.fn) + "," + percent_2dp(s.precision) + "," + percent_2dp(s.recall) +
                   "," + percent_2dp(s.f1);
    }
    csv += stem + "," + std::to_string(ev.events_in_window) + "," + std::to_string(ev.events_kept) + "," +
           std::to_string(ev.hot_pixels) + "," + std::to_string(dets.size()) + "," + counts_csv + "\n";
    frames_json.push_back(fj);
  }

  summary.report = make_report(overall, per_class);
  nlohmann::ordered_json report;
  report["config"] = config_to_json(cfg);
  report["frames"] = frames_json;
  report["eval"] = json_io::to_json(summary.report, cfg.iou_thresh);
  emit_text("report.json", report.dump(2) + "\n");
  const auto& o = summary.report.overall;
  csv += "all,,,,," + std::to_string(o.counts.tp) + "," + std::to_string(o.counts.fp) + "," +
         std::to_string(o.counts.fn) + "," + percent_2dp(o.precision) + "," + percent_2dp(o.recall) + "," +
         percent_2dp(o.f1) + "\n";
  emit_text("report.csv", csv);
  return summary;
}

}  // namespace evfuse
