#pragma once

// `evfuse <subcommand> [flags]`. Exit codes: 0 success, 1 validation error
// (bad flags, config or input content), 2 I/O error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evfuse/binary_io.hpp"
#include "evfuse/config.hpp"
#include "evfuse/fusion_sim.hpp"
#include "evfuse/json_io.hpp"
#include "evfuse/pipeline.hpp"

namespace evfuse::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

namespace detail {

inline PipelineConfig load_config(const std::string& flag_path) {
  std::string path = flag_path;
  if (path.empty()) {
    if (const char* env = std::getenv("EVFUSE_CONFIG"); env && *env) path = env;
  }
  if (path.empty()) return PipelineConfig{};
  return config_from_json(json_io::parse(binary::read_text_file(path), path));
}

inline void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  binary::write_text_file(path, j.dump(2) + "\n");
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Event/RGB fusion detection pipeline tools", "evfuse"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON config file (falls back to $EVFUSE_CONFIG)");
  auto* o_seed = app.add_option("--seed", seed, "Override the config seed");

  // voxelize
  auto* vox = app.add_subcommand("voxelize", "Filter an event window and write its voxel grid (EVXG)");
  std::string vox_events, vox_out;
  std::uint64_t vox_t0 = 0, vox_dt = 0;
  std::size_t vox_bins = 0;
  double vox_hot = 0, vox_dens = 0;
  vox->add_option("--events", vox_events, "Event CSV")->required();
  auto* o_t0 = vox->add_option("--t0", vox_t0, "Window start (us); default first event");
  auto* o_dt = vox->add_option("--dt", vox_dt, "Window length (us)");
  auto* o_bins = vox->add_option("--bins", vox_bins, "Temporal bins per polarity");
  auto* o_hot = vox->add_option("--theta-hot", vox_hot, "Hot-pixel rate threshold (Hz)");
  auto* o_dens = vox->add_option("--theta-dens", vox_dens, "Per-channel density threshold");
  vox->add_option("--out", vox_out, "Output .evxg")->required();

  // enhance
  auto* enh = app.add_subcommand("enhance", "CLAHE-enhance an EVIM image");
  std::string enh_in, enh_out, enh_mode;
  std::size_t enh_tiles = 0;
  double enh_clip = 0;
  bool enh_pad = false;
  enh->add_option("--in", enh_in, "Input .evim (0..255)")->required();
  auto* o_tiles = enh->add_option("--tiles", enh_tiles, "Tiles per side (M)");
  auto* o_clip = enh->add_option("--clip", enh_clip, "Clip limit (kappa, normalized)");
  auto* o_mode = enh->add_option("--mode", enh_mode, "per-channel | luminance")
                     ->check(CLI::IsMember({"per-channel", "luminance"}));
  enh->add_flag("--pad32", enh_pad, "Normalize to [0,1] and zero-pad to multiples of 32");
  enh->add_option("--out", enh_out, "Output .evim")->required();

  // fuse-sim
  auto* sim = app.add_subcommand("fuse-sim", "Monte-Carlo check of minimum-variance fusion weights");
  double sim_img = 4.0, sim_evt = 1.0;
  std::size_t sim_n = 100000;
  std::string sim_out;
  sim->add_option("--sigma-img", sim_img, "Image noise variance")->capture_default_str();
  sim->add_option("--sigma-evt", sim_evt, "Event noise variance")->capture_default_str();
  sim->add_option("--samples", sim_n, "Number of draws")->capture_default_str();
  sim->add_option("--out", sim_out, "Output JSON")->required();

  // decode
  auto* dec = app.add_subcommand("decode", "Decode raw head output (EVRP), threshold and NMS");
  std::string dec_raw, dec_anchors, dec_out;
  double dec_conf = 0, dec_nms = 0;
  dec->add_option("--raw", dec_raw, "Raw prediction .evrp")->required();
  dec->add_option("--anchors", dec_anchors, "Anchor JSON {\"scales\": [...]} (default: config)");
  auto* o_conf = dec->add_option("--conf", dec_conf, "Confidence threshold");
  auto* o_nms = dec->add_option("--nms", dec_nms, "NMS IoU threshold");
  dec->add_option("--out", dec_out, "Output detections JSON")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Match detections to ground truth and report P/R/F1");
  std::string ev_dets, ev_gt, ev_out, ev_csv;
  double ev_iou = 0;
  ev->add_option("--dets", ev_dets, "Detections JSON")->required();
  ev->add_option("--gt", ev_gt, "Ground-truth JSON")->required();
  auto* o_iou = ev->add_option("--iou", ev_iou, "IoU matching threshold");
  ev->add_option("--out", ev_out, "Output report JSON")->required();
  ev->add_option("--csv", ev_csv, "Also write a P/R/F1 CSV table");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run every stage over a directory of paired frames");
  std::string pipe_dir, pipe_out;
  pipe->add_option("--dir", pipe_dir, "Input directory")->required();
  pipe->add_option("--out", pipe_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    auto cfg = detail::load_config(config_path);
    if (*o_seed) cfg.seed = seed;

    if (*vox) {
      if (*o_dt) cfg.window_dt_us = vox_dt;
      if (*o_bins) cfg.bins = vox_bins;
      if (*o_hot) cfg.theta_hot_hz = vox_hot;
      if (*o_dens) cfg.theta_dens = vox_dens;
      if (*o_t0) cfg.window_t0_us = vox_t0;
      cfg.validate();
      const auto stream = parse_stream(binary::read_text_file(vox_events));
      const std::uint64_t t0 =
          cfg.window_t0_us ? *cfg.window_t0_us : (stream.empty() ? 0 : stream.events().front().t);
      const auto r = run_event_stage(stream, TimeWindow(t0, cfg.window_dt_us), cfg);
      binary::write_file(vox_out, encode_voxel_grid(r.grid));
      out << "voxelized " << r.events_kept << "/" << r.events_in_window << " events, " << r.hot_pixels
          << " hot pixels, " << r.zeroed.size() << " channels zeroed -> (" << r.grid.channels() << ", "
          << r.grid.height() << ", " << r.grid.width() << ")\n";
    } else if (*enh) {
      if (*o_tiles) cfg.clahe.tiles = enh_tiles;
      if (*o_clip) cfg.clahe.clip_limit = enh_clip;
      if (*o_mode) cfg.clahe.mode = enh_mode == "luminance" ? ClaheMode::kLuminance : ClaheMode::kPerChannel;
      cfg.validate();
      const auto img = decode_image(binary::read_file(enh_in));
      binary::write_file(enh_out, encode_image(run_enhance_stage(img, cfg.clahe, enh_pad)));
    } else if (*sim) {
      if (!(sim_img >= 0.0) || !(sim_evt >= 0.0) || !(sim_img + sim_evt > 0.0)) {
        throw ValidationError("--sigma-img/--sigma-evt must be >= 0 and not both zero");
      }
      const auto r = simulate_fusion(sim_img, sim_evt, sim_n, cfg.seed);
      nlohmann::ordered_json j;
      j["sigma2_img"] = r.sigma2_img;
      j["sigma2_evt"] = r.sigma2_evt;
      j["samples"] = r.samples;
      j["seed"] = r.seed;
      j["alpha_star"] = r.optimal.alpha;
      j["analytic_variance"] = r.optimal.analytic_variance;
      j["empirical_variance"] = r.optimal.empirical_variance;
      nlohmann::ordered_json grid = nlohmann::ordered_json::array();
      for (const auto& g : r.grid) {
        grid.push_back({{"alpha", g.alpha},
                        {"analytic_variance", g.analytic_variance},
                        {"empirical_variance", g.empirical_variance}});
      }
      j["alpha_grid"] = grid;
      j["grid_argmin_analytic"] = r.grid[r.grid_argmin_analytic].alpha;
      j["grid_argmin_empirical"] = r.grid[r.grid_argmin_empirical].alpha;
      j["grid_nearest_alpha_star"] = r.grid[r.grid_nearest_optimal].alpha;
      detail::write_json(sim_out, j);
      out << "alpha* = " << r.optimal.alpha << ", analytic variance = " << r.optimal.analytic_variance
          << ", empirical variance = " << r.optimal.empirical_variance << "\n";
    } else if (*dec) {
      if (*o_conf) cfg.tau_conf = dec_conf;
      if (*o_nms) cfg.tau_nms = dec_nms;
      if (!dec_anchors.empty()) {
        const auto j = json_io::parse(binary::read_text_file(dec_anchors), dec_anchors);
        if (!j.is_object() || !j.contains("scales")) throw ValidationError(dec_anchors + ": missing \"scales\"");
        cfg.scales = json_io::scales_from_json(j["scales"], "scales");
      }
      cfg.validate();
      const auto raw = decode_raw_prediction(binary::read_file(dec_raw));
      const auto dets = nms(decode_all(raw, cfg.scales), cfg.tau_conf, cfg.tau_nms);
      detail::write_json(dec_out, json_io::detections_to_json(dets));
      out << dets.size() << " detections\n";
    } else if (*ev) {
      if (*o_iou) cfg.iou_thresh = ev_iou;
      cfg.validate();
      const auto dets = json_io::detections_from_json(json_io::parse(binary::read_text_file(ev_dets), ev_dets));
      const auto gts = json_io::ground_truth_from_json(json_io::parse(binary::read_text_file(ev_gt), ev_gt));
      const auto m = match_detections(dets, gts, cfg.iou_thresh);
      const auto report = make_report(m.counts, m.per_class);
      detail::write_json(ev_out, json_io::to_json(report, cfg.iou_thresh));
      if (!ev_csv.empty()) binary::write_text_file(ev_csv, json_io::report_csv(report));
      out << "P=" << percent_2dp(report.overall.precision) << "% R=" << percent_2dp(report.overall.recall)
          << "% F1=" << percent_2dp(report.overall.f1) << "%\n";
    } else if (*pipe) {
      const auto s = run_pipeline(pipe_dir, pipe_out, cfg);
      out << s.frames.size() << " frames, P=" << percent_2dp(s.report.overall.precision)
          << "% R=" << percent_2dp(s.report.overall.recall) << "% F1=" << percent_2dp(s.report.overall.f1)
          << "%\n";
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}

}  // namespace evfuse::cli
