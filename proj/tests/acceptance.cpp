// Acceptance suite: one PASS/FAIL line per criterion, each under its runtime
// budget. Exit status is non-zero when any criterion fails.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evfuse/cli.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
using namespace evfuse;

// Collects the first few failure descriptions of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_.push_back(what);
  }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    std::string s = std::to_string(failures_) + " failure(s)";
    for (const auto& n : notes_) s += "; " + n;
    return s;
  }

 private:
  std::size_t failures_ = 0;
  std::vector<std::string> notes_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void conservation(Check& c) {
  std::mt19937_64 rng(101);
  const SensorGeometry g{346, 260};
  for (int s = 0; s < 50; ++s) {
    // Log-uniform size in [1e3, 1e5].
    const auto n = static_cast<std::size_t>(std::pow(10.0, oracle::uniform(rng, 3.0, 5.0)));
    const auto stream = oracle::random_stream(rng, n, g, 0, 30'000);
    double pos = 0.0, neg = 0.0;
    for (const auto& e : stream.events()) (e.p > 0 ? pos : neg) += 1.0;
    for (std::size_t bins : {2u, 3u, 4u, 8u}) {
      const auto grid = voxelize(stream, TimeWindow(0, 30'000), {bins, 0.0});
      const double mp = grid.polarity_mass(1), mn = grid.polarity_mass(0);
      c.expect(std::fabs(mp - pos) <= 1e-9 * pos && std::fabs(mn - neg) <= 1e-9 * neg,
               "stream " + std::to_string(s) + " B=" + std::to_string(bins) + " mass (" + fmt(mn) + ", " + fmt(mp) +
                   ") vs counts (" + fmt(neg) + ", " + fmt(pos) + ")");
    }
  }
}

void partition(Check& c) {
  std::mt19937_64 rng(102);
  for (std::size_t bins : {2u, 3u, 4u, 8u}) {
    for (int i = 0; i < 100'000; ++i) {
      double tau = oracle::uniform(rng, 0.0, static_cast<double>(bins - 1));
      if (i == 0) tau = 0.0;
      if (i == 1) tau = static_cast<double>(bins - 1);
      double s = 0.0;
      for (std::size_t b = 0; b < bins; ++b) s += kernel(tau, static_cast<double>(b));
      c.expect(std::fabs(s - 1.0) <= 1e-12, "B=" + std::to_string(bins) + " tau=" + fmt(tau) + " sum=" + fmt(s));
    }
  }
}

std::set<std::size_t> support(std::uint64_t t, const TimeWindow& w, std::size_t bins) {
  std::set<std::size_t> s;
  const double tau = normalize_timestamp(t, w, bins);
  for (std::size_t b = 0; b < bins; ++b) {
    if (kernel(tau, static_cast<double>(b)) > 0.0) s.insert(b);
  }
  return s;
}

bool intersects(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
  for (auto v : a) {
    if (b.count(v)) return true;
  }
  return false;
}

void resolution(Check& c) {
  const TimeWindow w(0, 30'000);
  c.expect(temporal_resolution(w, 4) == 10'000.0, "temporal_resolution(30 ms, 4) = " + fmt(temporal_resolution(w, 4)));
  c.expect(temporal_resolution(w, 2) == 30'000.0, "temporal_resolution(30 ms, 2)");
  // Below the bound: 5 ms apart share bin 0.
  c.expect(intersects(support(0, w, 4), support(5'000, w, 4)), "pair 5 ms apart does not share a bin");
  // At the bound and bin-aligned: {0} and {1}.
  c.expect(support(0, w, 4) == std::set<std::size_t>{0} && support(10'000, w, 4) == std::set<std::size_t>{1},
           "aligned pair 10 ms apart is not disjoint");
  std::mt19937_64 rng(103);
  for (std::size_t bins : {2u, 3u, 4u, 8u}) {
    const auto delta = static_cast<std::uint64_t>(temporal_resolution(w, bins));
    for (int i = 0; i < 20'000; ++i) {
      const std::uint64_t t0 = rng() % (30'000 - delta + 1);
      const std::uint64_t t1 = t0 + rng() % delta;
      c.expect(intersects(support(t0, w, bins), support(t1, w, bins)),
               "B=" + std::to_string(bins) + " events " + std::to_string(t0) + "/" + std::to_string(t1));
    }
    // Every aligned pair one resolution step apart has disjoint supports; the
    // window is chosen so bin centres fall on integer timestamps.
    const TimeWindow wa(0, 10'000 * (bins - 1));
    for (std::size_t b = 0; b + 1 < bins; ++b) {
      const auto ta = static_cast<std::uint64_t>(b) * 10'000;
      c.expect(!intersects(support(ta, wa, bins), support(ta + 10'000, wa, bins)),
               "B=" + std::to_string(bins) + " aligned pair at bin " + std::to_string(b));
    }
  }
}

struct McResult {
  double at_star = 0.0;
  std::map<double, double> others;
};

// Test-side Monte Carlo: every alpha sees the same noise draws.
McResult monte_carlo(double s_img, double s_evt, double star, const std::vector<double>& alphas, std::size_t n,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> img(n), evt(n);
  for (std::size_t i = 0; i < n; ++i) {
    img[i] = 1.0 + std::sqrt(s_img) * z(rng);
    evt[i] = 1.0 + std::sqrt(s_evt) * z(rng);
  }
  auto var = [&](double a) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a * img[i] + (1.0 - a) * evt[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = a * img[i] + (1.0 - a) * evt[i] - mean;
      ss += d * d;
    }
    return ss / static_cast<double>(n - 1);
  };
  McResult r;
  r.at_star = var(star);
  for (double a : alphas) r.others[a] = var(a);
  return r;
}

void fusion_monte_carlo(Check& c) {
  const std::size_t n = 100'000;
  {
    const double star = optimal_alpha(4.0, 1.0);
    c.expect(star == 0.2, "alpha*(4, 1) = " + fmt(star));
    const auto mc = monte_carlo(4.0, 1.0, star, {0.1, 0.3}, n, 201);
    c.expect(mc.at_star >= 0.784 && mc.at_star <= 0.816, "empirical fused variance " + fmt(mc.at_star));
    c.expect(mc.at_star < mc.others.at(0.1) && mc.at_star < mc.others.at(0.3),
             "alpha*=0.2 does not beat 0.1/0.3: " + fmt(mc.at_star) + " vs " + fmt(mc.others.at(0.1)) + ", " +
                 fmt(mc.others.at(0.3)));
    // The library simulator reaches the same conclusion.
    const auto sim = simulate_fusion(4.0, 1.0, n, 202);
    c.expect(sim.optimal.empirical_variance >= 0.784 && sim.optimal.empirical_variance <= 0.816,
             "simulate_fusion variance " + fmt(sim.optimal.empirical_variance));
    c.expect(sim.optimal.empirical_variance < sim.grid[2].empirical_variance &&
                 sim.optimal.empirical_variance < sim.grid[6].empirical_variance,
             "simulate_fusion alpha* not better than 0.1/0.3");
  }
  std::mt19937_64 rng(203);
  for (int p = 0; p < 10; ++p) {
    const double s_img = std::exp(oracle::uniform(rng, std::log(0.1), std::log(10.0)));
    const double s_evt = std::exp(oracle::uniform(rng, std::log(0.1), std::log(10.0)));
    const double star = optimal_alpha(s_img, s_evt);
    const double analytic = fused_variance(s_img, s_evt);
    std::vector<double> neighbours;
    if (star - 0.1 >= 0.0) neighbours.push_back(star - 0.1);
    if (star + 0.1 <= 1.0) neighbours.push_back(star + 0.1);
    const auto mc = monte_carlo(s_img, s_evt, star, neighbours, n, 300 + static_cast<std::uint64_t>(p));
    c.expect(std::fabs(mc.at_star - analytic) <= 0.02 * analytic,
             "pair (" + fmt(s_img) + ", " + fmt(s_evt) + ") empirical " + fmt(mc.at_star) + " vs " + fmt(analytic));
    for (const auto& [a, v] : mc.others) {
      c.expect(mc.at_star < v, "pair (" + fmt(s_img) + ", " + fmt(s_evt) + ") alpha " + fmt(a) + " beats alpha*");
    }
  }
}

void weight_limits(Check& c) {
  std::mt19937_64 rng(104);
  for (int i = 0; i < 10'000; ++i) {
    const double evt = std::exp(oracle::uniform(rng, -20.0, 20.0));
    const double ratio = 1e3 * (i == 0 ? 1.0 + 1e-12 : std::exp(oracle::uniform(rng, 1e-12, 10.0)));
    const double img = evt * ratio;
    if (!(img / evt > 1e3)) continue;
    c.expect(optimal_alpha(img, evt) < 1e-3, "alpha(" + fmt(img) + ", " + fmt(evt) + ")");
    c.expect(optimal_alpha(evt, img) > 1.0 - 1e-3, "alpha(" + fmt(evt) + ", " + fmt(img) + ")");
  }
}

FeatureMap random_map(std::mt19937_64& rng, std::size_t ch, std::size_t h, std::size_t w, double scale = 1.0) {
  FeatureMap f(ch, h, w);
  for (double& v : f.data) v = scale * oracle::uniform(rng, -1.0, 1.0);
  return f;
}

void fusion_limits(Check& c) {
  std::mt19937_64 rng(105);
  for (int trial = 0; trial < 100; ++trial) {
    const auto fi = random_map(rng, 4, 8, 9, 10.0);
    const auto fe = random_map(rng, 4, 8, 9, 10.0);
    const auto rgb = weighted_fuse(fi, fe, AttentionMap::constant(4, 8, 9, 1.0 - 1e-9));
    const auto evt = weighted_fuse(fi, fe, AttentionMap::constant(4, 8, 9, 1e-9));
    const auto avg = weighted_fuse(fi, fe, AttentionMap::constant(4, 8, 9, 0.5));
    for (std::size_t i = 0; i < fi.data.size(); ++i) {
      c.expect(std::fabs(rgb.data[i] - fi.data[i]) <= 1e-6, "alpha->1 does not recover f_img");
      c.expect(std::fabs(evt.data[i] - fe.data[i]) <= 1e-6, "alpha->0 does not recover f_evt");
      c.expect(std::fabs(avg.data[i] - 0.5 * (fi.data[i] + fe.data[i])) <= 1e-6, "alpha=0.5 is not the average");
    }
    AttentionMap alpha{random_map(rng, 4, 8, 9)};
    for (double& a : alpha.tensor.data) a = oracle::uniform(rng, 1e-9, 1.0 - 1e-9);
    c.expect(weighted_fuse(fi, fi, alpha) == fi, "(f, f, alpha) does not return f exactly");

    const auto zero = acmf_attention(fi, fe, ConvWeights(4, 8, 1, 1), ConvWeights(4, 4, 3, 3));
    for (double a : zero.tensor.data) c.expect(a == 0.5, "zero-weight attention gives " + fmt(a));
  }
}

void init_response(Check& c) {
  ConvWeights rgb(1, 3, 1, 1);
  rgb.w(0, 0, 0, 0) = 3.0;
  rgb.w(0, 1, 0, 0) = 6.0;
  rgb.w(0, 2, 0, 0) = 9.0;
  const auto ev = channel_avg_init(rgb);
  c.expect(ev.in_channels == 8, "expanded layer has " + std::to_string(ev.in_channels) + " inputs");
  for (std::size_t i = 0; i < ev.in_channels; ++i) c.expect(ev.w(0, i, 0, 0) == 6.0, "slice " + std::to_string(i));

  ConvWeights same(3, 3, 3, 3);
  std::mt19937_64 rng(106);
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t k = 0; k < 9; ++k) {
      const double w = oracle::uniform(rng, -1.0, 1.0);
      for (std::size_t i = 0; i < 3; ++i) same.w(o, i, k / 3, k % 3) = w;
    }
  }
  const auto e2 = channel_avg_init(same);
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t k = 0; k < 9; ++k) {
      for (std::size_t i = 0; i < 8; ++i) {
        c.expect(e2.w(o, i, k / 3, k % 3) == same.w(o, 0, k / 3, k % 3), "equal RGB slices not reproduced");
      }
    }
  }

  for (int trial = 0; trial < 50; ++trial) {
    ConvWeights w(6, 3, 3, 3);
    for (double& v : w.weights) v = oracle::uniform(rng, -1.0, 1.0);
    for (double& v : w.bias) v = oracle::uniform(rng, -1.0, 1.0);
    const auto w8 = channel_avg_init(w);
    const auto plane = random_map(rng, 1, 10, 12);
    FeatureMap x3(3, 10, 12), x8(8, 10, 12);
    for (std::size_t ch = 0; ch < 8; ++ch) {
      std::copy(plane.data.begin(), plane.data.end(), x8.plane(ch).begin());
      if (ch < 3) std::copy(plane.data.begin(), plane.data.end(), x3.plane(ch).begin());
    }
    const auto y3 = oracle::conv_direct(x3, w, 1);
    const auto y8 = oracle::conv_direct(x8, w8, 1);
    for (std::size_t o = 0; o < 6; ++o) {
      for (std::size_t i = 0; i < y3.plane_size(); ++i) {
        const double r3 = y3.plane(o)[i] - w.bias[o];
        const double r8 = y8.plane(o)[i] - w8.bias[o];
        c.expect(std::fabs(r8 - 8.0 / 3.0 * r3) <= 1e-6, "response ratio off: " + fmt(r8) + " vs " + fmt(r3));
      }
    }
  }
}

void clahe_checks(Check& c) {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t levels = std::size_t{2} << (rng() % 8);
    std::vector<std::uint64_t> h(levels);
    std::uint64_t total = 0;
    for (auto& v : h) {
      v = rng() % 3 == 0 ? rng() % 2000 : rng() % 10;
      total += v;
    }
    if (total == 0) h[0] = total = 1;
    const double kappa = static_cast<double>(1 + rng() % 4);
    const double kappa_abs = kappa * static_cast<double>(total) / static_cast<double>(levels);
    const auto clipped = clip_histogram(h, kappa_abs);
    c.expect(compensated_sum(clipped) == static_cast<double>(total),
             "mass " + fmt(compensated_sum(clipped)) + " != " + std::to_string(total));
  }

  for (int trial = 0; trial < 20; ++trial) {
    ImageTensor img(1, 64, 64, ValueRange::kByte);
    const auto hi = 30 + rng() % 226;
    for (float& v : img.tensor.data) v = static_cast<float>(rng() % (hi + 1));
    ClaheParams p;
    p.tiles = 1;
    const auto got = clahe(img, p);
    std::vector<std::uint8_t> plane(img.tensor.data.begin(), img.tensor.data.end());
    const auto want = oracle::global_clipped_equalization(plane, p.clip_limit);
    bool same = true;
    for (std::size_t i = 0; i < want.size(); ++i) same &= got.tensor.data[i] == static_cast<float>(want[i]);
    c.expect(same, "M=1 image " + std::to_string(trial) + " differs from global equalization");
  }

  const auto padded = normalize_and_pad(clahe(ImageTensor(3, 260, 346, ValueRange::kByte, 12.0f), {}), 32);
  c.expect(padded.channels() == 3 && padded.height() == 288 && padded.width() == 352,
           "260x346 padded to " + shape_string(padded.tensor));
}

void detection_stack(Check& c) {
  std::mt19937_64 rng(108);
  const auto scales = default_scales();
  for (int trial = 0; trial < 30; ++trial) {
    const auto& spec = scales[rng() % scales.size()];
    RawScale r(spec.scale, 1 + rng() % 12, 1 + rng() % 12);
    for (double& v : r.data) v = oracle::uniform(rng, -4.0, 4.0);
    const auto dets = decode_boxes(r, spec.anchors, spec.stride());
    for (std::size_t i = 0; i < r.height; ++i) {
      for (std::size_t j = 0; j < r.width; ++j) {
        for (std::size_t k = 0; k < 3; ++k) {
          const auto want = oracle::decode_cell(r.at(i, j, k), i, j, spec.anchors[k], spec.stride());
          const auto& got = dets[r.slot(i, j, k)];
          const double err = std::max({std::fabs(got.box.x_min - want.box.x_min), std::fabs(got.box.y_min - want.box.y_min),
                                       std::fabs(got.box.x_max - want.box.x_max), std::fabs(got.box.y_max - want.box.y_max),
                                       std::fabs(got.confidence - want.confidence)});
          c.expect(err <= 1e-6 && got.class_id == want.class_id, "decode mismatch " + fmt(err));
        }
      }
    }
  }

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Detection> dets(200);
    for (auto& d : dets) {
      const double x = oracle::uniform(rng, 0.0, 150.0), y = oracle::uniform(rng, 0.0, 150.0);
      d.box = {x, y, x + oracle::uniform(rng, 4.0, 40.0), y + oracle::uniform(rng, 4.0, 40.0)};
      d.class_id = 1 + static_cast<int>(rng() % 3);
      d.confidence = static_cast<double>(rng() % 50) / 50.0;
    }
    const auto got = nms(dets, 0.1, 0.4);
    const auto want = oracle::nms_bruteforce(dets, 0.1, 0.4);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < want.size(); ++i) {
      same = got[i].box == dets[want[i]].box && got[i].confidence == dets[want[i]].confidence &&
             got[i].class_id == dets[want[i]].class_id;
    }
    c.expect(same, "nms case " + std::to_string(trial) + ": " + std::to_string(got.size()) + " vs " +
                       std::to_string(want.size()) + " survivors");
  }

  const LossWeights lw;
  c.expect(lw.box == 5.0 && lw.obj == 10.0 && lw.cls == 1.0, "default loss weights");
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<GridShape> grids = {{3, 8, 10}, {4, 4, 5}, {5, 2, 3}};
    std::vector<LabeledBox> gts;
    for (std::size_t g = 0; g < 1 + rng() % 8; ++g) {
      const double x = oracle::uniform(rng, 0.0, 60.0), y = oracle::uniform(rng, 0.0, 45.0);
      gts.push_back({{x, y, x + oracle::uniform(rng, 4.0, 60.0), y + oracle::uniform(rng, 4.0, 60.0)},
                     1 + static_cast<int>(rng() % 3)});
    }
    const auto targets = assign_targets(gts, grids, scales);
    RawPrediction raw;
    for (const auto& g : grids) {
      RawScale r(g.scale, g.height, g.width);
      for (double& v : r.data) v = oracle::uniform(rng, -3.0, 3.0);
      raw.push_back(std::move(r));
    }
    const auto got = detection_loss(raw, targets, lw);
    const auto want = oracle::loss_loops(raw, targets);
    c.expect(std::fabs(got.total - want.total) <= 1e-9, "loss " + fmt(got.total) + " vs oracle " + fmt(want.total));
  }
}

void evaluator(Check& c) {
  const auto s = compute_prf(7, 6, 4);
  c.expect(percent_2dp(s.precision) == "53.85", "P = " + percent_2dp(s.precision));
  c.expect(percent_2dp(s.recall) == "63.64", "R = " + percent_2dp(s.recall));
  c.expect(percent_2dp(s.f1) == "58.33", "F1 = " + percent_2dp(s.f1));

  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Detection> dets(1 + rng() % 50);
    std::vector<GroundTruth> gts(1 + rng() % 50);
    auto box = [&] {
      const double x = static_cast<double>(rng() % 8), y = static_cast<double>(rng() % 8);
      return Box{x, y, x + 2.0 + static_cast<double>(rng() % 5), y + 2.0 + static_cast<double>(rng() % 5)};
    };
    for (auto& g : gts) g = {box(), 1 + static_cast<int>(rng() % 2)};
    for (auto& d : dets) {
      d.box = box();
      d.class_id = 1 + static_cast<int>(rng() % 2);
      d.confidence = static_cast<double>(rng() % 6) / 6.0;
    }
    const auto m = match_detections(dets, gts, 0.4);
    const auto [want, consistent] = oracle::match_exhaustive(dets, gts, 0.4);
    c.expect(consistent == 1, "oracle found " + std::to_string(consistent) + " consistent assignments");
    c.expect(m.counts.tp == want.tp && m.counts.fp == want.fp && m.counts.fn == want.fn,
             "case " + std::to_string(trial) + " counts differ from oracle");
    c.expect(m.counts.tp + m.counts.fn == gts.size(), "tp + fn != |gts|");
  }
}

std::map<std::string, std::vector<char>> snapshot(const fs::path& dir) {
  std::map<std::string, std::vector<char>> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = binary::read_file(e.path());
  return files;
}

void determinism(Check& c) {
  const fs::path root = fs::temp_directory_path() / ("evfuse_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<std::map<std::string, std::vector<char>>> runs;
  for (const char* name : {"run1", "run2"}) {
    const auto out = (root / name).string();
    const char* argv[] = {"evfuse", "pipeline", "--dir", EVFUSE_FIXTURE_DIR, "--out", out.c_str(), "--seed", "7"};
    std::ostringstream so, se;
    const int code = cli::run(8, argv, so, se);
    c.expect(code == 0, std::string("pipeline exit ") + std::to_string(code) + ": " + se.str());
    if (code == 0) runs.push_back(snapshot(out));
  }
  if (runs.size() == 2) {
    c.expect(!runs[0].empty(), "no artifacts written");
    c.expect(runs[0] == runs[1], "artifacts differ between runs");
  }
  fs::remove_all(root);
}

struct Criterion {
  const char* name;
  double limit_s;
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"1  voxel conservation (50 streams, B in {2,3,4,8}, 1e-9 rel)", 10.0, conservation},
      {"2  kernel partition of unity (1e5 tau per B, 1e-12)", 1.0, partition},
      {"3  temporal resolution bound and bin support", 1.0, resolution},
      {"4  minimum-variance fusion Monte Carlo", 30.0, fusion_monte_carlo},
      {"5  optimal weight limits at variance ratio 1e3", 1.0, weight_limits},
      {"6  fusion limits, indifference, zero-weight attention", 5.0, fusion_limits},
      {"7  channel-average initialization and 8/3 response", 5.0, init_response},
      {"8  CLAHE mass, single-tile oracle, 288x352 padding", 10.0, clahe_checks},
      {"9  decode, NMS and loss against oracles", 20.0, detection_stack},
      {"10 evaluator fixture and exhaustive matching oracle", 10.0, evaluator},
      {"11 end-to-end pipeline determinism", 30.0, determinism},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < cr.limit_s;
    const bool pass = check.ok() && in_time;
    failed += !pass;
    std::printf("%s  %-62s %7.3f s (limit %g s)", pass ? "PASS" : "FAIL", cr.name, secs, cr.limit_s);
    if (!check.ok()) std::printf("  %s", check.summary().c_str());
    if (!in_time) std::printf("  over time budget");
    std::printf("\n");
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
