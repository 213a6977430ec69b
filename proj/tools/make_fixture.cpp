// Writes the small synthetic frame set used by the end-to-end pipeline test.
//   make_fixture <out_dir>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "evfuse/evfuse.hpp"

namespace {

using namespace evfuse;

constexpr std::uint32_t kWidth = 80;
constexpr std::uint32_t kHeight = 64;
constexpr std::uint64_t kWindow = 30000;

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

EventStream make_events(std::mt19937_64& rng, int frame) {
  std::vector<Event> ev;
  // Background activity.
  for (int i = 0; i < 1500; ++i) {
    ev.push_back({static_cast<std::uint64_t>(uniform(rng) * kWindow), static_cast<std::uint32_t>(rng() % kWidth),
                  static_cast<std::uint32_t>(rng() % kHeight), static_cast<std::int8_t>(rng() % 2 ? 1 : -1)});
  }
  // A vertical edge sweeping right, positive leading / negative trailing.
  for (std::uint64_t t = 0; t < kWindow; t += 150) {
    const auto x = static_cast<std::uint32_t>(10 + frame * 5 + 40.0 * static_cast<double>(t) / kWindow);
    for (std::uint32_t y = 20; y < 44; y += 3) {
      ev.push_back({t, x, y, 1});
      if (x > 0) ev.push_back({t + 7, x - 1, y, -1});
    }
  }
  // Hot pixel: ~1 kHz.
  for (std::uint64_t t = 0; t < kWindow; t += 1000) ev.push_back({t + 3, 3, 60, 1});
  std::stable_sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return EventStream({kWidth, kHeight}, std::move(ev));
}

ImageTensor make_image(std::mt19937_64& rng, int frame) {
  ImageTensor img(3, kHeight, kWidth, ValueRange::kByte);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < kHeight; ++y) {
      for (std::size_t x = 0; x < kWidth; ++x) {
        // Dark gradient plus a dim object and sensor noise.
        double v = 6.0 + 10.0 * static_cast<double>(x) / kWidth + 3.0 * static_cast<double>(c);
        if (x >= 20 + 5u * frame && x < 44 + 5u * frame && y >= 16 && y < 48) v += 12.0;
        v += 4.0 * (uniform(rng) - 0.5);
        img.at(c, y, x) = static_cast<float>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return img;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

// Encodes a box into the raw slot that would decode back to it.
void plant(RawScale& level, const ScaleSpec& spec, std::size_t k, const Box& box, int cls, double obj) {
  const double stride = spec.stride();
  const double cx = (box.x_min + box.x_max) / 2.0 / stride;
  const double cy = (box.y_min + box.y_max) / 2.0 / stride;
  const auto j = static_cast<std::size_t>(cx);
  const auto i = static_cast<std::size_t>(cy);
  auto t = level.at(i, j, k);
  t[0] = logit(std::clamp(cx - static_cast<double>(j), 0.05, 0.95));
  t[1] = logit(std::clamp(cy - static_cast<double>(i), 0.05, 0.95));
  t[2] = std::log(box.width() / spec.anchors[k].w);
  t[3] = std::log(box.height() / spec.anchors[k].h);
  t[4] = logit(obj);
  for (int c = 0; c < 3; ++c) t[5 + c] = c + 1 == cls ? logit(0.9) : logit(0.05);
}

RawPrediction make_raw(std::mt19937_64& rng, const std::vector<GroundTruth>& gts, int frame) {
  const auto scales = default_scales();
  RawPrediction raw;
  for (int s : {3, 4}) {
    const auto& spec = scales[static_cast<std::size_t>(s - 2)];
    RawScale level(s, kHeight >> s, kWidth >> s);
    for (double& v : level.data) v = -4.0 + 2.0 * (uniform(rng) - 0.5);
    raw.push_back(std::move(level));
  }
  const auto& s3 = scales[1];
  // A near-duplicate pair for each box (exercises NMS) on scale 3.
  for (std::size_t g = 0; g < gts.size(); ++g) {
    Box b = gts[g].box;
    b.x_min += 1.5;
    b.x_max += 1.0;
    plant(raw[0], s3, 1, b, gts[g].class_id, 0.8 - 0.1 * static_cast<double>(g));
    b.y_min -= 1.0;
    plant(raw[0], s3, 2, b, gts[g].class_id, 0.6);
  }
  // A false positive and a miss-localized box.
  plant(raw[0], s3, 0, {56, 4, 70, 14}, 2, 0.5);
  if (frame == 1) plant(raw[0], s3, 0, {2, 40, 14, 60}, 1, 0.3);
  return raw;
}

FeatureMap make_features(std::mt19937_64& rng, double noise, std::size_t channels) {
  FeatureMap f(channels, kHeight >> 3, kWidth >> 3);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < f.height; ++y) {
      for (std::size_t x = 0; x < f.width; ++x) {
        f.at(c, y, x) = std::sin(0.7 * static_cast<double>(x + c)) * std::cos(0.5 * static_cast<double>(y)) +
                        noise * (uniform(rng) - 0.5);
      }
    }
  }
  return f;
}

ConvWeights make_weights(std::mt19937_64& rng, std::size_t out, std::size_t in, std::size_t k) {
  ConvWeights w(out, in, k, k);
  for (double& v : w.weights) v = 0.5 * (uniform(rng) - 0.5);
  for (double& v : w.bias) v = 0.1 * (uniform(rng) - 0.5);
  return w;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture <out_dir>\n";
    return 1;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(20260101);

  constexpr std::size_t kFeatureChannels = 4;
  binary::write_file(dir / "acmf_w1.evwt", encode_conv_weights(make_weights(rng, kFeatureChannels, 2 * kFeatureChannels, 1)));
  binary::write_file(dir / "acmf_w2.evwt", encode_conv_weights(make_weights(rng, kFeatureChannels, kFeatureChannels, 3)));

  for (int frame = 0; frame < 2; ++frame) {
    const std::string stem = "frame_00" + std::to_string(frame);
    binary::write_text_file(dir / (stem + ".events.csv"), write_stream(make_events(rng, frame)));
    binary::write_file(dir / (stem + ".evim"), encode_image(make_image(rng, frame)));

    std::vector<GroundTruth> gts = {
        {{20.0 + 5 * frame, 16, 44.0 + 5 * frame, 48}, 1},
        {{4, 4, 20, 14}, 3},
    };
    if (frame == 1) gts.push_back({{60, 40, 76, 60}, 2});
    const auto gt_json = json_io::ground_truth_to_json(gts).dump(2) + "\n";
    binary::write_text_file(dir / (stem + ".gt.json"), gt_json);
    binary::write_file(dir / (stem + ".raw.evrp"), encode_raw_prediction(make_raw(rng, gts, frame)));

    binary::write_file(dir / (stem + ".fimg.evfm"), encode_feature_map(make_features(rng, 1.0, kFeatureChannels)));
    binary::write_file(dir / (stem + ".fevt.evfm"), encode_feature_map(make_features(rng, 0.2, kFeatureChannels)));
  }
  std::cout << "fixture written to " << dir << "\n";
  return 0;
}
