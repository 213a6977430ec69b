#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evfuse/common.hpp"

namespace evfuse {

struct Event {
  std::uint64_t t = 0;  // microseconds
  std::uint32_t x = 0;  // column
  std::uint32_t y = 0;  // row
  std::int8_t p = 1;    // -1 or +1

  friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

// Half-open interval [t0, t0 + dt) in microseconds.
struct TimeWindow {
  std::uint64_t t0 = 0;
  std::uint64_t dt = 1;

  TimeWindow() = default;
  TimeWindow(std::uint64_t start, std::uint64_t length) : t0(start), dt(length) {
    if (length == 0) throw ValidationError("time window length dt must be > 0");
  }

  std::uint64_t end() const { return t0 + dt; }
  bool contains(std::uint64_t t) const { return t >= t0 && t < t0 + dt; }
  double seconds() const { return static_cast<double>(dt) * 1e-6; }
};

// Time-ordered events from a sensor of fixed geometry. Construction validates
// bounds, polarity and ordering, so every live instance satisfies them.
class EventStream {
 public:
  EventStream() = default;
  EventStream(SensorGeometry geometry, std::vector<Event> events)
      : geometry_(geometry), events_(std::move(events)) {
    validate();
  }

  const SensorGeometry& geometry() const { return geometry_; }
  std::uint32_t width() const { return geometry_.width; }
  std::uint32_t height() const { return geometry_.height; }
  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  friend bool operator==(const EventStream&, const EventStream&) = default;

 private:
  void validate() const {
    if (geometry_.width == 0 || geometry_.height == 0) {
      throw ValidationError("sensor geometry must be non-empty");
    }
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const auto& e = events_[i];
      if (e.x >= geometry_.width || e.y >= geometry_.height) {
        throw ValidationError("event " + std::to_string(i) + " at (" + std::to_string(e.x) + ", " +
                              std::to_string(e.y) + ") outside " + std::to_string(geometry_.width) +
                              "x" + std::to_string(geometry_.height) + " sensor");
      }
      if (e.p != 1 && e.p != -1) {
        throw ValidationError("event " + std::to_string(i) + " has polarity " +
                              std::to_string(e.p) + ", expected -1 or +1");
      }
      if (i > 0 && e.t < events_[i - 1].t) {
        throw ValidationError("event " + std::to_string(i) + " timestamp " + std::to_string(e.t) +
                              " precedes previous " + std::to_string(events_[i - 1].t));
      }
    }
  }

  SensorGeometry geometry_{};
  std::vector<Event> events_;
};

namespace detail {

inline std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::optional<SensorGeometry> parse_header(std::string_view line) {
  constexpr std::string_view prefix = "# evfuse-events v1 ";
  if (!line.starts_with(prefix)) return std::nullopt;
  line.remove_prefix(prefix.size());
  auto space = line.find(' ');
  if (space == std::string_view::npos) return std::nullopt;
  auto w = line.substr(0, space);
  auto h = line.substr(space + 1);
  if (!w.starts_with("W=") || !h.starts_with("H=")) return std::nullopt;
  SensorGeometry g;
  if (!parse_int(w.substr(2), g.width) || !parse_int(h.substr(2), g.height)) return std::nullopt;
  return g;
}

}  // namespace detail

// Parses the `t_us,x,y,p` CSV format. The `# evfuse-events v1 W=.. H=..`
// header is optional when `geometry` is supplied; if both are present they
// must agree. Polarity 0/1 is normalized to -1/+1.
inline EventStream parse_stream(std::string_view text,
                                std::optional<SensorGeometry> geometry = std::nullopt) {
  std::vector<Event> events;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  auto fail = [&](const std::string& msg) -> ValidationError {
    return ValidationError("line " + std::to_string(line_no) + ": " + msg);
  };

  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = detail::trim_cr(text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;

    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line_no != 1) throw fail("header allowed only on the first line");
      auto header = detail::parse_header(line);
      if (!header) throw fail("malformed header '" + std::string(line) + "'");
      if (geometry && !(*geometry == *header)) {
        throw fail("header geometry " + std::to_string(header->width) + "x" +
                   std::to_string(header->height) + " disagrees with requested " +
                   std::to_string(geometry->width) + "x" + std::to_string(geometry->height));
      }
      geometry = header;
      continue;
    }
    if (!geometry) throw fail("no sensor geometry: missing header and none supplied");

    std::string_view fields[4];
    std::size_t n = 0;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      if (n == 4) throw fail("expected 4 fields");
      fields[n++] = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (n != 4) throw fail("expected 4 fields, got " + std::to_string(n));

    Event e;
    int p = 0;
    if (!detail::parse_int(fields[0], e.t)) throw fail("bad timestamp '" + std::string(fields[0]) + "'");
    if (!detail::parse_int(fields[1], e.x)) throw fail("bad x '" + std::string(fields[1]) + "'");
    if (!detail::parse_int(fields[2], e.y)) throw fail("bad y '" + std::string(fields[2]) + "'");
    if (!detail::parse_int(fields[3], p)) throw fail("bad polarity '" + std::string(fields[3]) + "'");
    switch (p) {
      case -1:
      case 0: e.p = -1; break;
      case 1: e.p = 1; break;
      default: throw fail("polarity " + std::to_string(p) + " not in {-1, 0, 1}");
    }
    if (e.x >= geometry->width || e.y >= geometry->height) {
      throw fail("coordinate (" + std::to_string(e.x) + ", " + std::to_string(e.y) +
                 ") out of bounds for " + std::to_string(geometry->width) + "x" +
                 std::to_string(geometry->height));
    }
    if (!events.empty() && e.t < events.back().t) {
      throw fail("timestamp " + std::to_string(e.t) + " is not monotone (previous " +
                 std::to_string(events.back().t) + ")");
    }
    events.push_back(e);
  }

  if (!geometry) throw ValidationError("no sensor geometry: missing header and none supplied");
  return EventStream(*geometry, std::move(events));
}

inline std::string write_stream(const EventStream& stream) {
  std::string out = "# evfuse-events v1 W=" + std::to_string(stream.width()) +
                    " H=" + std::to_string(stream.height()) + "\n";
  out.reserve(out.size() + stream.size() * 24);
  for (const auto& e : stream.events()) {
    out += std::to_string(e.t);
    out += ',';
    out += std::to_string(e.x);
    out += ',';
    out += std::to_string(e.y);
    out += ',';
    out += e.p > 0 ? "1" : "-1";
    out += '\n';
  }
  return out;
}

inline EventStream restrict_to_window(const EventStream& stream, const TimeWindow& window) {
  const auto& ev = stream.events();
  auto lo = std::lower_bound(ev.begin(), ev.end(), window.t0,
                             [](const Event& e, std::uint64_t t) { return e.t < t; });
  auto hi = std::lower_bound(lo, ev.end(), window.end(),
                             [](const Event& e, std::uint64_t t) { return e.t < t; });
  return EventStream(stream.geometry(), std::vector<Event>(lo, hi));
}

struct PixelCoord {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  auto operator<=>(const PixelCoord&) const = default;
};

struct HotPixelResult {
  EventStream stream;
  std::set<PixelCoord> removed;
};

// Removes every event at pixels whose in-window event rate strictly exceeds
// `theta_hot_hz`. Events outside the window still count as belonging to the
// pixel and are dropped with it.
inline HotPixelResult hot_pixel_filter(const EventStream& stream, const TimeWindow& window,
                                       double theta_hot_hz) {
  if (!(theta_hot_hz > 0.0)) throw ValidationError("theta_hot must be > 0");
  const std::size_t w = stream.width();
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(stream.width()) * stream.height(), 0);
  for (const auto& e : stream.events()) {
    if (window.contains(e.t)) ++counts[e.y * w + e.x];
  }
  // rate > theta  <=>  count * 1e6 > theta * dt_us, which is exact for the usual integers.
  const double limit = theta_hot_hz * static_cast<double>(window.dt);
  std::vector<char> hot(counts.size(), 0);
  HotPixelResult result;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (static_cast<double>(counts[i]) * 1e6 > limit) {
      hot[i] = 1;
      result.removed.insert({static_cast<std::uint32_t>(i % w), static_cast<std::uint32_t>(i / w)});
    }
  }
  std::vector<Event> kept;
  kept.reserve(stream.size());
  for (const auto& e : stream.events()) {
    if (!hot[e.y * w + e.x]) kept.push_back(e);
  }
  result.stream = EventStream(stream.geometry(), std::move(kept));
  return result;
}

}  // namespace evfuse
