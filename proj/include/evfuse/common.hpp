#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evfuse {

// Input or domain-constraint violation. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File-system or stream failure. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense planar (channels, height, width) tensor in row-major order.
template <typename T>
struct Tensor3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<T> data;

  Tensor3() = default;
  Tensor3(std::size_t c, std::size_t h, std::size_t w, T fill = T{})
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane_size() const { return height * width; }

  std::size_t index(std::size_t c, std::size_t y, std::size_t x) const {
    return (c * height + y) * width + x;
  }
  T& at(std::size_t c, std::size_t y, std::size_t x) { return data[index(c, y, x)]; }
  const T& at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[index(c, y, x)];
  }

  std::span<T> plane(std::size_t c) {
    return std::span<T>(data).subspan(c * plane_size(), plane_size());
  }
  std::span<const T> plane(std::size_t c) const {
    return std::span<const T>(data).subspan(c * plane_size(), plane_size());
  }

  bool same_shape(const Tensor3& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;
};

// Single-channel real field over (y, x).
struct Field2 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Field2() = default;
  Field2(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), data(h * w, fill) {}

  double& at(std::size_t y, std::size_t x) { return data[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return data[y * width + x]; }
};

inline std::string shape_string(std::size_t c, std::size_t h, std::size_t w) {
  return "(" + std::to_string(c) + ", " + std::to_string(h) + ", " + std::to_string(w) + ")";
}

template <typename T>
std::string shape_string(const Tensor3<T>& t) {
  return shape_string(t.channels, t.height, t.width);
}

}  // namespace evfuse
