#pragma once

// Little-endian primitives shared by the EVXG / EVIM / EVWT / EVFM / EVRP
// binary containers. Byte order is fixed regardless of host endianness.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "evfuse/common.hpp"

namespace evfuse::binary {

inline constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  void magic(std::string_view m) {
    buf_.insert(buf_.end(), m.begin(), m.end());
  }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::span<const char> bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  void expect_magic(std::string_view m) {
    need(m.size());
    if (std::string_view(bytes_.data() + pos_, m.size()) != m) {
      throw ValidationError(what_ + ": bad magic, expected '" + std::string(m) + "'");
    }
    pos_ += m.size();
  }
  void expect_version() {
    auto v = u32();
    if (v != kFormatVersion) {
      throw ValidationError(what_ + ": unsupported version " + std::to_string(v));
    }
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }

  // Guards element counts read from a header before allocating.
  void require_remaining(std::uint64_t n_bytes) const {
    if (n_bytes > bytes_.size() - pos_) {
      throw ValidationError(what_ + ": truncated payload (need " + std::to_string(n_bytes) +
                            " bytes, have " + std::to_string(bytes_.size() - pos_) + ")");
    }
  }
  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw ValidationError(what_ + ": " + std::to_string(bytes_.size() - pos_) +
                            " trailing bytes");
    }
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ValidationError(what_ + ": unexpected end of data");
  }

  std::span<const char> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<char> out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on '" + path.string() + "'");
  return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

inline void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span<const char>(text.data(), text.size()));
}

}  // namespace evfuse::binary
