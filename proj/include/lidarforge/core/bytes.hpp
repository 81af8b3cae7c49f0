// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "lidarforge/core/error.hpp"

namespace lidarforge {

template <typename T>
T byte_reversed(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

/// Reads a T stored with the given byte order from `src`.
template <typename T>
T load_scalar(const unsigned char* src, std::endian order = std::endian::little) {
  T value;
  std::memcpy(&value, src, sizeof(T));
  return order == std::endian::native ? value : byte_reversed(value);
}

/// Appends `value` to `out` in little-endian byte order.
template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  if constexpr (std::endian::native != std::endian::little) value = byte_reversed(value);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error("read failed: " + path.string());
  return data;
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const unsigned char> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

inline void write_file_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

/// Bounds-checked little-endian cursor over a byte buffer; overruns raise
/// ParseError with the offending byte offset.
class ByteReader {
 public:
  ByteReader(std::span<const unsigned char> data, std::string source,
             std::endian order = std::endian::little)
      : data_(data), source_(std::move(source)), order_(order) {}

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return data_.size() - offset_; }

  void require(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw ParseError(source_, ParseError::Unit::kByte, offset_,
                       std::string("truncated while reading ") + what);
    }
  }

  template <typename T>
  T read(const char* what) {
    require(sizeof(T), what);
    T v = load_scalar<T>(data_.data() + offset_, order_);
    offset_ += sizeof(T);
    return v;
  }

  std::string read_string(std::size_t n, const char* what) {
    require(n, what);
    std::string s(reinterpret_cast<const char*>(data_.data() + offset_), n);
    offset_ += n;
    return s;
  }

  void skip(std::size_t n, const char* what) {
    require(n, what);
    offset_ += n;
  }

  [[noreturn]] void fail(const std::string& what) const { fail_at(offset_, what); }
  [[noreturn]] void fail_at(std::size_t offset, const std::string& what) const {
    throw ParseError(source_, ParseError::Unit::kByte, offset, what);
  }

 private:
  std::span<const unsigned char> data_;
  std::string source_;
  std::endian order_;
  std::size_t offset_ = 0;
};

}  // namespace lidarforge
