/*
 * Copyright 2026 The FisherHash Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Little-endian encoding helpers shared by every on-disk format.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "fisherhash/error.hpp"

namespace fisherhash::io {

class ByteWriter {
 public:
  void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }

  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  const std::vector<char>& bytes() const { return bytes_; }

  /// Writes the buffer to `path`, replacing any existing file.
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw DataError("write failed: " + path.string());
  }

 private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
  }

  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string source)
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  static ByteReader open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(bytes), path.string());
  }

  void expect_magic(std::string_view tag) {
    require(tag.size(), "magic");
    if (std::string_view(bytes_.data() + pos_, tag.size()) != tag) {
      throw DataError(source_ + ": bad magic, expected \"" + std::string(tag) + "\"");
    }
    pos_ += tag.size();
  }

  std::uint32_t u32() { return get_le<std::uint32_t>("u32"); }
  std::uint64_t u64() { return get_le<std::uint64_t>("u64"); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>("f32")); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>("f64")); }

  /// Fails unless exactly `n` more bytes remain; reports expected vs actual.
  void expect_remaining(std::size_t n, std::string_view what) const {
    if (remaining() != n) {
      throw DataError(source_ + ": " + std::string(what) + " expected " + std::to_string(n) +
                      " bytes, found " + std::to_string(remaining()));
    }
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& source() const { return source_; }

 private:
  void require(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      throw DataError(source_ + ": truncated while reading " + std::string(what) + " (need " +
                      std::to_string(n) + " bytes, have " + std::to_string(remaining()) + ")");
    }
  }

  template <typename T>
  T get_le(std::string_view what) {
    require(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  std::vector<char> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace fisherhash::io
