// src/byte_io.h

// Copyright 2026 The embedspace Authors

// See COPYING in the top-level directory for clarification regarding
// multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMBEDSPACE_SRC_BYTE_IO_H_
#define EMBEDSPACE_SRC_BYTE_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "embedspace/data_model.h"
#include "embedspace/error.h"

namespace embedspace::internal {

// Little-endian encoder for the binary containers.
class ByteWriter {
 public:
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::string_view bytes) { out_.append(bytes); }
  void str16(std::string_view s) {
    require(s.size() <= 0xffff, ErrorCode::kInvalidArgument,
            "identifier longer than 65535 bytes");
    u16(static_cast<std::uint16_t>(s.size()));
    raw(s);
  }
  void matrix(const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  void vector(const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string what) : in_(bytes), what_(std::move(what)) {}

  void expect_magic(std::string_view magic) {
    if (in_.size() < magic.size() || in_.substr(0, magic.size()) != magic)
      fail(ErrorCode::kParse, what_ + ": bad magic, expected \"" + std::string(magic) + "\"");
    pos_ = magic.size();
  }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str16() {
    std::size_t n = u16();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  Matrix matrix(std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) m(r, c) = f64();
    return m;
  }
  Vector vector(std::size_t n) {
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v(i) = f64();
    return v;
  }
  std::size_t remaining() const { return in_.size() - pos_; }
  void expect_end() const {
    if (remaining() != 0) fail(ErrorCode::kParse, what_ + ": trailing bytes after payload");
  }
  const std::string& what() const { return what_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail(ErrorCode::kParse, what_ + ": truncated at byte " + std::to_string(pos_));
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }

  std::string_view in_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace embedspace::internal

#endif  // EMBEDSPACE_SRC_BYTE_IO_H_
