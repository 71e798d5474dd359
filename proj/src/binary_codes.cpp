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

#include "fisherhash/binary_codes.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "fisherhash/binary_io.hpp"
#include "fisherhash/error.hpp"

namespace fisherhash {

namespace {

constexpr char kCodeTableMagic[] = "FHSH";
constexpr std::uint32_t kCodeTableVersion = 1;

std::uint64_t mask_for(std::size_t bits) {
  const std::size_t rem = bits % 64;
  return rem == 0 ? ~std::uint64_t{0} : ((std::uint64_t{1} << rem) - 1);
}

void require_same_bits(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw InvalidArgument(std::string(op) + ": code length mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

std::vector<std::uint64_t> pack(std::span<const double> column) {
  if (column.empty()) throw InvalidArgument("pack: empty column");
  const std::size_t words = words_for_bits(column.size());
  // Start from all ones so padding is canonical, then clear the -1 bits.
  std::vector<std::uint64_t> out(words, ~std::uint64_t{0});
  for (std::size_t j = 0; j < column.size(); ++j) {
    const double v = column[j];
    if (!std::isfinite(v)) {
      throw NumericalError("pack: non-finite value at position " + std::to_string(j));
    }
    if (v < 0.0) out[j / 64] &= ~(std::uint64_t{1} << (j % 64));
  }
  return out;
}

std::vector<double> unpack(std::span<const std::uint64_t> words, std::size_t bits) {
  if (words.size() != words_for_bits(bits)) {
    throw InvalidArgument("unpack: word count does not match code length");
  }
  std::vector<double> out(bits);
  for (std::size_t j = 0; j < bits; ++j) {
    out[j] = ((words[j / 64] >> (j % 64)) & 1U) ? 1.0 : -1.0;
  }
  return out;
}

BinaryCodeMatrix::BinaryCodeMatrix(std::size_t bits, std::size_t items)
    : bits_(bits), items_(items), words_(words_for_bits(bits)) {
  if (bits == 0) throw InvalidArgument("BinaryCodeMatrix: K must be >= 1");
  words_data_.assign(words_ * items_, ~std::uint64_t{0});
}

BinaryCodeMatrix BinaryCodeMatrix::from_signs(const RealMatrix& values) {
  BinaryCodeMatrix out(static_cast<std::size_t>(values.rows()),
                       static_cast<std::size_t>(values.cols()));
  for (Eigen::Index i = 0; i < values.cols(); ++i) {
    const auto packed = pack(std::span<const double>(values.col(i).data(), out.bits_));
    out.set_column(static_cast<std::size_t>(i), packed);
  }
  return out;
}

int BinaryCodeMatrix::at(std::size_t bit, std::size_t item) const {
  const std::uint64_t w = words_data_[item * words_ + bit / 64];
  return ((w >> (bit % 64)) & 1U) ? 1 : -1;
}

void BinaryCodeMatrix::set(std::size_t bit, std::size_t item, int value) {
  std::uint64_t& w = words_data_[item * words_ + bit / 64];
  const std::uint64_t m = std::uint64_t{1} << (bit % 64);
  if (value >= 0) {
    w |= m;
  } else {
    w &= ~m;
  }
}

void BinaryCodeMatrix::set_column(std::size_t item, std::span<const std::uint64_t> words) {
  if (words.size() != words_) throw InvalidArgument("set_column: word count mismatch");
  std::uint64_t* dst = words_data_.data() + item * words_;
  for (std::size_t w = 0; w < words_; ++w) dst[w] = words[w];
  dst[words_ - 1] |= ~tail_mask();
}

RealMatrix BinaryCodeMatrix::to_real() const {
  RealMatrix out(static_cast<Eigen::Index>(bits_), static_cast<Eigen::Index>(items_));
  for (std::size_t i = 0; i < items_; ++i) {
    for (std::size_t j = 0; j < bits_; ++j) {
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = at(j, i);
    }
  }
  return out;
}

BinaryCodeMatrix BinaryCodeMatrix::select(std::span<const std::size_t> indices) const {
  BinaryCodeMatrix out(bits_, indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= items_) throw InvalidArgument("select: item index out of range");
    out.set_column(r, column(indices[r]));
  }
  return out;
}

std::uint64_t BinaryCodeMatrix::tail_mask() const { return mask_for(bits_); }

int hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                     std::size_t bits) {
  const std::size_t words = words_for_bits(bits);
  if (a.size() != words || b.size() != words) {
    throw InvalidArgument("hamming_distance: code length mismatch");
  }
  int d = 0;
  for (std::size_t w = 0; w + 1 < words; ++w) d += std::popcount(a[w] ^ b[w]);
  d += std::popcount((a[words - 1] ^ b[words - 1]) & mask_for(bits));
  return d;
}

int hamming_distance(const BinaryCodeMatrix& a, std::size_t i, const BinaryCodeMatrix& b,
                     std::size_t j) {
  require_same_bits(a.bits(), b.bits(), "hamming_distance");
  return hamming_distance(a.column(i), b.column(j), a.bits());
}

int code_inner_product(const BinaryCodeMatrix& a, std::size_t i, const BinaryCodeMatrix& b,
                       std::size_t j) {
  return static_cast<int>(a.bits()) - 2 * hamming_distance(a, i, b, j);
}

double dissimilarity(const BinaryCodeMatrix& a, std::size_t i, const BinaryCodeMatrix& b,
                     std::size_t j) {
  return -0.5 * code_inner_product(a, i, b, j);
}

double dissimilarity(const Eigen::Ref<const RealVector>& a, const Eigen::Ref<const RealVector>& b) {
  require_same_bits(static_cast<std::size_t>(a.size()), static_cast<std::size_t>(b.size()),
                    "dissimilarity");
  return -0.5 * a.dot(b);
}

IntMatrix inner_product_matrix(const BinaryCodeMatrix& a, const BinaryCodeMatrix& b) {
  require_same_bits(a.bits(), b.bits(), "inner_product_matrix");
  IntMatrix out(static_cast<Eigen::Index>(a.items()), static_cast<Eigen::Index>(b.items()));
  for (std::size_t i = 0; i < a.items(); ++i) {
    for (std::size_t j = 0; j < b.items(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          code_inner_product(a, i, b, j);
    }
  }
  return out;
}

RealMatrix inner_product_matrix(const RealMatrix& a, const RealMatrix& b) {
  require_same_bits(static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(b.rows()),
                    "inner_product_matrix");
  return a.transpose() * b;
}

void save_code_table(const BinaryCodeMatrix& codes, const std::filesystem::path& path) {
  io::ByteWriter w;
  w.magic(kCodeTableMagic);
  w.u32(kCodeTableVersion);
  w.u32(static_cast<std::uint32_t>(codes.bits()));
  w.u32(static_cast<std::uint32_t>(codes.items()));
  for (std::uint64_t word : codes.raw_words()) w.u64(word);
  w.save(path);
}

BinaryCodeMatrix load_code_table(const std::filesystem::path& path) {
  auto r = io::ByteReader::open(path);
  r.expect_magic(kCodeTableMagic);
  const std::uint32_t version = r.u32();
  if (version != kCodeTableVersion) {
    throw DataError(path.string() + ": unsupported code-table version " + std::to_string(version));
  }
  const std::uint32_t bits = r.u32();
  const std::uint32_t items = r.u32();
  if (bits == 0) throw DataError(path.string() + ": code length is zero");
  const std::size_t words = words_for_bits(bits);
  r.expect_remaining(std::size_t{items} * words * 8, "code-table payload");
  BinaryCodeMatrix codes(bits, items);
  std::vector<std::uint64_t> column(words);
  for (std::uint32_t i = 0; i < items; ++i) {
    for (auto& word : column) word = r.u64();
    codes.set_column(i, column);
  }
  return codes;
}

}  // namespace fisherhash
