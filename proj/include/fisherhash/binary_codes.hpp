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

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fisherhash {

/// K x N real matrix, one column per item (encoder outputs U, centers V, ...).
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Sign quantization with the library-wide tie-break sgn(0) = +1.
inline double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }

/// Number of 64-bit words holding one K-bit code.
constexpr std::size_t words_for_bits(std::size_t bits) { return (bits + 63) / 64; }

/// Packs a column of reals into sign bits (bit 1 <-> +1). Padding bits are 1.
/// Throws NumericalError on any non-finite entry.
std::vector<std::uint64_t> pack(std::span<const double> column);

/// Expands a packed column back to K values in {-1, +1}.
std::vector<double> unpack(std::span<const std::uint64_t> words, std::size_t bits);

/// K x N matrix of {-1, +1} entries stored as packed sign bits, column-major:
/// every item owns `words_per_code()` contiguous 64-bit words.
class BinaryCodeMatrix {
 public:
  BinaryCodeMatrix() = default;
  /// All entries +1.
  BinaryCodeMatrix(std::size_t bits, std::size_t items);

  /// sgn of every entry of `values` (K = rows, N = cols).
  static BinaryCodeMatrix from_signs(const RealMatrix& values);

  std::size_t bits() const { return bits_; }
  std::size_t items() const { return items_; }
  std::size_t words_per_code() const { return words_; }

  std::span<const std::uint64_t> column(std::size_t item) const {
    return {words_data_.data() + item * words_, words_};
  }
  std::span<const std::uint64_t> raw_words() const { return words_data_; }

  /// Entry (bit, item) as -1 or +1.
  int at(std::size_t bit, std::size_t item) const;
  void set(std::size_t bit, std::size_t item, int value);
  /// Overwrites one column with packed words (padding is re-canonicalized).
  void set_column(std::size_t item, std::span<const std::uint64_t> words);

  /// Dense {-1, +1} copy.
  RealMatrix to_real() const;

  /// Columns listed in `indices`, in that order.
  BinaryCodeMatrix select(std::span<const std::size_t> indices) const;

  /// Mask of the meaningful bits in the last word of each column.
  std::uint64_t tail_mask() const;

  friend bool operator==(const BinaryCodeMatrix& a, const BinaryCodeMatrix& b) {
    return a.bits_ == b.bits_ && a.items_ == b.items_ && a.words_data_ == b.words_data_;
  }

 private:
  std::size_t bits_ = 0;
  std::size_t items_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> words_data_;
};

/// Number of differing bits between two packed K-bit codes.
int hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                     std::size_t bits);
int hamming_distance(const BinaryCodeMatrix& a, std::size_t i, const BinaryCodeMatrix& b,
                     std::size_t j);

/// Inner product of two packed codes, K - 2 * hamming.
int code_inner_product(const BinaryCodeMatrix& a, std::size_t i, const BinaryCodeMatrix& b,
                       std::size_t j);

/// -1/2 <a, b>, monotone increasing in Hamming distance for binary inputs.
double dissimilarity(const BinaryCodeMatrix& a, std::size_t i, const BinaryCodeMatrix& b,
                     std::size_t j);
double dissimilarity(const Eigen::Ref<const RealVector>& a, const Eigen::Ref<const RealVector>& b);

/// (i, j) = <A_i, B_j> computed with XOR/popcount.
IntMatrix inner_product_matrix(const BinaryCodeMatrix& a, const BinaryCodeMatrix& b);
RealMatrix inner_product_matrix(const RealMatrix& a, const RealMatrix& b);

/// Code-table file: "FHSH", version, K, N, then N columns of ceil(K/64)
/// little-endian u64 words.
void save_code_table(const BinaryCodeMatrix& codes, const std::filesystem::path& path);
BinaryCodeMatrix load_code_table(const std::filesystem::path& path);

}  // namespace fisherhash
