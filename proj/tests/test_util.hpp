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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fisherhash/binary_codes.hpp"

namespace fh_test {

using fisherhash::BinaryCodeMatrix;
using fisherhash::RealMatrix;

inline RealMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  RealMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = g(rng);
  }
  return m;
}

/// Uniform {-1,+1} matrix.
inline RealMatrix random_signs(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::bernoulli_distribution coin(0.5);
  RealMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = coin(rng) ? 1.0 : -1.0;
  }
  return m;
}

inline BinaryCodeMatrix random_codes(std::mt19937_64& rng, std::size_t bits, std::size_t items) {
  return BinaryCodeMatrix::from_signs(random_signs(rng, bits, items));
}

inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fisherhash_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(FH_FIXTURE_DIR) / rel;
}

}  // namespace fh_test
