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

// Quantized center learning.
//
// Every class c owns a binary center c_c in {-1,+1}^K (column of C). The
// discrete subproblem for fixed representations U is
//
//   min_{B,C}  mu * sum_i ||b_i - C y_i||^2  +  nu * ||C^T C - A||_F^2
//                 + sum_i ||b_i - u_i||^2,          A = K (2I - J),
//
// solved by alternating:
//   * centers: gradient descent on a relaxed V with the penalty
//     eta * ||sgn(V) - V||^2, then C = sgn(V);
//   * codes:   B = sgn(mu * C Y + U), the exact per-item minimizer.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fisherhash/binary_codes.hpp"

namespace fisherhash {

/// M x N class-proportion matrix. Column i spreads weight 1/m over the m
/// labels of item i. The label sets themselves are kept for relevance tests.
class LabelMatrix {
 public:
  LabelMatrix() = default;

  /// Throws DataError on an empty label set or a class id outside [0, M).
  static LabelMatrix from_label_sets(std::vector<std::vector<int>> label_sets,
                                     std::size_t num_classes);

  const RealMatrix& matrix() const { return y_; }
  std::size_t classes() const { return static_cast<std::size_t>(y_.rows()); }
  std::size_t items() const { return label_sets_.size(); }
  const std::vector<std::vector<int>>& label_sets() const { return label_sets_; }
  const std::vector<int>& labels_of(std::size_t item) const { return label_sets_.at(item); }

  LabelMatrix select(std::span<const std::size_t> indices) const;

 private:
  RealMatrix y_;
  std::vector<std::vector<int>> label_sets_;
};

struct CenterHyper {
  double mu = 1.0;
  double nu = 0.1;
  double eta = 0.5;
  double inner_lr = 1e-2;
  int inner_steps = 20;

  void validate() const;
};

/// K (2I - J), an M x M matrix with K on the diagonal and -K elsewhere.
RealMatrix target_matrix(std::size_t bits, std::size_t classes);

/// Elementwise sgn with sgn(0) = +1.
RealMatrix sign_matrix(const RealMatrix& v);

/// sum_i ||b_i - C y_i||^2.
double intra_loss(const BinaryCodeMatrix& codes, const BinaryCodeMatrix& centers,
                  const LabelMatrix& labels);
/// ||C^T C - A||_F^2 for binary or relaxed centers.
double inter_loss(const RealMatrix& centers, const RealMatrix& target);
double inter_loss(const BinaryCodeMatrix& centers, const RealMatrix& target);
/// sum_i ||b_i - u_i||^2.
double quant_loss(const BinaryCodeMatrix& codes, const RealMatrix& reps);

/// mu ||B - VY||^2 + nu ||V^T V - A||^2 + eta ||S - V||^2 with S a frozen
/// sign pattern (normally sgn(V)).
double relaxed_center_objective(const RealMatrix& v, const RealMatrix& frozen_sign,
                                const BinaryCodeMatrix& codes, const LabelMatrix& labels,
                                const RealMatrix& target, const CenterHyper& hyper);

/// 2 mu (VY - B) Y^T + 4 nu V (V^T V - A) + 2 eta (V - sgn(V)).
RealMatrix center_gradient(const RealMatrix& v, const BinaryCodeMatrix& codes,
                           const LabelMatrix& labels, const RealMatrix& target,
                           const CenterHyper& hyper);

struct CenterUpdate {
  RealMatrix relaxed;       // V'
  BinaryCodeMatrix centers; // C' = sgn(V')
};

/// Runs `inner_steps` gradient steps on V and quantizes the result.
///
/// The step uses the center_gradient terms with the mu term divided by N, so
/// the step size does not grow with the number of items. Classes with no
/// weight in `labels` keep their previous column. Throws NumericalError
/// naming the step if V stops being finite.
CenterUpdate update_centers(const RealMatrix& v, const BinaryCodeMatrix& codes,
                            const LabelMatrix& labels, const RealMatrix& target,
                            const CenterHyper& hyper);

/// B = sgn(mu C Y + U).
BinaryCodeMatrix update_codes(const RealMatrix& reps, const BinaryCodeMatrix& centers,
                              const LabelMatrix& labels, double mu, int threads = 1);

/// mu sum_i ||b_i - C y_i||^2 + sum_i ||b_i - u_i||^2, the objective that
/// update_codes minimizes exactly.
double code_objective(const BinaryCodeMatrix& codes, const RealMatrix& reps,
                      const BinaryCodeMatrix& centers, const LabelMatrix& labels, double mu);

/// Label-weighted class means of U. Throws DataError naming the first class
/// with zero total weight.
RealMatrix init_centers(const RealMatrix& reps, const LabelMatrix& labels);

struct DiscreteState {
  BinaryCodeMatrix codes;
  RealMatrix relaxed;
  BinaryCodeMatrix centers;
};

/// `rounds` alternations of (update_centers, update_codes) starting from
/// B = sgn(U). `relaxed` seeds V; when absent V starts at the class means.
DiscreteState alternate_codes_and_centers(const RealMatrix& reps, const LabelMatrix& labels,
                                          std::optional<RealMatrix> relaxed,
                                          const CenterHyper& hyper, int rounds, int threads = 1);

/// Relaxed-center sidecar: "FHCV", version, K, M, then K*M little-endian f64
/// in column-major order.
void save_relaxed_centers(const RealMatrix& v, const std::filesystem::path& path);
RealMatrix load_relaxed_centers(const std::filesystem::path& path);

}  // namespace fisherhash
