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

// Margin logistic pairwise loss on continuous representations.
//
// For a pair with dissimilarity D = -1/2 <u_i, u_j>:
//   similar pairs     L^S(D) = log(1 + exp( D + m))
//   dissimilar pairs  L^D(D) = log(1 + exp(-D + m))
// The margin m >= 0 shifts both curves up; m = 0 is the plain symmetric
// logistic loss. pair_objective adds psi * sum ||u_i - b_i||^2 which ties the
// representations to their current binary codes.

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fisherhash/binary_codes.hpp"

namespace fisherhash {

/// log(1 + e^x) without overflow.
double softplus(double x);
/// 1 / (1 + e^-x) without overflow.
double logistic(double x);

double loss_similar(double dissim, double margin);
double loss_dissimilar(double dissim, double margin);

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Similar / dissimilar pairs over columns [0, N). Pairs are stored with
/// first < second; the two sets must be disjoint.
struct PairSets {
  std::vector<IndexPair> similar;
  std::vector<IndexPair> dissimilar;

  std::size_t size() const { return similar.size() + dissimilar.size(); }
  /// Throws InvalidArgument if any pair is out of range, a self-pair,
  /// unordered, or present in both sets.
  void validate(std::size_t n) const;
};

/// All unordered pairs of `label_sets`, similar iff the two items share at
/// least one label. Pair order: (0,1), (0,2), ..., (1,2), ...
PairSets pairs_from_labels(std::span<const std::vector<int>> label_sets);

struct MarginParams {
  double margin = 0.0;
  double psi = 1.0;

  void validate() const;
};

/// sum_S L^S + sum_D L^D over D(u_i, u_j), plus psi * sum_i ||u_i - b_i||^2.
double pair_objective(const RealMatrix& u, const BinaryCodeMatrix& b, const PairSets& pairs,
                      const MarginParams& params);

/// Gradient of pair_objective with respect to U.
RealMatrix pair_gradient(const RealMatrix& u, const BinaryCodeMatrix& b, const PairSets& pairs,
                         const MarginParams& params);

/// Only the pair sums (no quantization term), and only their gradient.
double pair_loss_sum(const RealMatrix& u, const PairSets& pairs, double margin);
RealMatrix pair_loss_gradient(const RealMatrix& u, const PairSets& pairs, double margin);

}  // namespace fisherhash
