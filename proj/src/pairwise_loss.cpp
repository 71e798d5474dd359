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

#include "fisherhash/pairwise_loss.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "fisherhash/error.hpp"

namespace fisherhash {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericalError(std::string(what) + ": non-finite input");
}

void check_shapes(const RealMatrix& u, const BinaryCodeMatrix& b, const PairSets& pairs,
                  const MarginParams& params) {
  if (static_cast<std::size_t>(u.rows()) != b.bits() ||
      static_cast<std::size_t>(u.cols()) != b.items()) {
    throw InvalidArgument("pairwise loss: U is " + std::to_string(u.rows()) + "x" +
                          std::to_string(u.cols()) + " but B is " + std::to_string(b.bits()) +
                          "x" + std::to_string(b.items()));
  }
  pairs.validate(b.items());
  params.validate();
}

}  // namespace

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double loss_similar(double dissim, double margin) {
  require_finite(dissim, "loss_similar");
  require_finite(margin, "loss_similar");
  return softplus(dissim + margin);
}

double loss_dissimilar(double dissim, double margin) {
  require_finite(dissim, "loss_dissimilar");
  require_finite(margin, "loss_dissimilar");
  return softplus(-dissim + margin);
}

void PairSets::validate(std::size_t n) const {
  std::set<IndexPair> seen;
  auto check = [&](const IndexPair& p, const char* set_name) {
    if (p.first >= n || p.second >= n) {
      throw InvalidArgument(std::string(set_name) + " pair (" + std::to_string(p.first) + "," +
                            std::to_string(p.second) + ") out of range for N=" +
                            std::to_string(n));
    }
    if (p.first >= p.second) {
      throw InvalidArgument(std::string(set_name) + " pair (" + std::to_string(p.first) + "," +
                            std::to_string(p.second) + ") must satisfy i < j");
    }
    if (!seen.insert(p).second) {
      throw InvalidArgument("pair (" + std::to_string(p.first) + "," + std::to_string(p.second) +
                            ") listed twice");
    }
  };
  for (const auto& p : similar) check(p, "similar");
  for (const auto& p : dissimilar) check(p, "dissimilar");
}

PairSets pairs_from_labels(std::span<const std::vector<int>> label_sets) {
  PairSets pairs;
  const std::size_t n = label_sets.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      bool shared = false;
      for (int a : label_sets[i]) {
        if (std::find(label_sets[j].begin(), label_sets[j].end(), a) != label_sets[j].end()) {
          shared = true;
          break;
        }
      }
      (shared ? pairs.similar : pairs.dissimilar).emplace_back(i, j);
    }
  }
  return pairs;
}

void MarginParams::validate() const {
  if (!(margin >= 0.0) || !std::isfinite(margin)) {
    throw InvalidArgument("margin must be a finite value >= 0");
  }
  if (!(psi >= 0.0) || !std::isfinite(psi)) throw InvalidArgument("psi must be a finite value >= 0");
}

double pair_loss_sum(const RealMatrix& u, const PairSets& pairs, double margin) {
  double total = 0.0;
  for (const auto& [i, j] : pairs.similar) {
    total += loss_similar(dissimilarity(u.col(i), u.col(j)), margin);
  }
  for (const auto& [i, j] : pairs.dissimilar) {
    total += loss_dissimilar(dissimilarity(u.col(i), u.col(j)), margin);
  }
  return total;
}

RealMatrix pair_loss_gradient(const RealMatrix& u, const PairSets& pairs, double margin) {
  RealMatrix grad = RealMatrix::Zero(u.rows(), u.cols());
  // dD/du_i = -u_j / 2, so each pair scales the partner column.
  for (const auto& [i, j] : pairs.similar) {
    const double d = dissimilarity(u.col(i), u.col(j));
    const double w = -0.5 * logistic(d + margin);
    grad.col(i) += w * u.col(j);
    grad.col(j) += w * u.col(i);
  }
  for (const auto& [i, j] : pairs.dissimilar) {
    const double d = dissimilarity(u.col(i), u.col(j));
    const double w = 0.5 * logistic(-d + margin);
    grad.col(i) += w * u.col(j);
    grad.col(j) += w * u.col(i);
  }
  return grad;
}

double pair_objective(const RealMatrix& u, const BinaryCodeMatrix& b, const PairSets& pairs,
                      const MarginParams& params) {
  check_shapes(u, b, pairs, params);
  const double quant = (b.to_real() - u).squaredNorm();
  return pair_loss_sum(u, pairs, params.margin) + params.psi * quant;
}

RealMatrix pair_gradient(const RealMatrix& u, const BinaryCodeMatrix& b, const PairSets& pairs,
                         const MarginParams& params) {
  check_shapes(u, b, pairs, params);
  RealMatrix grad = pair_loss_gradient(u, pairs, params.margin);
  grad += 2.0 * params.psi * (u - b.to_real());
  return grad;
}

}  // namespace fisherhash
