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

// Joint training. The objective over the training set is
//
//   phi * (sum_S L^S + sum_D L^D)(U) + mu * sum_i ||b_i - C y_i||^2
//     + nu * ||C^T C - A||_F^2 + sum_i ||b_i - u_i||^2
//
// and every epoch alternates
//   1. a pass of minibatch SGD on the encoder against the continuous part
//      (pair losses + quantization toward the current B), then
//   2. a discrete phase on the whole training set that refits (B, C) for
//      the new representations.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fisherhash/binary_codes.hpp"
#include "fisherhash/center_learning.hpp"
#include "fisherhash/data_io.hpp"
#include "fisherhash/encoder.hpp"
#include "fisherhash/pairwise_loss.hpp"
#include "fisherhash/retrieval.hpp"

namespace fisherhash {

struct AblationFlags {
  bool use_pair = true;
  bool use_intra = true;
  bool use_inter = true;
  bool use_margin = true;
};

struct HyperParams {
  double phi = 1.0;
  double mu = 1.0;
  double nu = 0.1;
  double eta = 0.5;
  double margin = 1.0;
  std::size_t bits = 12;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double lr = 0.01;
  double weight_decay = 0.0;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  double center_lr = 1e-2;
  int center_steps = 20;
  int center_rounds = 3;
  bool reinit_centers = false;
  AblationFlags ablation;

  double effective_phi() const { return ablation.use_pair ? phi : 0.0; }
  double effective_mu() const { return ablation.use_intra ? mu : 0.0; }
  double effective_nu() const { return ablation.use_inter ? nu : 0.0; }
  double effective_margin() const { return ablation.use_margin ? margin : 0.0; }
  CenterHyper center_hyper() const;

  void validate() const;
};

struct ObjectiveBreakdown {
  double pair = 0.0;   // unweighted pair-loss sum
  double intra = 0.0;  // unweighted
  double inter = 0.0;  // unweighted
  double quant = 0.0;
  double total = 0.0;  // weighted by the effective phi, mu, nu
};

/// Objective over explicit pair sets.
ObjectiveBreakdown joint_objective(const RealMatrix& reps, const BinaryCodeMatrix& codes,
                                   const BinaryCodeMatrix& centers, const LabelMatrix& labels,
                                   const PairSets& pairs, const HyperParams& hp);

/// Pair-loss sum over all unordered pairs of `label_sets` without
/// materializing them; same value as pair_loss_sum(pairs_from_labels(...)).
double all_pairs_loss(const RealMatrix& reps, const std::vector<std::vector<int>>& label_sets,
                      double margin, int threads = 1);

/// joint_objective over every pair of the training set.
ObjectiveBreakdown training_objective(const RealMatrix& reps, const BinaryCodeMatrix& codes,
                                      const BinaryCodeMatrix& centers, const LabelMatrix& labels,
                                      const HyperParams& hp, int threads = 1);

struct BatchLoss {
  double loss = 0.0;
  RealMatrix grad;  // dLoss/dU
};

/// Minibatch continuous objective
///   phi/P * (pair sums) + 1/n * sum_i ||u_i - b_i||^2
/// with P the number of pairs in the batch and n its size.
BatchLoss continuous_batch_loss(const RealMatrix& reps, const BinaryCodeMatrix& codes,
                                const PairSets& pairs, const HyperParams& hp);

struct EpochRecord {
  std::size_t epoch = 0;
  ObjectiveBreakdown objective;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::vector<double> epoch_seconds;  // wall time, kept out of serialized reports
};

struct TrainResult {
  EncoderState encoder;
  BinaryCodeMatrix codes;    // B over the train split
  RealMatrix relaxed;        // V
  BinaryCodeMatrix centers;  // C
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains on `data.train`. `encoder.input_dim` / `output_dim` are overwritten
/// from the data and hp.bits. Deterministic for a fixed hp.seed whatever the
/// thread count. Throws NumericalError naming the epoch/batch on divergence.
TrainResult train(const Dataset& data, const HyperParams& hp, EncoderSpec encoder,
                  int threads = 1, const EpochCallback& on_epoch = {});

/// Codes of the given items under a trained encoder.
BinaryCodeMatrix encode_codes(const EncoderState& encoder, const RealMatrix& features,
                              int threads = 1);

struct RetrievalSummary {
  double train_map = 0.0;  // train split against itself
  double query_map = 0.0;  // query split against the database split
  bool has_queries = false;
};

/// MAP over the full ranking (k = database size).
RetrievalSummary evaluate_retrieval(const EncoderState& encoder, const Dataset& data,
                                    int threads = 1);

struct CurveRow {
  double dissim = 0.0;
  double margin = 0.0;
  double similar = 0.0;
  double dissimilar = 0.0;
};

/// L^S and L^D on the grid D = j * d_max / steps_per_side,
/// j = -steps_per_side..steps_per_side, for every margin.
std::vector<CurveRow> emit_loss_curves(std::span<const double> margins, double d_max,
                                       std::size_t steps_per_side);
std::string loss_curves_csv(const std::vector<CurveRow>& rows);

}  // namespace fisherhash
