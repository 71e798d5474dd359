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

#include "fisherhash/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "fisherhash/error.hpp"
#include "fisherhash/parallel.hpp"

namespace fisherhash {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RealMatrix select_cols(const RealMatrix& m, std::span<const std::size_t> idx) {
  RealMatrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.col(static_cast<Eigen::Index>(r)) = m.col(static_cast<Eigen::Index>(idx[r]));
  }
  return out;
}

ObjectiveBreakdown combine(double pair, const BinaryCodeMatrix& codes,
                           const BinaryCodeMatrix& centers, const LabelMatrix& labels,
                           const RealMatrix& reps, const HyperParams& hp) {
  ObjectiveBreakdown o;
  o.pair = pair;
  o.intra = intra_loss(codes, centers, labels);
  o.inter = inter_loss(centers, target_matrix(codes.bits(), labels.classes()));
  o.quant = quant_loss(codes, reps);
  o.total = hp.effective_phi() * o.pair + hp.effective_mu() * o.intra +
            hp.effective_nu() * o.inter + o.quant;
  return o;
}

void check_finite(const ObjectiveBreakdown& o, const std::string& where) {
  if (!std::isfinite(o.pair) || !std::isfinite(o.intra) || !std::isfinite(o.inter) ||
      !std::isfinite(o.quant) || !std::isfinite(o.total)) {
    throw NumericalError("non-finite objective " + where);
  }
}

}  // namespace

CenterHyper HyperParams::center_hyper() const {
  CenterHyper h;
  h.mu = effective_mu();
  h.nu = effective_nu();
  h.eta = eta;
  h.inner_lr = center_lr;
  h.inner_steps = center_steps;
  return h;
}

void HyperParams::validate() const {
  for (double w : {phi, mu, nu, eta, margin}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("phi, mu, nu, eta and margin must be finite and >= 0");
    }
  }
  if (bits == 0) throw InvalidArgument("bits must be >= 1");
  if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  if (ablation.use_pair && batch_size < 2) {
    throw InvalidArgument("batch_size must be >= 2 when the pair loss is enabled");
  }
  if (!(lr > 0.0)) throw InvalidArgument("lr must be > 0");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
  if (!(momentum >= 0.0) || momentum >= 1.0) throw InvalidArgument("momentum must be in [0, 1)");
  if (center_rounds < 1) throw InvalidArgument("center rounds must be >= 1");
  center_hyper().validate();
}

ObjectiveBreakdown joint_objective(const RealMatrix& reps, const BinaryCodeMatrix& codes,
                                   const BinaryCodeMatrix& centers, const LabelMatrix& labels,
                                   const PairSets& pairs, const HyperParams& hp) {
  if (static_cast<std::size_t>(reps.rows()) != codes.bits() ||
      static_cast<std::size_t>(reps.cols()) != codes.items()) {
    throw InvalidArgument("joint_objective: U and B shapes differ");
  }
  pairs.validate(codes.items());
  return combine(pair_loss_sum(reps, pairs, hp.effective_margin()), codes, centers, labels, reps,
                 hp);
}

double all_pairs_loss(const RealMatrix& reps, const std::vector<std::vector<int>>& label_sets,
                      double margin, int threads) {
  const std::size_t n = label_sets.size();
  if (static_cast<std::size_t>(reps.cols()) != n) {
    throw InvalidArgument("all_pairs_loss: U and label table disagree on N");
  }
  std::vector<double> row(n, 0.0);
  parallel_for_chunks(n, 32, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double s = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = dissimilarity(reps.col(static_cast<Eigen::Index>(i)),
                                       reps.col(static_cast<Eigen::Index>(j)));
        s += shares_label(label_sets[i], label_sets[j]) ? loss_similar(d, margin)
                                                        : loss_dissimilar(d, margin);
      }
      row[i] = s;
    }
  });
  double total = 0.0;
  for (double s : row) total += s;
  return total;
}

ObjectiveBreakdown training_objective(const RealMatrix& reps, const BinaryCodeMatrix& codes,
                                      const BinaryCodeMatrix& centers, const LabelMatrix& labels,
                                      const HyperParams& hp, int threads) {
  const double pair = all_pairs_loss(reps, labels.label_sets(), hp.effective_margin(), threads);
  return combine(pair, codes, centers, labels, reps, hp);
}

BatchLoss continuous_batch_loss(const RealMatrix& reps, const BinaryCodeMatrix& codes,
                                const PairSets& pairs, const HyperParams& hp) {
  if (static_cast<std::size_t>(reps.rows()) != codes.bits() ||
      static_cast<std::size_t>(reps.cols()) != codes.items()) {
    throw InvalidArgument("continuous_batch_loss: U and B shapes differ");
  }
  const double n = static_cast<double>(reps.cols());
  const RealMatrix diff = reps - codes.to_real();
  BatchLoss out;
  out.loss = diff.squaredNorm() / n;
  out.grad = (2.0 / n) * diff;
  const double phi = hp.effective_phi();
  if (phi > 0.0 && pairs.size() > 0) {
    const double w = phi / static_cast<double>(pairs.size());
    out.loss += w * pair_loss_sum(reps, pairs, hp.effective_margin());
    out.grad += w * pair_loss_gradient(reps, pairs, hp.effective_margin());
  }
  return out;
}

TrainResult train(const Dataset& data, const HyperParams& hp, EncoderSpec encoder, int threads,
                  const EpochCallback& on_epoch) {
  hp.validate();
  if (data.train.empty()) throw DataError("train: empty training split");
  encoder.input_dim = static_cast<std::size_t>(data.features.rows());
  encoder.output_dim = hp.bits;
  encoder.seed = splitmix64(hp.seed);

  const RealMatrix x = data.features_of(data.train);
  const LabelMatrix labels = data.labels.select(data.train);
  const std::size_t n = data.train.size();
  const CenterHyper center = hp.center_hyper();

  TrainResult res;
  res.encoder = init_encoder(encoder);
  SgdOptimizer opt(hp.lr, hp.weight_decay, hp.momentum);
  std::mt19937_64 rng(splitmix64(hp.seed + 1));

  RealMatrix reps = encode(res.encoder, x, threads);
  res.codes = BinaryCodeMatrix::from_signs(reps);
  std::optional<RealMatrix> relaxed;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<int>> batch_labels;

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);

    // Continuous phase: B fixed, SGD on the encoder.
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += hp.batch_size, ++batch_no) {
      const std::size_t stop = std::min(n, start + hp.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const RealMatrix xb = select_cols(x, idx);
      const BinaryCodeMatrix bb = res.codes.select(idx);
      const std::string where =
          "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_no);
      PairSets pairs;
      if (hp.effective_phi() > 0.0) {
        batch_labels.clear();
        for (std::size_t i : idx) batch_labels.push_back(labels.labels_of(i));
        pairs = pairs_from_labels(batch_labels);
      }
      try {
        auto fwd = forward(res.encoder, xb);
        const BatchLoss bl = continuous_batch_loss(fwd.output, bb, pairs, hp);
        if (!std::isfinite(bl.loss) || !bl.grad.allFinite()) {
          throw NumericalError("non-finite batch loss");
        }
        opt.step(res.encoder, backward(res.encoder, fwd.cache, bl.grad));
      } catch (const NumericalError& e) {
        throw NumericalError("training diverged at " + where + ": " + e.what());
      }
    }

    // Discrete phase: U fixed, refit (B, C).
    try {
      reps = encode(res.encoder, x, threads);
    } catch (const NumericalError&) {
      throw NumericalError("encoder output non-finite after epoch " + std::to_string(epoch));
    }
    std::optional<RealMatrix> seed_v = hp.reinit_centers ? std::nullopt : relaxed;
    DiscreteState ds;
    try {
      ds = alternate_codes_and_centers(reps, labels, std::move(seed_v), center, hp.center_rounds,
                                       threads);
    } catch (const NumericalError& e) {
      throw NumericalError("center learning diverged at epoch " + std::to_string(epoch) + ": " +
                           e.what());
    }
    res.codes = std::move(ds.codes);
    res.centers = std::move(ds.centers);
    relaxed = ds.relaxed;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.objective = training_objective(reps, res.codes, res.centers, labels, hp, threads);
    check_finite(rec.objective, "at epoch " + std::to_string(epoch));
    res.report.epochs.push_back(rec);
    res.report.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (on_epoch) on_epoch(rec);
  }

  if (!relaxed) relaxed = init_centers(reps, labels);
  res.relaxed = std::move(*relaxed);
  if (hp.epochs == 0) res.centers = BinaryCodeMatrix::from_signs(res.relaxed);
  return res;
}

BinaryCodeMatrix encode_codes(const EncoderState& encoder, const RealMatrix& features, int threads) {
  return BinaryCodeMatrix::from_signs(encode(encoder, features, threads));
}

RetrievalSummary evaluate_retrieval(const EncoderState& encoder, const Dataset& data, int threads) {
  auto labels_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::vector<int>> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(data.labels.labels_of(i));
    return out;
  };
  RetrievalSummary s;
  const auto train_codes = encode_codes(encoder, data.features_of(data.train), threads);
  const auto train_labels = labels_of(data.train);
  MetricsOptions opts;
  opts.ks = {data.train.size()};
  opts.rank_curve_max = 1;
  opts.threads = threads;
  s.train_map = metrics_report(train_codes, train_codes, train_labels, train_labels, opts).map[0].map;
  if (!data.query.empty() && !data.database.empty()) {
    const auto q = encode_codes(encoder, data.features_of(data.query), threads);
    const auto db = encode_codes(encoder, data.features_of(data.database), threads);
    opts.ks = {data.database.size()};
    s.query_map =
        metrics_report(q, db, labels_of(data.query), labels_of(data.database), opts).map[0].map;
    s.has_queries = true;
  }
  return s;
}

std::vector<CurveRow> emit_loss_curves(std::span<const double> margins, double d_max,
                                       std::size_t steps_per_side) {
  if (steps_per_side == 0 || !(d_max > 0.0)) {
    throw InvalidArgument("loss curves need d_max > 0 and at least one step per side");
  }
  const double h = d_max / static_cast<double>(steps_per_side);
  const auto s = static_cast<long long>(steps_per_side);
  std::vector<CurveRow> rows;
  for (double m : margins) {
    if (!(m >= 0.0)) throw InvalidArgument("loss curves: margins must be >= 0");
    for (long long j = -s; j <= s; ++j) {
      const double d = static_cast<double>(j) * h;
      rows.push_back({d, m, loss_similar(d, m), loss_dissimilar(d, m)});
    }
  }
  return rows;
}

std::string loss_curves_csv(const std::vector<CurveRow>& rows) {
  std::ostringstream out;
  out << "D,m,loss_similar,loss_dissimilar\n";
  for (const auto& r : rows) {
    out << format_real(r.dissim) << ',' << format_real(r.margin) << ',' << format_real(r.similar)
        << ',' << format_real(r.dissimilar) << '\n';
  }
  return out.str();
}

}  // namespace fisherhash
