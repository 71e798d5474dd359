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

#include "fisherhash/center_learning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fisherhash/binary_io.hpp"
#include "fisherhash/error.hpp"
#include "fisherhash/parallel.hpp"

namespace fisherhash {

namespace {

constexpr char kRelaxedMagic[] = "FHCV";
constexpr std::uint32_t kRelaxedVersion = 1;

std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void check_codes_labels(const BinaryCodeMatrix& codes, const LabelMatrix& labels, const char* op) {
  if (codes.items() != labels.items()) {
    throw InvalidArgument(std::string(op) + ": " + std::to_string(codes.items()) +
                          " codes but " + std::to_string(labels.items()) + " label columns");
  }
}

void check_centers(std::size_t bits, std::size_t center_bits, std::size_t center_count,
                   const LabelMatrix& labels, const char* op) {
  if (center_bits != bits || center_count != labels.classes()) {
    throw InvalidArgument(std::string(op) + ": centers are " + std::to_string(center_bits) + "x" +
                          std::to_string(center_count) + ", expected " + std::to_string(bits) +
                          "x" + std::to_string(labels.classes()));
  }
}

}  // namespace

LabelMatrix LabelMatrix::from_label_sets(std::vector<std::vector<int>> label_sets,
                                         std::size_t num_classes) {
  if (num_classes == 0) throw DataError("label matrix needs at least one class");
  LabelMatrix out;
  out.y_ = RealMatrix::Zero(static_cast<Eigen::Index>(num_classes),
                            static_cast<Eigen::Index>(label_sets.size()));
  for (std::size_t i = 0; i < label_sets.size(); ++i) {
    auto& set = label_sets[i];
    if (set.empty()) throw DataError("item " + std::to_string(i) + " has no labels");
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    const double w = 1.0 / static_cast<double>(set.size());
    for (int c : set) {
      if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
        throw DataError("item " + std::to_string(i) + ": class id " + std::to_string(c) +
                        " outside [0, " + std::to_string(num_classes) + ")");
      }
      out.y_(c, static_cast<Eigen::Index>(i)) = w;
    }
  }
  out.label_sets_ = std::move(label_sets);
  return out;
}

LabelMatrix LabelMatrix::select(std::span<const std::size_t> indices) const {
  LabelMatrix out;
  out.y_.resize(y_.rows(), static_cast<Eigen::Index>(indices.size()));
  out.label_sets_.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= items()) throw InvalidArgument("LabelMatrix::select: index out of range");
    out.y_.col(static_cast<Eigen::Index>(r)) = y_.col(static_cast<Eigen::Index>(indices[r]));
    out.label_sets_.push_back(label_sets_[indices[r]]);
  }
  return out;
}

void CenterHyper::validate() const {
  if (!(mu >= 0.0) || !(nu >= 0.0) || !(eta >= 0.0)) {
    throw InvalidArgument("center weights mu, nu, eta must be >= 0");
  }
  if (!(inner_lr > 0.0) || !std::isfinite(inner_lr)) {
    throw InvalidArgument("center inner_lr must be > 0");
  }
  if (inner_steps < 1) throw InvalidArgument("center inner_steps must be >= 1");
}

RealMatrix target_matrix(std::size_t bits, std::size_t classes) {
  if (bits == 0 || classes == 0) throw InvalidArgument("target_matrix: K and M must be >= 1");
  const auto m = static_cast<Eigen::Index>(classes);
  const double k = static_cast<double>(bits);
  RealMatrix a = RealMatrix::Constant(m, m, -k);
  a.diagonal().setConstant(k);
  return a;
}

RealMatrix sign_matrix(const RealMatrix& v) {
  return v.unaryExpr([](double x) { return sign_of(x); });
}

double intra_loss(const BinaryCodeMatrix& codes, const BinaryCodeMatrix& centers,
                  const LabelMatrix& labels) {
  check_codes_labels(codes, labels, "intra_loss");
  check_centers(codes.bits(), centers.bits(), centers.items(), labels, "intra_loss");
  return (codes.to_real() - centers.to_real() * labels.matrix()).squaredNorm();
}

double inter_loss(const RealMatrix& centers, const RealMatrix& target) {
  if (target.rows() != centers.cols() || target.cols() != centers.cols()) {
    throw InvalidArgument("inter_loss: target is " + shape_str(target.rows(), target.cols()) +
                          " for " + std::to_string(centers.cols()) + " centers");
  }
  return (centers.transpose() * centers - target).squaredNorm();
}

double inter_loss(const BinaryCodeMatrix& centers, const RealMatrix& target) {
  return inter_loss(centers.to_real(), target);
}

double quant_loss(const BinaryCodeMatrix& codes, const RealMatrix& reps) {
  if (static_cast<std::size_t>(reps.rows()) != codes.bits() ||
      static_cast<std::size_t>(reps.cols()) != codes.items()) {
    throw InvalidArgument("quant_loss: U is " + shape_str(reps.rows(), reps.cols()) +
                          " but B is " + shape_str(codes.bits(), codes.items()));
  }
  return (codes.to_real() - reps).squaredNorm();
}

double relaxed_center_objective(const RealMatrix& v, const RealMatrix& frozen_sign,
                                const BinaryCodeMatrix& codes, const LabelMatrix& labels,
                                const RealMatrix& target, const CenterHyper& hyper) {
  check_codes_labels(codes, labels, "relaxed_center_objective");
  check_centers(codes.bits(), static_cast<std::size_t>(v.rows()),
                static_cast<std::size_t>(v.cols()), labels, "relaxed_center_objective");
  const double fit = (codes.to_real() - v * labels.matrix()).squaredNorm();
  const double spread = (v.transpose() * v - target).squaredNorm();
  const double binar = (frozen_sign - v).squaredNorm();
  return hyper.mu * fit + hyper.nu * spread + hyper.eta * binar;
}

RealMatrix center_gradient(const RealMatrix& v, const BinaryCodeMatrix& codes,
                           const LabelMatrix& labels, const RealMatrix& target,
                           const CenterHyper& hyper) {
  check_codes_labels(codes, labels, "center_gradient");
  check_centers(codes.bits(), static_cast<std::size_t>(v.rows()),
                static_cast<std::size_t>(v.cols()), labels, "center_gradient");
  const RealMatrix& y = labels.matrix();
  return 2.0 * hyper.mu * (v * y - codes.to_real()) * y.transpose() +
         4.0 * hyper.nu * v * (v.transpose() * v - target) +
         2.0 * hyper.eta * (v - sign_matrix(v));
}

CenterUpdate update_centers(const RealMatrix& v, const BinaryCodeMatrix& codes,
                            const LabelMatrix& labels, const RealMatrix& target,
                            const CenterHyper& hyper) {
  hyper.validate();
  check_codes_labels(codes, labels, "update_centers");
  check_centers(codes.bits(), static_cast<std::size_t>(v.rows()),
                static_cast<std::size_t>(v.cols()), labels, "update_centers");
  if (target.rows() != v.cols() || target.cols() != v.cols()) {
    throw InvalidArgument("update_centers: target matrix has wrong shape");
  }

  const RealMatrix& y = labels.matrix();
  const RealMatrix b = codes.to_real();
  const RealMatrix byt = b * y.transpose();
  const RealMatrix yyt = y * y.transpose();
  const double fit_scale = labels.items() > 0 ? 1.0 / static_cast<double>(labels.items()) : 0.0;
  const Eigen::VectorXd class_weight = y.rowwise().sum();

  RealMatrix cur = v;
  for (int step = 0; step < hyper.inner_steps; ++step) {
    // sgn(V) is held fixed within the step.
    const RealMatrix s = sign_matrix(cur);
    RealMatrix grad = (2.0 * hyper.mu * fit_scale) * (cur * yyt - byt) +
                      4.0 * hyper.nu * cur * (cur.transpose() * cur - target) +
                      2.0 * hyper.eta * (cur - s);
    for (Eigen::Index c = 0; c < cur.cols(); ++c) {
      if (class_weight(c) <= 0.0) grad.col(c).setZero();
    }
    cur -= hyper.inner_lr * grad;
    if (!cur.allFinite()) {
      throw NumericalError("update_centers: relaxed centers diverged at inner step " +
                           std::to_string(step));
    }
  }
  CenterUpdate out{cur, BinaryCodeMatrix::from_signs(cur)};
  return out;
}

BinaryCodeMatrix update_codes(const RealMatrix& reps, const BinaryCodeMatrix& centers,
                              const LabelMatrix& labels, double mu, int threads) {
  if (!(mu >= 0.0)) throw InvalidArgument("update_codes: mu must be >= 0");
  if (static_cast<std::size_t>(reps.cols()) != labels.items()) {
    throw InvalidArgument("update_codes: U has " + std::to_string(reps.cols()) +
                          " columns but Y has " + std::to_string(labels.items()));
  }
  check_centers(static_cast<std::size_t>(reps.rows()), centers.bits(), centers.items(), labels,
                "update_codes");

  const RealMatrix c = centers.to_real();
  const RealMatrix& y = labels.matrix();
  BinaryCodeMatrix out(static_cast<std::size_t>(reps.rows()), static_cast<std::size_t>(reps.cols()));
  parallel_for_chunks(labels.items(), 512, threads, [&](std::size_t begin, std::size_t end) {
    const auto n = static_cast<Eigen::Index>(end - begin);
    const auto first = static_cast<Eigen::Index>(begin);
    const RealMatrix f = mu * c * y.middleCols(first, n) + reps.middleCols(first, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto packed = pack(std::span<const double>(f.col(i).data(), out.bits()));
      out.set_column(begin + static_cast<std::size_t>(i), packed);
    }
  });
  return out;
}

double code_objective(const BinaryCodeMatrix& codes, const RealMatrix& reps,
                      const BinaryCodeMatrix& centers, const LabelMatrix& labels, double mu) {
  return mu * intra_loss(codes, centers, labels) + quant_loss(codes, reps);
}

RealMatrix init_centers(const RealMatrix& reps, const LabelMatrix& labels) {
  if (static_cast<std::size_t>(reps.cols()) != labels.items()) {
    throw InvalidArgument("init_centers: U and Y disagree on the number of items");
  }
  const RealMatrix& y = labels.matrix();
  const Eigen::VectorXd weight = y.rowwise().sum();
  for (Eigen::Index c = 0; c < weight.size(); ++c) {
    if (weight(c) <= 0.0) {
      throw DataError("init_centers: class " + std::to_string(c) + " has no items");
    }
  }
  RealMatrix v = reps * y.transpose();
  for (Eigen::Index c = 0; c < v.cols(); ++c) v.col(c) /= weight(c);
  return v;
}

DiscreteState alternate_codes_and_centers(const RealMatrix& reps, const LabelMatrix& labels,
                                          std::optional<RealMatrix> relaxed,
                                          const CenterHyper& hyper, int rounds, int threads) {
  if (rounds < 1) throw InvalidArgument("center rounds must be >= 1");
  const std::size_t bits = static_cast<std::size_t>(reps.rows());
  const RealMatrix target = target_matrix(bits, labels.classes());

  DiscreteState state;
  state.codes = BinaryCodeMatrix::from_signs(reps);
  state.relaxed = relaxed ? std::move(*relaxed) : init_centers(reps, labels);
  state.centers = BinaryCodeMatrix::from_signs(state.relaxed);
  for (int r = 0; r < rounds; ++r) {
    auto upd = update_centers(state.relaxed, state.codes, labels, target, hyper);
    state.relaxed = std::move(upd.relaxed);
    state.centers = std::move(upd.centers);
    state.codes = update_codes(reps, state.centers, labels, hyper.mu, threads);
  }
  return state;
}

void save_relaxed_centers(const RealMatrix& v, const std::filesystem::path& path) {
  io::ByteWriter w;
  w.magic(kRelaxedMagic);
  w.u32(kRelaxedVersion);
  w.u32(static_cast<std::uint32_t>(v.rows()));
  w.u32(static_cast<std::uint32_t>(v.cols()));
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    for (Eigen::Index r = 0; r < v.rows(); ++r) w.f64(v(r, c));
  }
  w.save(path);
}

RealMatrix load_relaxed_centers(const std::filesystem::path& path) {
  auto r = io::ByteReader::open(path);
  r.expect_magic(kRelaxedMagic);
  if (const auto version = r.u32(); version != kRelaxedVersion) {
    throw DataError(path.string() + ": unsupported sidecar version " + std::to_string(version));
  }
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  r.expect_remaining(std::size_t{rows} * cols * 8, "relaxed-center payload");
  RealMatrix v(rows, cols);
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    for (Eigen::Index k = 0; k < v.rows(); ++k) v(k, c) = r.f64();
  }
  if (!v.allFinite()) throw DataError(path.string() + ": non-finite relaxed centers");
  return v;
}

}  // namespace fisherhash
