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

#include "fisherhash/encoder.hpp"

#include <cmath>
#include <random>

#include "fisherhash/binary_io.hpp"
#include "fisherhash/error.hpp"
#include "fisherhash/parallel.hpp"

namespace fisherhash {

namespace {

constexpr char kCheckpointMagic[] = "FHNN";
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::size_t kEncodeChunk = 256;

RealMatrix activate(Activation act, const RealMatrix& z) {
  switch (act) {
    case Activation::kIdentity:
      return z;
    case Activation::kRelu:
      return z.cwiseMax(0.0);
    case Activation::kTanh:
      return z.array().tanh().matrix();
  }
  return z;
}

// d act(z) / dz, as a function of the pre-activation.
RealMatrix activation_slope(Activation act, const RealMatrix& z) {
  switch (act) {
    case Activation::kIdentity:
      return RealMatrix::Ones(z.rows(), z.cols());
    case Activation::kRelu:
      return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::kTanh:
      return (1.0 - z.array().tanh().square()).matrix();
  }
  return RealMatrix::Ones(z.rows(), z.cols());
}

void check_input(const EncoderState& state, const RealMatrix& x) {
  if (state.layers.empty()) throw InvalidArgument("encoder has no layers");
  if (static_cast<std::size_t>(x.rows()) != state.input_dim()) {
    throw InvalidArgument("encoder input has " + std::to_string(x.rows()) +
                          " rows, expected " + std::to_string(state.input_dim()));
  }
  if (!x.allFinite()) throw NumericalError("encoder input contains non-finite values");
}

bool grads_finite(const EncoderGradients& grads) {
  for (const auto& g : grads.layers) {
    if (!g.weight.allFinite() || !g.bias.allFinite()) return false;
  }
  return true;
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  throw InvalidArgument("unknown activation \"" + name + "\"");
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
  }
  return "identity";
}

void EncoderSpec::validate() const {
  if (input_dim == 0) throw InvalidArgument("encoder input_dim must be >= 1");
  if (output_dim == 0) throw InvalidArgument("encoder output_dim (bits) must be >= 1");
  for (const auto& h : hidden) {
    if (h.width == 0) throw InvalidArgument("encoder hidden width must be >= 1");
  }
}

std::size_t EncoderState::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += (l.in_dim() + 1) * l.out_dim();
  return n;
}

EncoderState init_encoder(const EncoderSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  EncoderState state;
  std::size_t in = spec.input_dim;
  auto add_layer = [&](std::size_t out, Activation act) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer;
    layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
    }
    layer.bias = RealVector::Zero(static_cast<Eigen::Index>(out));
    layer.activation = act;
    state.layers.push_back(std::move(layer));
    in = out;
  };
  for (const auto& h : spec.hidden) add_layer(h.width, h.activation);
  add_layer(spec.output_dim, Activation::kIdentity);
  return state;
}

ForwardResult forward(const EncoderState& state, const RealMatrix& x) {
  check_input(state, x);
  ForwardResult res;
  RealMatrix a = x;
  for (const auto& layer : state.layers) {
    RealMatrix z = layer.weight * a;
    z.colwise() += layer.bias;
    res.cache.inputs.push_back(std::move(a));
    a = activate(layer.activation, z);
    res.cache.pre.push_back(std::move(z));
  }
  res.output = std::move(a);
  return res;
}

RealMatrix encode(const EncoderState& state, const RealMatrix& x, int threads) {
  check_input(state, x);
  RealMatrix out(static_cast<Eigen::Index>(state.output_dim()), x.cols());
  parallel_for_chunks(static_cast<std::size_t>(x.cols()), kEncodeChunk, threads,
                      [&](std::size_t begin, std::size_t end) {
                        const auto first = static_cast<Eigen::Index>(begin);
                        const auto n = static_cast<Eigen::Index>(end - begin);
                        RealMatrix a = x.middleCols(first, n);
                        for (const auto& layer : state.layers) {
                          RealMatrix z = layer.weight * a;
                          z.colwise() += layer.bias;
                          a = activate(layer.activation, z);
                        }
                        out.middleCols(first, n) = a;
                      });
  return out;
}

EncoderGradients backward(const EncoderState& state, const ForwardCache& cache,
                          const RealMatrix& grad_output, bool want_input_grad) {
  const std::size_t depth = state.layers.size();
  if (cache.inputs.size() != depth || cache.pre.size() != depth) {
    throw InvalidArgument("backward: cache does not match encoder depth");
  }
  if (static_cast<std::size_t>(grad_output.rows()) != state.output_dim() ||
      grad_output.cols() != cache.pre.back().cols()) {
    throw InvalidArgument("backward: upstream gradient shape does not match forward output");
  }

  EncoderGradients grads;
  grads.layers.resize(depth);
  RealMatrix delta = grad_output;
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = state.layers[l];
    // delta <- dL/dz for this layer.
    if (layer.activation != Activation::kIdentity) {
      delta = delta.cwiseProduct(activation_slope(layer.activation, cache.pre[l]));
    }
    grads.layers[l].weight = delta * cache.inputs[l].transpose();
    grads.layers[l].bias = delta.rowwise().sum();
    if (l > 0 || want_input_grad) delta = layer.weight.transpose() * delta;
  }
  if (want_input_grad) grads.input = std::move(delta);
  return grads;
}

void sgd_step(EncoderState& state, const EncoderGradients& grads, double lr, double weight_decay) {
  SgdOptimizer(lr, weight_decay, 0.0).step(state, grads);
}

SgdOptimizer::SgdOptimizer(double lr, double weight_decay, double momentum)
    : lr_(lr), weight_decay_(weight_decay), momentum_(momentum) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidArgument("learning rate must be > 0");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
  if (!(momentum >= 0.0) || momentum >= 1.0) throw InvalidArgument("momentum must be in [0, 1)");
}

void SgdOptimizer::step(EncoderState& state, const EncoderGradients& grads) {
  if (grads.layers.size() != state.layers.size()) {
    throw InvalidArgument("sgd_step: gradient layer count mismatch");
  }
  if (!grads_finite(grads)) throw NumericalError("sgd_step: refusing non-finite gradients");
  if (momentum_ > 0.0 && velocity_.empty()) {
    for (const auto& l : state.layers) {
      velocity_.push_back({RealMatrix::Zero(l.weight.rows(), l.weight.cols()),
                           RealVector::Zero(l.bias.size())});
    }
  }
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    auto& layer = state.layers[l];
    const auto& g = grads.layers[l];
    if (g.weight.rows() != layer.weight.rows() || g.weight.cols() != layer.weight.cols() ||
        g.bias.size() != layer.bias.size()) {
      throw InvalidArgument("sgd_step: gradient shape mismatch at layer " + std::to_string(l));
    }
    RealMatrix dw = g.weight + weight_decay_ * layer.weight;
    RealVector db = g.bias + weight_decay_ * layer.bias;
    if (momentum_ > 0.0) {
      velocity_[l].weight = momentum_ * velocity_[l].weight + dw;
      velocity_[l].bias = momentum_ * velocity_[l].bias + db;
      layer.weight -= lr_ * velocity_[l].weight;
      layer.bias -= lr_ * velocity_[l].bias;
    } else {
      layer.weight -= lr_ * dw;
      layer.bias -= lr_ * db;
    }
  }
}

void save_checkpoint(const EncoderState& state, const std::filesystem::path& path) {
  if (state.layers.empty()) throw InvalidArgument("save_checkpoint: empty encoder");
  io::ByteWriter w;
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(state.layers.size()));
  w.u32(static_cast<std::uint32_t>(state.input_dim()));
  for (const auto& l : state.layers) {
    w.u32(static_cast<std::uint32_t>(l.out_dim()));
    w.u32(static_cast<std::uint32_t>(l.activation));
  }
  for (const auto& l : state.layers) {
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) w.f64(l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f64(l.bias(r));
  }
  w.save(path);
}

EncoderState load_checkpoint(const std::filesystem::path& path) {
  auto r = io::ByteReader::open(path);
  r.expect_magic(kCheckpointMagic);
  if (const auto version = r.u32(); version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t depth = r.u32();
  std::uint32_t in = r.u32();
  if (depth == 0 || in == 0) throw DataError(path.string() + ": empty encoder description");
  EncoderState state;
  std::size_t params = 0;
  for (std::uint32_t l = 0; l < depth; ++l) {
    const std::uint32_t out = r.u32();
    const std::uint32_t act = r.u32();
    if (out == 0 || act > 2) throw DataError(path.string() + ": bad layer header");
    DenseLayer layer;
    layer.weight.resize(out, in);
    layer.bias.resize(out);
    layer.activation = static_cast<Activation>(act);
    params += (std::size_t{in} + 1) * out;
    state.layers.push_back(std::move(layer));
    in = out;
  }
  r.expect_remaining(params * 8, "checkpoint parameters");
  for (auto& l : state.layers) {
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
      for (Eigen::Index k = 0; k < l.weight.rows(); ++k) l.weight(k, c) = r.f64();
    }
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) l.bias(k) = r.f64();
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw DataError(path.string() + ": non-finite parameters");
    }
  }
  return state;
}

}  // namespace fisherhash
