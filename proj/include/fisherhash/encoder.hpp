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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fisherhash/binary_codes.hpp"

namespace fisherhash {

enum class Activation : std::uint32_t { kIdentity = 0, kRelu = 1, kTanh = 2 };

Activation parse_activation(const std::string& name);
std::string to_string(Activation act);

struct HiddenLayer {
  std::size_t width = 0;
  Activation activation = Activation::kRelu;
};

/// Feature vector -> K-dimensional representation. The output layer is
/// always affine with identity activation.
struct EncoderSpec {
  std::size_t input_dim = 0;
  std::vector<HiddenLayer> hidden;
  std::size_t output_dim = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DenseLayer {
  RealMatrix weight;  // out x in
  RealVector bias;    // out
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }
};

struct EncoderState {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.back().out_dim(); }
  /// sum over layers of (in + 1) * out.
  std::size_t parameter_count() const;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0.
EncoderState init_encoder(const EncoderSpec& spec);

struct ForwardCache {
  std::vector<RealMatrix> inputs;  // input of every layer
  std::vector<RealMatrix> pre;     // pre-activation of every layer
};

struct ForwardResult {
  RealMatrix output;
  ForwardCache cache;
};

/// X is input_dim x n; returns K x n.
ForwardResult forward(const EncoderState& state, const RealMatrix& x);
/// Output only, evaluated in fixed-size column chunks on `threads` workers.
RealMatrix encode(const EncoderState& state, const RealMatrix& x, int threads = 1);

struct LayerGradient {
  RealMatrix weight;
  RealVector bias;
};

struct EncoderGradients {
  std::vector<LayerGradient> layers;
  std::optional<RealMatrix> input;  // dL/dX when requested
};

EncoderGradients backward(const EncoderState& state, const ForwardCache& cache,
                          const RealMatrix& grad_output, bool want_input_grad = false);

/// state <- state - lr * (grads + weight_decay * state).
void sgd_step(EncoderState& state, const EncoderGradients& grads, double lr, double weight_decay);

/// Plain SGD with optional classical momentum (momentum = 0 is sgd_step).
class SgdOptimizer {
 public:
  SgdOptimizer(double lr, double weight_decay, double momentum);

  void step(EncoderState& state, const EncoderGradients& grads);

 private:
  double lr_;
  double weight_decay_;
  double momentum_;
  std::vector<LayerGradient> velocity_;
};

/// Checkpoint: "FHNN", version, layer count, input dim, then per layer
/// (out dim, activation), then every layer's weight (column-major) and bias
/// as little-endian f64.
void save_checkpoint(const EncoderState& state, const std::filesystem::path& path);
EncoderState load_checkpoint(const std::filesystem::path& path);

}  // namespace fisherhash
