// Copyright 2026 The CEM Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small dense feed-forward networks with an explicit forward tape and
// reverse-mode backward pass. Batches are row-major: one sample per row.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cem/noise.hpp"
#include "json.hpp"

namespace cem {

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid, kSoftmax };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::kIdentity;
  // Momentum buffers, same shapes as the parameters.
  Eigen::MatrixXd weight_velocity;
  Eigen::VectorXd bias_velocity;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
};

struct NeuralModule {
  std::vector<DenseLayer> layers;
  // Bumped on every parameter update; tapes remember the value they saw.
  std::uint64_t version = 0;

  Eigen::Index in_dim() const { return layers.front().in_dim(); }
  Eigen::Index out_dim() const { return layers.back().out_dim(); }
  long param_count() const;
};

/// Builds a chain of dense layers with sizes dims[0] -> ... -> dims.back().
/// `activations` has one entry per layer. Weights are Glorot/He uniform.
NeuralModule make_mlp(const std::vector<int>& dims,
                      const std::vector<Activation>& activations,
                      std::uint64_t seed);

/// Single identity-activation layer computing x W^T + b.
NeuralModule make_linear(const Eigen::MatrixXd& weights,
                         const Eigen::VectorXd& bias);

struct TapePass {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> outputs;  // post-activation per layer
  std::uint64_t version = 0;
  bool consumed = false;
};

struct ForwardResult {
  Eigen::MatrixXd output;
  TapePass tape;
};

ForwardResult forward(const NeuralModule& m, const Eigen::MatrixXd& batch);

/// Forward pass without keeping a tape.
Eigen::MatrixXd predict(const NeuralModule& m, const Eigen::MatrixXd& batch);

struct LayerGrad {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

struct ParamGrads {
  std::vector<LayerGrad> layers;
};

struct BackwardResult {
  ParamGrads params;
  Eigen::MatrixXd input_grad;
};

/// Reverse pass for the batch recorded in `tape`. A tape can be consumed
/// once and only against the parameter version that produced it.
BackwardResult backward(const NeuralModule& m, TapePass& tape,
                        const Eigen::MatrixXd& out_grad);

/// z = feats + eps with eps ~ N(0, std^2) per entry. Gradient is identity.
Eigen::MatrixXd noise_inject(const Eigen::MatrixXd& feats,
                             const NoiseModel& noise, std::uint64_t seed);

/// Rescales `grads` in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before rescaling. A non-positive cap leaves them alone.
double clip_grad_norm(ParamGrads& grads, double max_norm);

/// Classic momentum: v <- momentum * v + g; p <- p - lr * v.
NeuralModule sgd_step(NeuralModule m, const ParamGrads& grads, double lr,
                      double momentum);

struct LossAndGrad {
  double value = 0.0;
  Eigen::MatrixXd grad;
};

/// Mean softmax cross-entropy over the batch, gradient w.r.t. the logits.
LossAndGrad task_loss(const Eigen::MatrixXd& logits,
                      const Eigen::VectorXi& labels);

/// Mean over the batch of ||pred - target||^2 / d.
LossAndGrad mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

nlohmann::json to_json(const NeuralModule& m);
NeuralModule module_from_json(const nlohmann::json& doc);

}  // namespace cem
