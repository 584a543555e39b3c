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

// Joint training of encoder and decoder under L = L_D + lambda * L_C, with a
// per-epoch mixture refit and per-batch streaming mixture updates.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cem/data.hpp"
#include "cem/mixture.hpp"
#include "cem/network.hpp"
#include "json.hpp"

namespace cem {

enum class DefenseKind { kNone, kNoiseOnly };

std::string to_string(DefenseKind kind);
DefenseKind defense_from_string(const std::string& name);

/// Whether the defense corrupts features with noise in the forward path.
bool defense_injects_noise(DefenseKind kind);

struct LrDecay {
  double factor = 0.5;
  int every_n_epochs = 0;  // 0 selects max(1, epochs / 3)
};

struct TrainingConfig {
  double lambda = 16.0;
  double noise_std = 0.025;
  int k = 0;  // 0 selects 3 * n_classes
  int epochs = 30;
  int batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;
  LrDecay lr_decay;
  std::uint64_t seed = 0;
  DefenseKind defense = DefenseKind::kNoiseOnly;
  int d_z = 8;
  int hidden = 32;
  Activation encoder_output = Activation::kIdentity;
  int gmm_iters = 10;
  // Per-network gradient norm cap; 0 disables clipping.
  double grad_clip = 0.0;
  bool eval_with_noise = true;
  // Asserts mixture weight conservation after every batch.
  bool check_invariants = false;

  int resolved_k(int n_classes) const { return k > 0 ? k : 3 * n_classes; }
};

nlohmann::json to_json(const TrainingConfig& cfg);
/// Reads any subset of the TrainingConfig keys on top of `base`.
TrainingConfig training_config_from_json(const nlohmann::json& doc,
                                         TrainingConfig base = {});

struct LossBreakdown {
  int epoch = 0;
  double l_d = 0.0;
  double l_c = 0.0;
  double total = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  NeuralModule encoder;
  NeuralModule decoder;
  GaussianMixture mixture;  // empty when no epoch ran
  std::vector<LossBreakdown> history;
};

TrainResult train(const TrainingConfig& cfg, const Dataset& data);

struct DefenseOutput {
  double l_d = 0.0;
  Eigen::MatrixXd logits_grad;
  Eigen::MatrixXd feature_grad;  // w.r.t. the noisy features z
};

/// The defense's contribution to L_D. Both built-in kinds reduce to the task
/// loss; a defense with its own regularizer adds to `feature_grad`.
DefenseOutput defense_hook(DefenseKind kind, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& zhat,
                           const Eigen::MatrixXd& z,
                           const Eigen::MatrixXd& logits,
                           const Eigen::VectorXi& labels);

/// Top-1 accuracy with the given noise applied to the encoder output.
double evaluate_utility(const NeuralModule& encoder, const NeuralModule& decoder,
                        const Eigen::MatrixXd& inputs,
                        const Eigen::VectorXi& labels, const NoiseModel& noise,
                        std::uint64_t seed);

}  // namespace cem
