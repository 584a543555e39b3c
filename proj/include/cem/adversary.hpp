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

// White-box inversion adversary: a decoder trained to map noisy features back
// to inputs, plus the closed-form posterior-mean attacker for Gaussian worlds.

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cem/bounds.hpp"
#include "cem/data.hpp"
#include "cem/network.hpp"
#include "json.hpp"

namespace cem {

struct AttackConfig {
  int epochs = 50;
  double lr = 0.005;
  double momentum = 0.9;
  std::vector<int> hidden_dims = {64, 64};
  int batch_size = 16;
  std::uint64_t seed = 0;
  Activation output = Activation::kSigmoid;
};

nlohmann::json to_json(const AttackConfig& cfg);
AttackConfig attack_config_from_json(const nlohmann::json& doc,
                                     AttackConfig base = {});

struct AttackReport {
  double mse_train = 0.0;
  double mse_infer = 0.0;
  double psnr_train = 0.0;
  double psnr_infer = 0.0;
  double floor = 0.0;
};

nlohmann::json to_json(const AttackReport& r);

/// PSNR in dB for signals in [0, 1].
inline double psnr(double mse) { return -10.0 * std::log10(mse); }

/// Trains an inversion network z -> x on fresh noisy encodings of
/// `train_inputs` each epoch. The encoder is only read.
NeuralModule train_attacker(const NeuralModule& encoder, const NoiseModel& noise,
                            const Eigen::MatrixXd& train_inputs,
                            const AttackConfig& cfg);

/// Per-dimension reconstruction MSE of `attacker` on fresh noisy encodings.
double reconstruction_mse(const NeuralModule& attacker,
                          const NeuralModule& encoder, const NoiseModel& noise,
                          const Eigen::MatrixXd& inputs, std::uint64_t seed);

/// Evaluates both splits; `floor` is copied into the report as given.
AttackReport evaluate_attack(const NeuralModule& attacker,
                             const NeuralModule& encoder,
                             const NoiseModel& noise,
                             const Eigen::MatrixXd& train_inputs,
                             const Eigen::MatrixXd& test_inputs,
                             std::uint64_t seed, double floor);

/// The posterior-mean map z -> Sx W^T (W Sx W^T + Sp)^-1 z as a linear module.
NeuralModule gaussian_posterior_attacker(const JointGaussianSpec& spec);

}  // namespace cem
