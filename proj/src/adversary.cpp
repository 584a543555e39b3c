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

#include "cem/adversary.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>

#include "cem/seed.hpp"

namespace cem {
namespace {

enum Stream : std::uint64_t { kInit = 11, kNoise, kShuffle, kEvalTrain, kEvalTest };

}  // namespace

nlohmann::json to_json(const AttackConfig& cfg) {
  return {{"epochs", cfg.epochs},       {"lr", cfg.lr},
          {"momentum", cfg.momentum},   {"hidden_dims", cfg.hidden_dims},
          {"batch_size", cfg.batch_size}, {"seed", cfg.seed},
          {"output", to_string(cfg.output)}};
}

AttackConfig attack_config_from_json(const nlohmann::json& doc,
                                     AttackConfig cfg) {
  try {
    cfg.epochs = doc.value("epochs", cfg.epochs);
    cfg.lr = doc.value("lr", cfg.lr);
    cfg.momentum = doc.value("momentum", cfg.momentum);
    cfg.hidden_dims = doc.value("hidden_dims", cfg.hidden_dims);
    cfg.batch_size = doc.value("batch_size", cfg.batch_size);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("output")) {
      cfg.output = activation_from_string(doc.at("output").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("attack config: ") + e.what());
  }
  return cfg;
}

nlohmann::json to_json(const AttackReport& r) {
  return {{"mse_train", r.mse_train},   {"mse_infer", r.mse_infer},
          {"psnr_train", r.psnr_train}, {"psnr_infer", r.psnr_infer},
          {"floor", r.floor}};
}

NeuralModule train_attacker(const NeuralModule& encoder, const NoiseModel& noise,
                            const Eigen::MatrixXd& train_inputs,
                            const AttackConfig& cfg) {
  if (cfg.epochs < 1) throw Error(ErrorKind::kInvalidArgument, "epochs >= 1");
  if (cfg.batch_size < 1 || train_inputs.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "empty training data or batch");
  }
  std::vector<int> dims{static_cast<int>(encoder.out_dim())};
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(static_cast<int>(train_inputs.cols()));
  std::vector<Activation> acts(dims.size() - 1, Activation::kRelu);
  acts.back() = cfg.output;
  NeuralModule attacker = make_mlp(dims, acts, derive_seed(cfg.seed, {kInit}));

  const Eigen::MatrixXd zhat = predict(encoder, train_inputs);
  const auto n = static_cast<int>(train_inputs.rows());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto e = static_cast<std::uint64_t>(epoch);
    const Eigen::MatrixXd z =
        noise_inject(zhat, noise, derive_seed(cfg.seed, {kNoise, e}));
    std::mt19937_64 rng(derive_seed(cfg.seed, {kShuffle, e}));
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int stop = std::min(n, start + cfg.batch_size);
      Eigen::MatrixXd zb(stop - start, z.cols());
      Eigen::MatrixXd xb(stop - start, train_inputs.cols());
      for (int i = start; i < stop; ++i) {
        zb.row(i - start) = z.row(order[i]);
        xb.row(i - start) = train_inputs.row(order[i]);
      }
      ForwardResult fwd = forward(attacker, zb);
      const LossAndGrad loss = mse_loss(fwd.output, xb);
      const BackwardResult back = backward(attacker, fwd.tape, loss.grad);
      try {
        attacker = sgd_step(std::move(attacker), back.params, cfg.lr, cfg.momentum);
      } catch (const Error& err) {
        throw Error(err.kind(), "attacker diverged at epoch " +
                                    std::to_string(epoch + 1) + ": " + err.what());
      }
    }
  }
  return attacker;
}

double reconstruction_mse(const NeuralModule& attacker,
                          const NeuralModule& encoder, const NoiseModel& noise,
                          const Eigen::MatrixXd& inputs, std::uint64_t seed) {
  const Eigen::MatrixXd z = noise_inject(predict(encoder, inputs), noise, seed);
  return (predict(attacker, z) - inputs).squaredNorm() /
         static_cast<double>(inputs.size());
}

AttackReport evaluate_attack(const NeuralModule& attacker,
                             const NeuralModule& encoder,
                             const NoiseModel& noise,
                             const Eigen::MatrixXd& train_inputs,
                             const Eigen::MatrixXd& test_inputs,
                             std::uint64_t seed, double floor) {
  AttackReport r;
  r.mse_train = reconstruction_mse(attacker, encoder, noise, train_inputs,
                                   derive_seed(seed, {kEvalTrain}));
  r.mse_infer = reconstruction_mse(attacker, encoder, noise, test_inputs,
                                   derive_seed(seed, {kEvalTest}));
  r.psnr_train = psnr(r.mse_train);
  r.psnr_infer = psnr(r.mse_infer);
  r.floor = floor;
  return r;
}

NeuralModule gaussian_posterior_attacker(const JointGaussianSpec& spec) {
  validate(spec);
  const Eigen::MatrixXd sx = spec.x_cov.dense();
  const Eigen::MatrixXd& w = spec.channel;
  Eigen::MatrixXd s = w * sx * w.transpose();
  s.diagonal().array() += spec.noise.variance();
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNonPositiveDefinite,
                "feature covariance is not positive definite");
  }
  // gain = Sx W^T S^-1, computed as (S^-1 W Sx)^T since S is symmetric.
  const Eigen::MatrixXd gain = llt.solve(w * sx).transpose();
  return make_linear(gain, Eigen::VectorXd::Zero(gain.rows()));
}

}  // namespace cem
