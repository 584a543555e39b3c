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

#include "cem/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cem/bounds.hpp"
#include "cem/seed.hpp"

namespace cem {
namespace {

enum Stream : std::uint64_t {
  kInitEncoder = 1,
  kInitDecoder,
  kRefitNoise,
  kRefitSeed,
  kShuffle,
  kBatchNoise,
};

int argmax_row(const Eigen::MatrixXd& m, Eigen::Index r) {
  Eigen::Index best;
  m.row(r).maxCoeff(&best);
  return static_cast<int>(best);
}

double batch_accuracy(const Eigen::MatrixXd& logits, const Eigen::VectorXi& y) {
  int hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (argmax_row(logits, i) == y[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

}  // namespace

std::string to_string(DefenseKind kind) {
  return kind == DefenseKind::kNone ? "none" : "noise_only";
}

DefenseKind defense_from_string(const std::string& name) {
  if (name == "none") return DefenseKind::kNone;
  if (name == "noise_only") return DefenseKind::kNoiseOnly;
  throw Error(ErrorKind::kUnknownDefense, "unknown defense '" + name + "'");
}

bool defense_injects_noise(DefenseKind kind) {
  return kind == DefenseKind::kNoiseOnly;
}

nlohmann::json to_json(const TrainingConfig& cfg) {
  return {{"lambda", cfg.lambda},
          {"noise_std", cfg.noise_std},
          {"k", cfg.k},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"lr", cfg.lr},
          {"momentum", cfg.momentum},
          {"lr_decay_factor", cfg.lr_decay.factor},
          {"lr_decay_every", cfg.lr_decay.every_n_epochs},
          {"seed", cfg.seed},
          {"defense", to_string(cfg.defense)},
          {"d_z", cfg.d_z},
          {"hidden", cfg.hidden},
          {"encoder_output", to_string(cfg.encoder_output)},
          {"gmm_iters", cfg.gmm_iters},
          {"grad_clip", cfg.grad_clip},
          {"eval_with_noise", cfg.eval_with_noise},
          {"check_invariants", cfg.check_invariants}};
}

TrainingConfig training_config_from_json(const nlohmann::json& doc,
                                         TrainingConfig cfg) {
  try {
    cfg.lambda = doc.value("lambda", cfg.lambda);
    cfg.noise_std = doc.value("noise_std", cfg.noise_std);
    cfg.k = doc.value("k", cfg.k);
    cfg.epochs = doc.value("epochs", cfg.epochs);
    cfg.batch_size = doc.value("batch_size", cfg.batch_size);
    cfg.lr = doc.value("lr", cfg.lr);
    cfg.momentum = doc.value("momentum", cfg.momentum);
    cfg.lr_decay.factor = doc.value("lr_decay_factor", cfg.lr_decay.factor);
    cfg.lr_decay.every_n_epochs =
        doc.value("lr_decay_every", cfg.lr_decay.every_n_epochs);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("defense")) {
      cfg.defense = defense_from_string(doc.at("defense").get<std::string>());
    }
    cfg.d_z = doc.value("d_z", cfg.d_z);
    cfg.hidden = doc.value("hidden", cfg.hidden);
    if (doc.contains("encoder_output")) {
      cfg.encoder_output =
          activation_from_string(doc.at("encoder_output").get<std::string>());
    }
    cfg.gmm_iters = doc.value("gmm_iters", cfg.gmm_iters);
    cfg.grad_clip = doc.value("grad_clip", cfg.grad_clip);
    cfg.eval_with_noise = doc.value("eval_with_noise", cfg.eval_with_noise);
    cfg.check_invariants = doc.value("check_invariants", cfg.check_invariants);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("training config: ") + e.what());
  }
  return cfg;
}

DefenseOutput defense_hook(DefenseKind kind, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& zhat,
                           const Eigen::MatrixXd& z,
                           const Eigen::MatrixXd& logits,
                           const Eigen::VectorXi& labels) {
  (void)x;
  (void)zhat;
  switch (kind) {
    case DefenseKind::kNone:
    case DefenseKind::kNoiseOnly: {
      LossAndGrad task = task_loss(logits, labels);
      return {task.value, std::move(task.grad),
              Eigen::MatrixXd::Zero(z.rows(), z.cols())};
    }
  }
  throw Error(ErrorKind::kUnknownDefense, "unhandled defense kind");
}

double evaluate_utility(const NeuralModule& encoder, const NeuralModule& decoder,
                        const Eigen::MatrixXd& inputs,
                        const Eigen::VectorXi& labels, const NoiseModel& noise,
                        std::uint64_t seed) {
  if (inputs.rows() == 0) return 0.0;
  const Eigen::MatrixXd z = noise_inject(predict(encoder, inputs), noise, seed);
  return batch_accuracy(predict(decoder, z), labels);
}

TrainResult train(const TrainingConfig& cfg, const Dataset& data) {
  if (data.train.empty()) {
    throw Error(ErrorKind::kDegenerateData, "training split is empty");
  }
  if (cfg.batch_size < 1 ||
      cfg.batch_size > static_cast<int>(data.train.size())) {
    throw Error(ErrorKind::kInvalidArgument,
                "batch_size must be in [1, training set size]");
  }
  if (cfg.lambda < 0.0 || cfg.noise_std < 0.0 || !(cfg.lr > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "lambda, noise_std must be >= 0 and lr > 0");
  }
  if (cfg.lambda > 0.0 && cfg.noise_std == 0.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "the entropy penalty needs noise_std > 0");
  }
  const int n = data.n_classes;
  const int k = cfg.resolved_k(n);
  if (k < n) {
    std::cerr << "warning: k=" << k << " is smaller than the number of classes "
              << n << "\n";
  }

  TrainResult out;
  out.encoder = make_mlp({static_cast<int>(data.dim()), cfg.hidden, cfg.d_z},
                         {Activation::kRelu, cfg.encoder_output},
                         derive_seed(cfg.seed, {kInitEncoder}));
  out.decoder = make_mlp({cfg.d_z, cfg.hidden, n},
                         {Activation::kRelu, Activation::kIdentity},
                         derive_seed(cfg.seed, {kInitDecoder}));

  const Eigen::MatrixXd x_train = data.rows(data.train);
  const Eigen::VectorXi y_train = data.labels_of(data.train);
  const int n_train = static_cast<int>(x_train.rows());
  const NoiseModel bound_noise{cfg.d_z, cfg.noise_std};
  const NoiseModel path_noise{
      cfg.d_z, defense_injects_noise(cfg.defense) ? cfg.noise_std : 0.0};
  const bool with_bound = cfg.noise_std > 0.0;
  const int decay_every = cfg.lr_decay.every_n_epochs > 0
                              ? cfg.lr_decay.every_n_epochs
                              : std::max(1, cfg.epochs / 3);

  std::vector<int> order(static_cast<size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto e = static_cast<std::uint64_t>(epoch);
    const double lr =
        cfg.lr * std::pow(cfg.lr_decay.factor, (epoch - 1) / decay_every);

    // Refit the mixture on the whole noisy training set, warm-starting the
    // means from the previous epoch.
    const Eigen::MatrixXd z_all =
        noise_inject(predict(out.encoder, x_train), path_noise,
                     derive_seed(cfg.seed, {kRefitNoise, e}));
    FitOptions fit;
    if (out.mixture.k() == k) fit.initial_means = out.mixture.means();
    GaussianMixture mix = fit_init(z_all, k, derive_seed(cfg.seed, {kRefitSeed, e}),
                                   cfg.gmm_iters, fit);

    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, {kShuffle, e}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    LossBreakdown sums;
    int n_batches = 0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int stop = std::min(n_train, start + cfg.batch_size);
      const std::vector<int> idx(order.begin() + start, order.begin() + stop);
      Eigen::MatrixXd xb(static_cast<Eigen::Index>(idx.size()), x_train.cols());
      Eigen::VectorXi yb(static_cast<Eigen::Index>(idx.size()));
      for (size_t i = 0; i < idx.size(); ++i) {
        xb.row(i) = x_train.row(idx[i]);
        yb[i] = y_train[idx[i]];
      }

      ForwardResult enc = forward(out.encoder, xb);
      const Eigen::MatrixXd zb =
          noise_inject(enc.output, path_noise,
                       derive_seed(cfg.seed, {kBatchNoise, e,
                                              static_cast<std::uint64_t>(start)}));
      ForwardResult dec = forward(out.decoder, zb);

      const BatchAssignment assign = assign_nearest(zb, mix);
      mix = update_weights(mix, assign);
      mix = update_covariance(mix, assign, zb);
      if (cfg.check_invariants &&
          std::abs(mix.weights().sum() - 1.0) > 1e-9) {
        throw std::logic_error("mixture weights drifted from 1");
      }

      DefenseOutput def =
          defense_hook(cfg.defense, xb, enc.output, zb, dec.output, yb);
      const double l_c = with_bound ? cem_loss(mix, bound_noise)
                                    : std::numeric_limits<double>::quiet_NaN();

      BackwardResult dec_back = backward(out.decoder, dec.tape, def.logits_grad);
      Eigen::MatrixXd dz = dec_back.input_grad + def.feature_grad;
      if (cfg.lambda > 0.0) {
        dz += cfg.lambda * cem_loss_grad(zb, assign, mix, bound_noise);
      }
      // Noise is additive, so dz flows unchanged into the encoder output.
      BackwardResult enc_back = backward(out.encoder, enc.tape, dz);
      clip_grad_norm(dec_back.params, cfg.grad_clip);
      clip_grad_norm(enc_back.params, cfg.grad_clip);

      try {
        out.decoder = sgd_step(std::move(out.decoder), dec_back.params, lr,
                               cfg.momentum);
        out.encoder = sgd_step(std::move(out.encoder), enc_back.params, lr,
                               cfg.momentum);
      } catch (const Error& err) {
        throw Error(err.kind(), "training diverged at epoch " +
                                    std::to_string(epoch) + ": " + err.what());
      }

      sums.l_d += def.l_d;
      sums.l_c += l_c;
      sums.total += def.l_d + cfg.lambda * (with_bound ? l_c : 0.0);
      sums.accuracy += batch_accuracy(dec.output, yb);
      ++n_batches;
    }

    const double nb = static_cast<double>(n_batches);
    out.history.push_back({epoch, sums.l_d / nb, sums.l_c / nb,
                           sums.total / nb, sums.accuracy / nb});
    out.mixture = std::move(mix);
  }
  return out;
}

}  // namespace cem
