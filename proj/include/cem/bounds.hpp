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

// Closed-form information quantities over the noisy-feature mixture:
// Gaussian entropy, the mixture entropy upper bound, the mutual-information
// bound used as the training penalty, and the MSE floor it implies.
//
// All values are in nats.

#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "cem/mixture.hpp"
#include "cem/noise.hpp"
#include "cem/numerics.hpp"
#include "json.hpp"

namespace cem {

/// 1/2 log((2 pi e)^d |c|).
template <typename Scalar>
Scalar gaussian_entropy(const Covariance<Scalar>& c) {
  const Scalar two_pi_e =
      Scalar(2) * std::numbers::pi_v<Scalar> * std::numbers::e_v<Scalar>;
  return Scalar(0.5) *
         (static_cast<Scalar>(c.dim()) * std::log(two_pi_e) + logdet(c));
}

/// Lower bound on the per-dimension reconstruction MSE of any estimator of a
/// d-dimensional x whose conditional entropy given z is `h_cond`.
template <typename Scalar>
Scalar mse_floor(Scalar h_cond, int d) {
  if (d < 1) throw Error(ErrorKind::kInvalidArgument, "d must be >= 1");
  const Scalar two_pi_e =
      Scalar(2) * std::numbers::pi_v<Scalar> * std::numbers::e_v<Scalar>;
  return std::exp(Scalar(2) * h_cond / static_cast<Scalar>(d)) / two_pi_e;
}

/// sum_i pi_i (-log pi_i + H(N(0, Sigma_i + Sigma_p))). Upper-bounds the
/// differential entropy of the noisy mixture.
double mixture_entropy_upper(const GaussianMixture& mix,
                             const NoiseModel& noise);

/// sum_i pi_i (-log pi_i + 1/2 log(|Sigma_i + Sigma_p| / |Sigma_p|)).
/// Requires noise.std > 0.
double mi_upper_bound(const GaussianMixture& mix, const NoiseModel& noise);

/// Training penalty; the same quantity as mi_upper_bound.
inline double cem_loss(const GaussianMixture& mix, const NoiseModel& noise) {
  return mi_upper_bound(mix, noise);
}

inline double cond_entropy_lower(double h_x, double mi) { return h_x - mi; }

/// d cem_loss / d z for every batch row. The assignment, weights and means
/// are held constant; only the batch scatter feeding the last covariance
/// blend is differentiated. Throws StaleState unless `mix` is the output of
/// update_covariance for exactly this assignment.
Eigen::MatrixXd cem_loss_grad(const Eigen::MatrixXd& batch,
                              const BatchAssignment& assign,
                              const GaussianMixture& mix,
                              const NoiseModel& noise);

// x ~ N(0, x_cov), z = channel * x + eps.
struct JointGaussianSpec {
  Covariance<double> x_cov;
  Eigen::MatrixXd channel;  // d_z x d_x
  NoiseModel noise;

  int x_dim() const { return static_cast<int>(channel.cols()); }
  int z_dim() const { return static_cast<int>(channel.rows()); }
};

void validate(const JointGaussianSpec& spec);

/// Cov(x|z) = Sx - Sx W^T (W Sx W^T + Sp)^-1 W Sx.
Eigen::MatrixXd posterior_covariance(const JointGaussianSpec& spec);

/// Exact H(x|z) for the jointly Gaussian world.
double analytic_cond_entropy(const JointGaussianSpec& spec);

/// Tr(Cov(x|z)) / d_x: the MSE of the posterior-mean estimator.
double minimal_mse_oracle(const JointGaussianSpec& spec);

nlohmann::json to_json(const JointGaussianSpec& spec);
JointGaussianSpec joint_gaussian_from_json(const nlohmann::json& doc);

struct BoundsReport {
  double mi_bound = 0.0;
  double rel_cond_entropy = 0.0;
  double mse_floor = 0.0;
  double h_x_offset = 0.0;
  double cem_loss = 0.0;
};

/// Reports the bounds for a trained mixture; `input_dim` is the
/// dimensionality of x used by the MSE floor.
BoundsReport make_bounds_report(const GaussianMixture& mix,
                                const NoiseModel& noise, double h_x_offset,
                                int input_dim);

nlohmann::json to_json(const BoundsReport& report);

}  // namespace cem
