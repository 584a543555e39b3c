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

// k-component Gaussian mixture over noisy features with the per-batch
// streaming updates used during training.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cem/noise.hpp"
#include "cem/numerics.hpp"
#include "json.hpp"

namespace cem {

inline constexpr double kWeightFloor = 1e-8;

struct GaussianComponent {
  double weight;
  Eigen::VectorXd mean;
  Covariance<double> cov;
};

struct BatchAssignment {
  std::vector<int> indices;  // cluster id per batch row
  std::vector<int> counts;   // n_j
  int batch_size = 0;
};

// Records which batch the covariances were last blended with, so a gradient
// request can tell whether the mixture is in sync with its batch.
struct CovarianceStamp {
  std::vector<int> counts;
  int batch_size = 0;
};

struct GaussianMixture {
  std::vector<GaussianComponent> components;
  Eigen::Index dim = 0;
  long dataset_size = 0;
  std::optional<CovarianceStamp> stamp;

  int k() const { return static_cast<int>(components.size()); }
  Eigen::VectorXd weights() const;
  Eigen::MatrixXd means() const;  // k x d
};

struct FitOptions {
  double ridge = kDefaultRidge;
  double weight_floor = kWeightFloor;
  // k x d starting centroids; replaces k-means++ seeding when present.
  std::optional<Eigen::MatrixXd> initial_means;
};

/// k-means++ seeding (or warm-start means) followed by `iters` Lloyd rounds.
/// Rows of `features` are samples. Throws DegenerateData when fewer than k
/// distinct rows exist.
GaussianMixture fit_init(const Eigen::MatrixXd& features, int k,
                         std::uint64_t seed, int iters,
                         const FitOptions& options = {});

BatchAssignment assign_nearest(const Eigen::MatrixXd& batch,
                               const GaussianMixture& mix);

GaussianMixture update_weights(const GaussianMixture& mix,
                               const BatchAssignment& assign,
                               double weight_floor = kWeightFloor);

/// Blends each touched covariance towards the batch scatter about the stored
/// mean. Expects the weights to have been updated for the same batch.
GaussianMixture update_covariance(const GaussianMixture& mix,
                                  const BatchAssignment& assign,
                                  const Eigen::MatrixXd& batch);

/// Blend coefficient n_j / (pi_j N), clamped to [0, 1].
double blend_coefficient(const GaussianMixture& mix, int j, int n_j);

/// Posterior responsibility of every component for z under the noisy
/// mixture sum_i pi_i N(mu_i, Sigma_i + Sigma_p).
Eigen::VectorXd responsibilities(const Eigen::VectorXd& z,
                                 const GaussianMixture& mix,
                                 const NoiseModel& noise);

double posterior_utility(const Eigen::VectorXd& z, const GaussianMixture& mix,
                         const NoiseModel& noise, int j);

nlohmann::json to_json(const GaussianMixture& mix);
GaussianMixture mixture_from_json(const nlohmann::json& doc);

}  // namespace cem
