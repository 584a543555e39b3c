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

// Test-only generators and oracles shared by the unit and acceptance suites.

#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Core>
#include <Eigen/QR>

#include "cem/bounds.hpp"
#include "cem/mixture.hpp"

namespace cem::testing {

inline Eigen::MatrixXd random_gaussian_matrix(Eigen::Index rows,
                                              Eigen::Index cols,
                                              std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = n(rng);
  }
  return m;
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index d, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_gaussian_matrix(d, d, rng));
  return qr.householderQ();
}

// A A^T + 0.5 I: comfortably positive definite.
inline Eigen::MatrixXd random_pd(Eigen::Index d, std::mt19937_64& rng) {
  const Eigen::MatrixXd a = random_gaussian_matrix(d, d, rng);
  Eigen::MatrixXd pd = a * a.transpose();
  pd.diagonal().array() += 0.5;
  return 0.5 * (pd + pd.transpose());
}

// Arbitrary jointly Gaussian world: random PD prior, random channel.
inline JointGaussianSpec random_joint_gaussian(std::mt19937_64& rng, int d_x,
                                               int d_z) {
  std::uniform_real_distribution<double> u(0.2, 1.5);
  return {Covariance<double>::full(random_pd(d_x, rng), 0.0),
          random_gaussian_matrix(d_z, d_x, rng), NoiseModel{d_z, u(rng)}};
}

// Jointly Gaussian world whose posterior covariance is c^-1 I, the equality
// case of the max-entropy and Jensen steps behind the MSE floor. The prior is
// anisotropic; the channel is chosen so that Sx^-1 + W^T W / s^2 = c I.
inline JointGaussianSpec random_isotropic_posterior_spec(std::mt19937_64& rng,
                                                         int d) {
  std::uniform_real_distribution<double> eig(0.3, 2.0);
  std::uniform_real_distribution<double> extra(0.2, 3.0);
  std::uniform_real_distribution<double> noise_std(0.3, 1.2);
  const Eigen::MatrixXd u = random_orthogonal(d, rng);
  Eigen::VectorXd lambda(d);
  for (int i = 0; i < d; ++i) lambda[i] = eig(rng);
  const Eigen::MatrixXd sx = u * lambda.asDiagonal() * u.transpose();
  const double c = lambda.cwiseInverse().maxCoeff() + extra(rng);
  const double s = noise_std(rng);
  // W^T W = s^2 (c I - Sx^-1) = U diag(s^2 (c - 1/lambda)) U^T.
  const Eigen::VectorXd root =
      (s * s * (c - lambda.cwiseInverse().array())).sqrt();
  const Eigen::MatrixXd w =
      random_orthogonal(d, rng) * root.asDiagonal() * u.transpose();
  return {Covariance<double>::full(0.5 * (sx + sx.transpose()), 0.0), w,
          NoiseModel{d, s}};
}

// Random diagonal mixture with k components in d dimensions.
inline GaussianMixture random_mixture(std::mt19937_64& rng, int k, int d,
                                      double mean_scale = 1.0,
                                      double var_hi = 1.0) {
  std::uniform_real_distribution<double> w(0.2, 1.0);
  std::uniform_real_distribution<double> var(0.01, var_hi);
  std::normal_distribution<double> n(0.0, mean_scale);
  GaussianMixture mix;
  mix.dim = d;
  mix.dataset_size = 1000;
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd mean(d), cov(d);
    for (int t = 0; t < d; ++t) {
      mean[t] = n(rng);
      cov[t] = var(rng);
    }
    const double wj = w(rng);
    total += wj;
    mix.components.push_back({wj, mean, Covariance<double>::diagonal(cov, 0.0)});
  }
  for (auto& c : mix.components) c.weight /= total;
  return mix;
}

// Central finite differences of f at x, element by element.
inline Eigen::MatrixXd finite_difference(
    const std::function<double(const Eigen::MatrixXd&)>& f,
    const Eigen::MatrixXd& x, double h = 1e-5) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  Eigen::MatrixXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const double up = f(probe);
    probe.data()[i] = orig - h;
    const double down = f(probe);
    probe.data()[i] = orig;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), zero when both vanish.
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

}  // namespace cem::testing
