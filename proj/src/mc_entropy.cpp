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

#include "cem/mc_entropy.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace cem {
namespace {

// Per-component whitening data for the noisy covariance.
struct Prepared {
  Eigen::VectorXd mean;
  Eigen::MatrixXd lower;    // factor of Sigma_i + Sigma_p (+ ridge)
  Eigen::VectorXd inv_var;  // diagonal fast path; empty for full
  double log_norm;          // log pi_i - 1/2 (d log 2pi + logdet)
};

}  // namespace

McEstimate mc_entropy(const GaussianMixture& mix, const NoiseModel& noise,
                      long n_samples, std::uint64_t seed) {
  if (n_samples < 10000) {
    throw Error(ErrorKind::kInvalidArgument, "mc_entropy needs n_samples >= 1e4");
  }
  if (noise.dim != mix.dim) {
    throw Error(ErrorKind::kShapeMismatch, "noise dim != mixture dim");
  }
  const Eigen::Index d = mix.dim;
  const double log_two_pi = std::log(2.0 * std::numbers::pi);

  std::vector<Prepared> comps;
  std::vector<double> weights;
  for (const auto& c : mix.components) {
    const Covariance<double> s = c.cov.plus_identity(noise.variance());
    Prepared p{c.mean, s.factor(), Eigen::VectorXd(),
               std::log(c.weight) - 0.5 * (d * log_two_pi + logdet(s))};
    if (s.is_diagonal()) {
      p.inv_var = (s.diagonal_entries().array() + s.ridge()).inverse();
    }
    comps.push_back(std::move(p));
    weights.push_back(c.weight);
  }

  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::VectorXd n(d), z(d), r(d), log_terms(mix.k());
  double sum = 0.0, sum_sq = 0.0;
  for (long s = 0; s < n_samples; ++s) {
    const Prepared& src = comps[pick(rng)];
    for (Eigen::Index t = 0; t < d; ++t) n[t] = normal(rng);
    z = src.mean + src.lower * n;
    for (int i = 0; i < mix.k(); ++i) {
      const Prepared& c = comps[i];
      r = z - c.mean;
      double maha;
      if (c.inv_var.size() > 0) {
        maha = (r.array().square() * c.inv_var.array()).sum();
      } else {
        maha = c.lower.triangularView<Eigen::Lower>().solve(r).squaredNorm();
      }
      log_terms[i] = c.log_norm - 0.5 * maha;
    }
    const double neg_log_p = -log_sum_exp(log_terms);
    sum += neg_log_p;
    sum_sq += neg_log_p * neg_log_p;
  }
  const double count = static_cast<double>(n_samples);
  const double mean = sum / count;
  const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
  return {mean, std::sqrt(var / count), n_samples, seed};
}

}  // namespace cem
