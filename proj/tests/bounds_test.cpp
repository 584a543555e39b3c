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

#include "cem/bounds.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cem/mc_entropy.hpp"
#include "test_util.hpp"

namespace cem {
namespace {

constexpr double kHalfLog2PiE = 1.4189385332046727;
constexpr double kLog2 = 0.6931471805599453;

GaussianMixture scalar_mixture(std::vector<double> weights,
                               std::vector<double> vars,
                               std::vector<double> means = {}) {
  GaussianMixture mix;
  mix.dim = 1;
  mix.dataset_size = 100;
  for (size_t i = 0; i < weights.size(); ++i) {
    mix.components.push_back(
        {weights[i], Eigen::VectorXd::Constant(1, means.empty() ? 0.0 : means[i]),
         Covariance<double>::diagonal(Eigen::VectorXd::Constant(1, vars[i]), 0.0)});
  }
  return mix;
}

TEST(GaussianEntropyTest, Examples) {
  EXPECT_NEAR(gaussian_entropy(Covariance<double>::isotropic(1, 1.0)), kHalfLog2PiE, 1e-12);
  EXPECT_NEAR(gaussian_entropy(Covariance<double>::isotropic(2, 1.0)), 2.837877066409345,
              1e-12);
  const double v = 1.0 / (2.0 * std::numbers::pi * std::numbers::e);
  EXPECT_NEAR(gaussian_entropy(Covariance<double>::isotropic(1, v)), 0.0, 1e-12);
}

TEST(MixtureEntropyUpperTest, Examples) {
  const NoiseModel unit{1, 1.0};
  EXPECT_NEAR(mixture_entropy_upper(scalar_mixture({1.0}, {0.0}), unit), kHalfLog2PiE,
              1e-12);
  EXPECT_NEAR(mixture_entropy_upper(scalar_mixture({0.5, 0.5}, {0.0, 0.0}), unit),
              2.112085713764618, 1e-12);
  const double tiny = mixture_entropy_upper(
      scalar_mixture({1.0 - 1e-8, 1e-8}, {0.0, 0.0}), unit);
  EXPECT_GT(tiny, kHalfLog2PiE);
  EXPECT_LT(tiny - kHalfLog2PiE, 1e-6);
}

TEST(MixtureEntropyUpperTest, IndependentOfMeans) {
  const NoiseModel unit{1, 1.0};
  EXPECT_DOUBLE_EQ(
      mixture_entropy_upper(scalar_mixture({0.5, 0.5}, {0.2, 0.3}, {0, 1}), unit),
      mixture_entropy_upper(scalar_mixture({0.5, 0.5}, {0.2, 0.3}, {-8, 40}), unit));
}

TEST(MiUpperBoundTest, Examples) {
  const NoiseModel unit{1, 1.0};
  EXPECT_NEAR(mi_upper_bound(scalar_mixture({1.0}, {0.0}), unit), 0.0, 1e-6);
  EXPECT_NEAR(mi_upper_bound(scalar_mixture({0.5, 0.5}, {0.0, 0.0}), unit), kLog2, 1e-6);
  EXPECT_NEAR(mi_upper_bound(scalar_mixture({1.0}, {3.0}), unit), kLog2, 1e-6);
  EXPECT_NEAR(cem_loss(scalar_mixture({1.0}, {3.0}), unit), kLog2, 1e-6);
}

TEST(MiUpperBoundTest, RequiresPositiveNoise) {
  EXPECT_THROW(mi_upper_bound(scalar_mixture({1.0}, {1.0}), {1, 0.0}), Error);
}

TEST(MiUpperBoundTest, GaussianChannelForm) {
  for (double s2 : {0.1, 1.0, 3.0, 10.0}) {
    for (double p2 : {0.01, 0.5, 2.0}) {
      EXPECT_NEAR(mi_upper_bound(scalar_mixture({1.0}, {s2}), {1, std::sqrt(p2)}),
                  0.5 * std::log1p(s2 / p2), 1e-5 / p2);
    }
  }
}

TEST(MiUpperBoundTest, DecompositionIdentity) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 5, d = 1 + trial % 4;
    const GaussianMixture mix = testing::random_mixture(rng, k, d, 2.0);
    const NoiseModel noise{d, 0.05 + 0.01 * (trial % 30)};
    EXPECT_NEAR(mi_upper_bound(mix, noise),
                mixture_entropy_upper(mix, noise) - gaussian_entropy(noise.cov()),
                1e-10);
  }
}

TEST(MiUpperBoundTest, NonNegative) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const GaussianMixture mix = testing::random_mixture(rng, 1 + trial % 5, 3);
    EXPECT_GE(cem_loss(mix, {3, 0.3}), 0.0);
  }
}

TEST(MiUpperBoundTest, StrictlyDecreasingInNoise) {
  const auto mix = scalar_mixture({0.4, 0.6}, {0.5, 0.0});
  double prev = INFINITY;
  for (double var = 0.01; var <= 2.0; var += 0.01) {
    const double v = mi_upper_bound(mix, {1, std::sqrt(var)});
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(MiUpperBoundTest, UpperBoundsMonteCarloEntropy) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + trial % 5, d = 1 + trial % 4;
    const GaussianMixture mix = testing::random_mixture(rng, k, d, 1.5);
    const NoiseModel noise{d, 0.2};
    const McEstimate mc = mc_entropy(mix, noise, 100000, trial);
    EXPECT_GE(mixture_entropy_upper(mix, noise), mc.value - 3.0 * mc.std_error);
  }
}

TEST(CondEntropyLowerTest, Arithmetic) {
  EXPECT_DOUBLE_EQ(cond_entropy_lower(5.0, 0.0), 5.0);
  EXPECT_NEAR(cond_entropy_lower(0.0, kLog2), -0.693147, 1e-6);
}

TEST(CondEntropyLowerTest, SingleGaussianMatchesAnalytic) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const int d_x = 2 + trial % 5, d_z = 1 + trial % d_x;
    const JointGaussianSpec spec = testing::random_joint_gaussian(rng, d_x, d_z);
    const Eigen::MatrixXd signal =
        spec.channel * spec.x_cov.dense() * spec.channel.transpose();
    GaussianMixture mix;
    mix.dim = d_z;
    mix.dataset_size = 1;
    mix.components.push_back({1.0, Eigen::VectorXd::Zero(d_z),
                              Covariance<double>::full(signal, 0.0)});
    const double h = cond_entropy_lower(gaussian_entropy(spec.x_cov),
                                        mi_upper_bound(mix, spec.noise));
    EXPECT_NEAR(h, analytic_cond_entropy(spec), 1e-9);
  }
}

TEST(MseFloorTest, Examples) {
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  EXPECT_NEAR(mse_floor(2.0 * std::log(two_pi_e * 0.04), 4), 0.04, 1e-15);
  EXPECT_NEAR(mse_floor(0.0, 1), 0.058549831, 1e-9);
  EXPECT_THROW(mse_floor(0.0, 0), Error);
}

JointGaussianSpec scalar_spec(double x_var, double w, double noise_std) {
  return {Covariance<double>::isotropic(1, x_var), Eigen::MatrixXd::Constant(1, 1, w),
          NoiseModel{1, noise_std}};
}

TEST(GaussianOracleTest, ScalarWienerFilter) {
  const JointGaussianSpec spec = scalar_spec(1.0, 1.0, 1.0);
  EXPECT_NEAR(minimal_mse_oracle(spec), 0.5, 1e-12);
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  EXPECT_NEAR(analytic_cond_entropy(spec), 0.5 * std::log(two_pi_e * 0.5), 1e-12);
  EXPECT_NEAR(mse_floor(analytic_cond_entropy(spec), 1), 0.5, 1e-12);
}

TEST(GaussianOracleTest, NoiselessChannel) {
  const JointGaussianSpec spec{Covariance<double>::isotropic(3, 1.0),
                               Eigen::MatrixXd::Identity(3, 3), NoiseModel{3, 1e-6}};
  EXPECT_NEAR(minimal_mse_oracle(spec), 0.0, 1e-10);
}

TEST(GaussianOracleTest, UninformativeChannel) {
  const JointGaussianSpec spec{
      Covariance<double>::diagonal(Eigen::Vector3d(0.5, 1.0, 2.0), 0.0),
      Eigen::MatrixXd::Zero(2, 3), NoiseModel{2, 0.3}};
  EXPECT_NEAR(minimal_mse_oracle(spec), 3.5 / 3.0, 1e-12);
}

TEST(GaussianOracleTest, FloorEqualsOracleForIsotropicPosterior) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 50; ++trial) {
    const JointGaussianSpec spec =
        testing::random_isotropic_posterior_spec(rng, 1 + trial % 8);
    EXPECT_NEAR(mse_floor(analytic_cond_entropy(spec), spec.x_dim()),
                minimal_mse_oracle(spec), 1e-9);
  }
}

TEST(GaussianOracleTest, FloorNeverExceedsOracle) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 100; ++trial) {
    const int d_x = 1 + trial % 8, d_z = 1 + (trial / 8) % 8;
    const JointGaussianSpec spec = testing::random_joint_gaussian(rng, d_x, d_z);
    EXPECT_LE(mse_floor(analytic_cond_entropy(spec), d_x),
              minimal_mse_oracle(spec) * (1.0 + 1e-12));
  }
}

TEST(GaussianOracleTest, RejectsInconsistentShapes) {
  JointGaussianSpec spec{Covariance<double>::isotropic(3, 1.0),
                         Eigen::MatrixXd::Identity(2, 2), NoiseModel{2, 0.3}};
  EXPECT_THROW(validate(spec), Error);
}

TEST(GaussianOracleTest, JsonRoundTrip) {
  std::mt19937_64 rng(37);
  const JointGaussianSpec spec = testing::random_joint_gaussian(rng, 4, 3);
  const JointGaussianSpec back =
      joint_gaussian_from_json(nlohmann::json::parse(to_json(spec).dump()));
  EXPECT_EQ(back.channel, spec.channel);
  EXPECT_EQ(back.x_cov.dense(), spec.x_cov.dense());
  EXPECT_EQ(back.noise.std, spec.noise.std);
  EXPECT_EQ(minimal_mse_oracle(back), minimal_mse_oracle(spec));
}

// cem_loss after re-blending the batch, with the assignment held fixed.
double reblended_loss(const GaussianMixture& weighted, const BatchAssignment& a,
                      const Eigen::MatrixXd& batch, const NoiseModel& noise) {
  return cem_loss(update_covariance(weighted, a, batch), noise);
}

TEST(CemLossGradTest, CenteredBatchHasZeroGradient) {
  auto mix = scalar_mixture({0.5, 0.5}, {1.0, 1.0}, {-2.0, 3.0});
  Eigen::MatrixXd batch(3, 1);
  batch << -2.0, 3.0, -2.0;
  const auto a = assign_nearest(batch, mix);
  const auto updated = update_covariance(update_weights(mix, a), a, batch);
  EXPECT_TRUE(cem_loss_grad(batch, a, updated, {1, 0.5}).isZero(0.0));
}

TEST(CemLossGradTest, SignFollowsResidual) {
  const auto mix = scalar_mixture({1.0}, {1.0}, {0.0});
  for (double z : {-0.7, 0.4, 2.5}) {
    Eigen::MatrixXd batch(1, 1);
    batch << z;
    const auto a = assign_nearest(batch, mix);
    const auto updated = update_covariance(update_weights(mix, a), a, batch);
    const double g = cem_loss_grad(batch, a, updated, {1, 0.3})(0, 0);
    EXPECT_EQ(std::signbit(g), std::signbit(z));
  }
}

TEST(CemLossGradTest, MatchesFiniteDifferences) {
  std::mt19937_64 rng(38);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 3, d = 1 + trial % 4;
    GaussianMixture mix = testing::random_mixture(rng, k, d, 1.0);
    mix.dataset_size = 40;
    const Eigen::MatrixXd batch = testing::random_gaussian_matrix(8, d, rng);
    const auto a = assign_nearest(batch, mix);
    const auto weighted = update_weights(mix, a);
    const NoiseModel noise{d, 0.1 + 0.05 * (trial % 5)};
    const auto updated = update_covariance(weighted, a, batch);
    const Eigen::MatrixXd g = cem_loss_grad(batch, a, updated, noise);
    const Eigen::MatrixXd fd = testing::finite_difference(
        [&](const Eigen::MatrixXd& b) { return reblended_loss(weighted, a, b, noise); },
        batch);
    worst = std::max(worst, testing::relative_error(g, fd));
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(CemLossGradTest, FullCovarianceMatchesFiniteDifferences) {
  std::mt19937_64 rng(39);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 3;
    GaussianMixture mix;
    mix.dim = d;
    mix.dataset_size = 30;
    for (int j = 0; j < 2; ++j) {
      mix.components.push_back({0.5, 2.0 * testing::random_gaussian_matrix(d, 1, rng),
                                Covariance<double>::full(testing::random_pd(d, rng))});
    }
    const Eigen::MatrixXd batch = testing::random_gaussian_matrix(6, d, rng);
    const auto a = assign_nearest(batch, mix);
    const auto weighted = update_weights(mix, a);
    const NoiseModel noise{d, 0.4};
    const Eigen::MatrixXd g =
        cem_loss_grad(batch, a, update_covariance(weighted, a, batch), noise);
    const Eigen::MatrixXd fd = testing::finite_difference(
        [&](const Eigen::MatrixXd& b) { return reblended_loss(weighted, a, b, noise); },
        batch);
    EXPECT_LE(testing::relative_error(g, fd), 1e-5);
  }
}

TEST(CemLossGradTest, StaleMixtureIsRejected) {
  const auto mix = scalar_mixture({0.5, 0.5}, {1.0, 1.0}, {-1.0, 1.0});
  Eigen::MatrixXd batch(2, 1);
  batch << -1.2, 0.8;
  const auto a = assign_nearest(batch, mix);
  try {
    cem_loss_grad(batch, a, update_weights(mix, a), {1, 0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kStaleState);
  }
  Eigen::MatrixXd other(3, 1);
  other << -1.0, -1.0, 1.0;
  const auto b = assign_nearest(other, mix);
  const auto updated = update_covariance(update_weights(mix, b), b, other);
  EXPECT_THROW(cem_loss_grad(batch, a, updated, {1, 0.5}), Error);
}

TEST(BoundsReportTest, Consistency) {
  std::mt19937_64 rng(40);
  const GaussianMixture mix = testing::random_mixture(rng, 3, 2);
  const NoiseModel noise{2, 0.2};
  const BoundsReport r = make_bounds_report(mix, noise, 10.0, 16);
  EXPECT_EQ(r.cem_loss, r.mi_bound);
  EXPECT_EQ(r.rel_cond_entropy, -r.mi_bound);
  EXPECT_EQ(r.h_x_offset, 10.0);
  EXPECT_NEAR(r.mse_floor, mse_floor(10.0 - r.mi_bound, 16), 1e-15);
  EXPECT_GT(r.mse_floor, 0.0);
  const auto doc = to_json(r);
  EXPECT_EQ(doc.at("cem_loss").get<double>(), r.cem_loss);
}

}  // namespace
}  // namespace cem
