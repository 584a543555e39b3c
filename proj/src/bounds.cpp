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

#include <Eigen/Cholesky>

namespace cem {
namespace {

double label_term(double weight) {
  return weight > 0.0 ? -weight * std::log(weight) : 0.0;
}

void require_noise(const NoiseModel& noise, Eigen::Index dim) {
  if (!(noise.std > 0.0)) {
    throw Error(ErrorKind::kNonPositiveDefinite,
                "noise covariance must be positive definite (std > 0)");
  }
  if (noise.dim != dim) {
    throw Error(ErrorKind::kShapeMismatch, "noise dim != mixture dim");
  }
}

// 1/2 log(|Sigma + Sigma_p| / |Sigma_p|) in log-ratio form.
double half_log_ratio(const Covariance<double>& cov, double noise_var) {
  if (cov.is_diagonal()) {
    return 0.5 *
           ((cov.diagonal_entries().array() + cov.ridge()) / noise_var)
               .log1p()
               .sum();
  }
  return 0.5 * (logdet(cov.plus_identity(noise_var)) -
                static_cast<double>(cov.dim()) * std::log(noise_var));
}

}  // namespace

double mixture_entropy_upper(const GaussianMixture& mix,
                             const NoiseModel& noise) {
  if (noise.dim != mix.dim) {
    throw Error(ErrorKind::kShapeMismatch, "noise dim != mixture dim");
  }
  double h = 0.0;
  for (const auto& c : mix.components) {
    h += label_term(c.weight) +
         c.weight * gaussian_entropy(c.cov.plus_identity(noise.variance()));
  }
  return h;
}

double mi_upper_bound(const GaussianMixture& mix, const NoiseModel& noise) {
  require_noise(noise, mix.dim);
  double mi = 0.0;
  for (const auto& c : mix.components) {
    mi += label_term(c.weight) +
          c.weight * half_log_ratio(c.cov, noise.variance());
  }
  return mi;
}

Eigen::MatrixXd cem_loss_grad(const Eigen::MatrixXd& batch,
                              const BatchAssignment& assign,
                              const GaussianMixture& mix,
                              const NoiseModel& noise) {
  require_noise(noise, mix.dim);
  if (!mix.stamp || mix.stamp->counts != assign.counts ||
      mix.stamp->batch_size != assign.batch_size) {
    throw Error(ErrorKind::kStaleState,
                "covariances were not updated for this batch");
  }
  if (batch.cols() != mix.dim ||
      batch.rows() != static_cast<Eigen::Index>(assign.indices.size())) {
    throw Error(ErrorKind::kShapeMismatch, "batch does not match assignment");
  }

  // Diagonal of (Sigma_j' + Sigma_p)^-1 per component; only the diagonal of
  // Sigma_j' depends on the batch.
  Eigen::MatrixXd inv_diag(mix.k(), mix.dim);
  for (int j = 0; j < mix.k(); ++j) {
    const Covariance<double> s =
        mix.components[j].cov.plus_identity(noise.variance());
    if (s.is_diagonal()) {
      inv_diag.row(j) =
          (s.diagonal_entries().array() + s.ridge()).inverse().transpose();
    } else {
      const Eigen::MatrixXd lower = s.factor();
      const Eigen::MatrixXd linv =
          lower.triangularView<Eigen::Lower>().solve(
              Eigen::MatrixXd::Identity(mix.dim, mix.dim));
      inv_diag.row(j) = linv.colwise().squaredNorm();
    }
  }

  Eigen::MatrixXd grad(batch.rows(), batch.cols());
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    const int j = assign.indices[i];
    const int n_j = assign.counts[j];
    const auto& comp = mix.components[j];
    const double scale =
        comp.weight * blend_coefficient(mix, j, n_j) / static_cast<double>(n_j);
    grad.row(i) = scale * (batch.row(i) - comp.mean.transpose())
                              .cwiseProduct(inv_diag.row(j));
  }
  return grad;
}

void validate(const JointGaussianSpec& spec) {
  if (spec.x_cov.dim() != spec.channel.cols() ||
      spec.noise.dim != spec.channel.rows()) {
    throw Error(ErrorKind::kShapeMismatch, "joint Gaussian spec dimensions");
  }
}

Eigen::MatrixXd posterior_covariance(const JointGaussianSpec& spec) {
  validate(spec);
  const Eigen::MatrixXd sx = spec.x_cov.dense();
  const Eigen::MatrixXd& w = spec.channel;
  Eigen::MatrixXd s = w * sx * w.transpose();
  s.diagonal().array() += spec.noise.variance();
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNonPositiveDefinite,
                "feature covariance W Sx W^T + Sp is not positive definite");
  }
  const Eigen::MatrixXd cross = w * sx;  // d_z x d_x
  Eigen::MatrixXd post = sx - cross.transpose() * llt.solve(cross);
  return 0.5 * (post + post.transpose());
}

double analytic_cond_entropy(const JointGaussianSpec& spec) {
  return gaussian_entropy(Covariance<double>::full(posterior_covariance(spec), 0.0));
}

double minimal_mse_oracle(const JointGaussianSpec& spec) {
  return posterior_covariance(spec).trace() / spec.x_dim();
}

nlohmann::json to_json(const JointGaussianSpec& spec) {
  const Eigen::MatrixXd sx = spec.x_cov.dense();
  auto rows = [](const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> out(static_cast<size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out[r].push_back(m(r, c));
    }
    return out;
  };
  return {{"x_cov", rows(sx)},
          {"channel", rows(spec.channel)},
          {"noise_std", spec.noise.std}};
}

JointGaussianSpec joint_gaussian_from_json(const nlohmann::json& doc) {
  auto matrix = [](const nlohmann::json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw Error(ErrorKind::kParse, "empty matrix");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.front().size()) {
        throw Error(ErrorKind::kShapeMismatch, "ragged matrix row");
      }
      for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
  };
  try {
    const Eigen::MatrixXd w = matrix(doc.at("channel"));
    JointGaussianSpec spec{Covariance<double>::full(matrix(doc.at("x_cov")), 0.0),
                           w,
                           NoiseModel{w.rows(), doc.at("noise_std").get<double>()}};
    validate(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("joint Gaussian spec: ") + e.what());
  }
}

BoundsReport make_bounds_report(const GaussianMixture& mix,
                                const NoiseModel& noise, double h_x_offset,
                                int input_dim) {
  BoundsReport r;
  r.mi_bound = mi_upper_bound(mix, noise);
  r.cem_loss = cem_loss(mix, noise);
  r.h_x_offset = h_x_offset;
  r.rel_cond_entropy = cond_entropy_lower(0.0, r.mi_bound);
  r.mse_floor = mse_floor(cond_entropy_lower(h_x_offset, r.mi_bound), input_dim);
  return r;
}

nlohmann::json to_json(const BoundsReport& r) {
  return {{"mi_bound", r.mi_bound},
          {"rel_cond_entropy", r.rel_cond_entropy},
          {"mse_floor", r.mse_floor},
          {"h_x_offset", r.h_x_offset},
          {"cem_loss", r.cem_loss}};
}

}  // namespace cem
