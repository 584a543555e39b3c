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

#include "cem/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace cem {
namespace {

int count_distinct_rows(const Eigen::MatrixXd& x) {
  std::vector<Eigen::Index> order(static_cast<size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index t = 0; t < x.cols(); ++t) {
      if (x(a, t) != x(b, t)) return x(a, t) < x(b, t);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  int distinct = order.empty() ? 0 : 1;
  for (size_t i = 1; i < order.size(); ++i) {
    if (less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

int nearest(const Eigen::Ref<const Eigen::RowVectorXd>& z,
            const Eigen::MatrixXd& centers) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centers.rows(); ++j) {
    const double d = (centers.row(j) - z).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

Eigen::MatrixXd kmeans_pp(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng));
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d2[i] = (x.row(i) - centers.row(0)).squaredNorm();
  }
  for (int c = 1; c < k; ++c) {
    std::discrete_distribution<Eigen::Index> draw(d2.data(), d2.data() + n);
    centers.row(c) = x.row(draw(rng));
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (x.row(i) - centers.row(c)).squaredNorm());
    }
  }
  return centers;
}

void floor_and_normalize(Eigen::VectorXd& w, double floor) {
  w = w.cwiseMax(floor);
  w /= w.sum();
}

}  // namespace

Eigen::VectorXd GaussianMixture::weights() const {
  Eigen::VectorXd w(k());
  for (int j = 0; j < k(); ++j) w[j] = components[j].weight;
  return w;
}

Eigen::MatrixXd GaussianMixture::means() const {
  Eigen::MatrixXd m(k(), dim);
  for (int j = 0; j < k(); ++j) m.row(j) = components[j].mean.transpose();
  return m;
}

GaussianMixture fit_init(const Eigen::MatrixXd& features, int k,
                         std::uint64_t seed, int iters,
                         const FitOptions& options) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "k must be >= 1");
  if (n < k) {
    throw Error(ErrorKind::kDegenerateData,
                "need at least k=" + std::to_string(k) + " samples, got " +
                    std::to_string(n));
  }
  if (!features.allFinite()) {
    throw Error(ErrorKind::kDegenerateData, "non-finite feature values");
  }
  if (count_distinct_rows(features) < k) {
    throw Error(ErrorKind::kDegenerateData,
                "fewer than k=" + std::to_string(k) + " distinct feature rows");
  }

  std::mt19937_64 rng(seed);
  Eigen::MatrixXd centers;
  if (options.initial_means) {
    if (options.initial_means->rows() != k || options.initial_means->cols() != d) {
      throw Error(ErrorKind::kShapeMismatch, "initial_means must be k x d");
    }
    centers = *options.initial_means;
  } else {
    centers = kmeans_pp(features, k, rng);
  }

  std::vector<int> label(static_cast<size_t>(n), -1);
  auto assign_all = [&] {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int j = nearest(features.row(i), centers);
      if (j != label[i]) {
        label[i] = j;
        changed = true;
      }
    }
    return changed;
  };

  assign_all();
  for (int it = 0; it < iters; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(label[i]) += features.row(i);
      ++counts[label[i]];
    }
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) centers.row(j) = sums.row(j) / counts[j];
    }
    if (!assign_all()) break;
  }

  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(k, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    counts[label[i]] += 1.0;
    scatter.row(label[i]) +=
        (features.row(i) - centers.row(label[i])).array().square().matrix();
  }
  Eigen::VectorXd w = counts / static_cast<double>(n);
  floor_and_normalize(w, options.weight_floor);

  GaussianMixture mix;
  mix.dim = d;
  mix.dataset_size = n;
  mix.components.reserve(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd var = counts[j] > 0
                              ? Eigen::VectorXd(scatter.row(j).transpose() / counts[j])
                              : Eigen::VectorXd::Zero(d);
    mix.components.push_back(
        {w[j], centers.row(j).transpose(),
         Covariance<double>::diagonal(std::move(var), options.ridge)});
  }
  return mix;
}

BatchAssignment assign_nearest(const Eigen::MatrixXd& batch,
                               const GaussianMixture& mix) {
  if (batch.cols() != mix.dim) {
    throw Error(ErrorKind::kShapeMismatch, "batch width != mixture dim");
  }
  const Eigen::MatrixXd centers = mix.means();
  BatchAssignment out;
  out.batch_size = static_cast<int>(batch.rows());
  out.counts.assign(static_cast<size_t>(mix.k()), 0);
  out.indices.resize(static_cast<size_t>(batch.rows()));
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    const int j = nearest(batch.row(i), centers);
    out.indices[i] = j;
    ++out.counts[j];
  }
  return out;
}

GaussianMixture update_weights(const GaussianMixture& mix,
                               const BatchAssignment& assign,
                               double weight_floor) {
  if (static_cast<int>(assign.counts.size()) != mix.k()) {
    throw Error(ErrorKind::kShapeMismatch, "assignment has wrong cluster count");
  }
  if (assign.batch_size > mix.dataset_size) {
    throw Error(ErrorKind::kInvalidArgument, "batch larger than dataset");
  }
  const double n_total = static_cast<double>(mix.dataset_size);
  const double n_batch = static_cast<double>(assign.batch_size);
  Eigen::VectorXd w(mix.k());
  for (int j = 0; j < mix.k(); ++j) {
    w[j] = (mix.components[j].weight * (n_total - n_batch) + assign.counts[j]) /
           n_total;
  }
  floor_and_normalize(w, weight_floor);

  GaussianMixture out = mix;
  for (int j = 0; j < mix.k(); ++j) out.components[j].weight = w[j];
  out.stamp.reset();
  return out;
}

double blend_coefficient(const GaussianMixture& mix, int j, int n_j) {
  const double denom =
      mix.components[j].weight * static_cast<double>(mix.dataset_size);
  return std::clamp(static_cast<double>(n_j) / denom, 0.0, 1.0);
}

GaussianMixture update_covariance(const GaussianMixture& mix,
                                  const BatchAssignment& assign,
                                  const Eigen::MatrixXd& batch) {
  if (batch.cols() != mix.dim ||
      batch.rows() != static_cast<Eigen::Index>(assign.indices.size())) {
    throw Error(ErrorKind::kShapeMismatch, "batch does not match assignment");
  }
  const int k = mix.k();
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(k, mix.dim);
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    const int j = assign.indices[i];
    scatter.row(j) += (batch.row(i) - mix.components[j].mean.transpose())
                          .array()
                          .square()
                          .matrix();
  }

  GaussianMixture out = mix;
  for (int j = 0; j < k; ++j) {
    const int n_j = assign.counts[j];
    if (n_j == 0) continue;
    const double c = blend_coefficient(mix, j, n_j);
    const Eigen::VectorXd delta = scatter.row(j).transpose() / n_j;
    const Covariance<double>& old = mix.components[j].cov;
    if (old.is_diagonal()) {
      out.components[j].cov = Covariance<double>::diagonal(
          (1.0 - c) * old.diagonal_entries() + c * delta, old.ridge());
    } else {
      Eigen::MatrixXd blended = (1.0 - c) * old.dense();
      blended.diagonal() += c * delta;
      out.components[j].cov = Covariance<double>::full(blended, old.ridge());
    }
  }
  out.stamp = CovarianceStamp{assign.counts, assign.batch_size};
  return out;
}

Eigen::VectorXd responsibilities(const Eigen::VectorXd& z,
                                 const GaussianMixture& mix,
                                 const NoiseModel& noise) {
  Eigen::VectorXd log_terms(mix.k());
  for (int i = 0; i < mix.k(); ++i) {
    const auto& comp = mix.components[i];
    log_terms[i] =
        std::log(comp.weight) +
        gaussian_logpdf<double>(z, comp.mean,
                                comp.cov.plus_identity(noise.variance()));
  }
  return (log_terms.array() - log_sum_exp(log_terms)).exp().matrix();
}

double posterior_utility(const Eigen::VectorXd& z, const GaussianMixture& mix,
                         const NoiseModel& noise, int j) {
  if (j < 0 || j >= mix.k()) {
    throw Error(ErrorKind::kInvalidArgument, "component index out of range");
  }
  return responsibilities(z, mix, noise)[j];
}

nlohmann::json to_json(const GaussianMixture& mix) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : mix.components) {
    if (!c.cov.is_diagonal()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "only diagonal mixtures can be checkpointed");
    }
    const Eigen::VectorXd diag = c.cov.diagonal_entries();
    comps.push_back({{"weight", c.weight},
                     {"mean", std::vector<double>(c.mean.data(),
                                                  c.mean.data() + c.mean.size())},
                     {"cov_diag", std::vector<double>(diag.data(),
                                                      diag.data() + diag.size())},
                     {"ridge", c.cov.ridge()}});
  }
  return {{"dim", mix.dim},
          {"dataset_size", mix.dataset_size},
          {"components", std::move(comps)}};
}

GaussianMixture mixture_from_json(const nlohmann::json& doc) {
  try {
    GaussianMixture mix;
    mix.dim = doc.at("dim").get<Eigen::Index>();
    mix.dataset_size = doc.at("dataset_size").get<long>();
    for (const auto& c : doc.at("components")) {
      const auto mean = c.at("mean").get<std::vector<double>>();
      const auto cov = c.at("cov_diag").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(mean.size()) != mix.dim ||
          static_cast<Eigen::Index>(cov.size()) != mix.dim) {
        throw Error(ErrorKind::kShapeMismatch, "component dim mismatch");
      }
      mix.components.push_back(
          {c.at("weight").get<double>(),
           Eigen::Map<const Eigen::VectorXd>(mean.data(), mix.dim),
           Covariance<double>::diagonal(
               Eigen::Map<const Eigen::VectorXd>(cov.data(), mix.dim),
               c.value("ridge", 0.0))});
    }
    if (mix.components.empty()) {
      throw Error(ErrorKind::kParse, "mixture has no components");
    }
    return mix;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("mixture checkpoint: ") + e.what());
  }
}

}  // namespace cem
