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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cem/bounds.hpp"

namespace cem {

// Classification data with inputs normalized to [0, 1].
struct Dataset {
  Eigen::MatrixXd inputs;  // N x d
  Eigen::VectorXi labels;  // N
  int n_classes = 0;
  std::vector<int> train;
  std::vector<int> test;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
  Eigen::MatrixXd rows(const std::vector<int>& idx) const;
  Eigen::VectorXi labels_of(const std::vector<int>& idx) const;
};

/// Per-column min-max scaling to [0, 1]; constant columns map to 0.
Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& x);

/// Fills `data.train` / `data.test` with a per-class shuffled split.
void stratified_split(Dataset& data, double train_fraction, std::uint64_t seed);

/// Gaussian blobs around the scaled simplex vertices e_0..e_{n-1} in R^d,
/// isotropic within-class noise `spread`, normalized, 80/20 stratified.
Dataset synth_blobs(int n_classes, int d, int per_class, double spread,
                    std::uint64_t seed);

/// Rows `label,v1,...,vd`; an optional header line is skipped. Values already
/// inside [0, 1] are kept, otherwise columns are min-max normalized.
Dataset load_csv(const std::string& path, int n_classes,
                 std::uint64_t split_seed = 0);

/// Writes `label,v1,...` with 17 significant digits.
void write_csv(const std::string& path, const Dataset& data);

/// Draws n samples of x ~ N(0, spec.x_cov); rows are samples.
Eigen::MatrixXd sample_joint_gaussian_inputs(const JointGaussianSpec& spec,
                                             int n, std::uint64_t seed);

}  // namespace cem
