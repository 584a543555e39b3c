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

#include <Eigen/Core>

#include "cem/numerics.hpp"

namespace cem {

// Additive isotropic corruption z = zhat + eps, eps ~ N(0, std^2 I).
struct NoiseModel {
  Eigen::Index dim = 0;
  double std = 0.0;

  double variance() const { return std * std; }
  Covariance<double> cov() const {
    return Covariance<double>::isotropic(dim, variance(), 0.0);
  }
};

}  // namespace cem
