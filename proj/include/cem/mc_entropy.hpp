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

#include "cem/mixture.hpp"
#include "cem/noise.hpp"

namespace cem {

struct McEstimate {
  double value = 0.0;      // nats
  double std_error = 0.0;
  long n_samples = 0;
  std::uint64_t seed = 0;
};

/// Monte-Carlo estimate of H(z) for z ~ sum_i pi_i N(mu_i, Sigma_i + Sigma_p):
/// -(1/n) sum_s log p(z_s) over samples drawn from the mixture itself.
/// Deterministic for a fixed seed. Requires n_samples >= 1e4.
McEstimate mc_entropy(const GaussianMixture& mix, const NoiseModel& noise,
                      long n_samples, std::uint64_t seed);

}  // namespace cem
