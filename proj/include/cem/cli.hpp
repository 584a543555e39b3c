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

// Command implementations behind the cem_lab executable. Each command reads
// and writes artifacts under an output directory; see README.md for layout.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cem/adversary.hpp"
#include "cem/bounds.hpp"
#include "cem/data.hpp"
#include "cem/trainer.hpp"
#include "json.hpp"

namespace cem::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUsageError = 2 };

struct DataSpec {
  std::string source = "blobs";  // "blobs" or "csv"
  int n_classes = 3;
  int dim = 16;
  int per_class = 200;
  double spread = 0.1;
  std::uint64_t seed = 0;
  std::string csv_path;
};

Dataset load_data(const DataSpec& spec);

struct RunConfig {
  TrainingConfig train;
  AttackConfig attack;
  DataSpec data;
  std::optional<std::string> run_id;
  double h_x = 0.0;  // H(x) stand-in for the absolute MSE floor
};

/// Flat key-value document; attack keys carry an `attack_` prefix and data
/// keys a `data_` prefix (e.g. `data_spread`, `attack_epochs`).
RunConfig run_config_from_json(const nlohmann::json& doc, RunConfig base = {});
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load_run_config(const fs::path& path);

/// Stable id derived from the configuration, so identical configs produce
/// identical outputs.
std::string resolve_run_id(const RunConfig& cfg);

struct RunManifest {
  std::string run_id;
  RunConfig config;
  fs::path output_dir;
  std::vector<std::pair<std::string, std::string>> artifacts;  // name, file
};

nlohmann::json to_json(const RunManifest& m);
RunManifest load_manifest(const fs::path& run_dir);

/// History CSV bytes for a training run.
std::string history_csv(const std::string& run_id,
                        const std::vector<LossBreakdown>& history);

RunManifest cmd_train(const RunConfig& cfg, const fs::path& out_dir);

struct AttackOutcome {
  AttackReport report;
  double accuracy = 0.0;  // task accuracy on the test split under noise
};

AttackOutcome cmd_attack(const fs::path& run_dir,
                         std::optional<AttackConfig> override_cfg = {});

BoundsReport cmd_bounds(const fs::path& run_dir);

struct GaussianBounds {
  double cond_entropy = 0.0;
  double mse_floor = 0.0;
  double minimal_mse = 0.0;
};

/// Bounds for a jointly Gaussian fixture, where H(x|z) is known exactly.
GaussianBounds gaussian_fixture_bounds(const JointGaussianSpec& spec);

struct SweepRow {
  double variance = 0.0;
  double rel_cond_entropy = 0.0;
  double mse_train = 0.0;
  double mse_infer = 0.0;
  double accuracy = 0.0;
  std::string error;
};

std::vector<double> default_variance_grid();

/// Trains one fresh model and attacker per noise variance. Rows are written
/// to `out_dir/sweep.csv` in grid order as soon as they are available.
std::vector<SweepRow> cmd_sweep(const RunConfig& base,
                                const std::vector<double>& grid,
                                const fs::path& out_dir, int threads);

/// Aggregates every run under `out_dir` into `out_dir/report.csv`.
nlohmann::json cmd_report(const fs::path& out_dir);

/// Worker cap from CEM_LAB_THREADS, defaulting to the hardware concurrency.
int worker_threads();

/// Entry point used by the executable; returns the process exit code.
int run(int argc, char** argv);

}  // namespace cem::cli
