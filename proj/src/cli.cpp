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

#include "cem/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "cem/seed.hpp"

namespace cem::cli {
namespace {

constexpr char kManifestFile[] = "manifest.json";

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path, ErrorKind missing) {
  std::ifstream in(path);
  if (!in) throw Error(missing, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

fs::path artifact(const RunManifest& m, const std::string& name) {
  for (const auto& [key, file] : m.artifacts) {
    if (key == name) {
      const fs::path p = m.output_dir / file;
      if (!fs::exists(p)) {
        throw Error(ErrorKind::kMissingArtifact, p.string() + " does not exist");
      }
      return p;
    }
  }
  throw Error(ErrorKind::kMissingArtifact,
              "manifest in " + m.output_dir.string() + " lists no '" + name + "'");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

NoiseModel path_noise(const TrainingConfig& cfg) {
  return {cfg.d_z, defense_injects_noise(cfg.defense) ? cfg.noise_std : 0.0};
}

constexpr int kSweepRefits = 8;
constexpr int kSweepRefitIters = 50;

SweepRow run_sweep_point(const RunConfig& base, double variance) {
  SweepRow row;
  row.variance = variance;
  RunConfig cfg = base;
  cfg.train.noise_std = std::sqrt(variance);
  const Dataset data = load_data(cfg.data);
  const TrainResult trained = train(cfg.train, data);
  const NoiseModel noise = path_noise(cfg.train);
  const Eigen::MatrixXd x_train = data.rows(data.train);
  // Mean L_C over refits of the final encoder's noisy features.
  const Eigen::MatrixXd clean = predict(trained.encoder, x_train);
  const NoiseModel bound_noise{cfg.train.d_z, cfg.train.noise_std};
  double l_c = 0.0;
  for (int r = 0; r < kSweepRefits; ++r) {
    const auto rr = static_cast<std::uint64_t>(r);
    FitOptions fit;
    fit.initial_means = trained.mixture.means();
    const GaussianMixture refit =
        fit_init(noise_inject(clean, noise, derive_seed(cfg.train.seed, {0x4e1f, rr})),
                 trained.mixture.k(), derive_seed(cfg.train.seed, {0x4e20, rr}),
                 kSweepRefitIters, fit);
    l_c += cem_loss(refit, bound_noise);
  }
  row.rel_cond_entropy = -l_c / kSweepRefits;
  const Eigen::MatrixXd x_test = data.rows(data.test);
  const NeuralModule attacker =
      train_attacker(trained.encoder, noise, x_train, cfg.attack);
  const AttackReport report = evaluate_attack(attacker, trained.encoder, noise,
                                              x_train, x_test, cfg.attack.seed, 0.0);
  row.mse_train = report.mse_train;
  row.mse_infer = report.mse_infer;
  row.accuracy = evaluate_utility(trained.encoder, trained.decoder, x_test,
                                  data.labels_of(data.test), noise,
                                  derive_seed(cfg.train.seed, {0xe7a1}));
  return row;
}

std::string sweep_row_csv(const SweepRow& r) {
  std::string err = r.error;
  std::replace(err.begin(), err.end(), ',', ';');
  std::replace(err.begin(), err.end(), '\n', ' ');
  return fmt_double(r.variance) + "," + fmt_double(r.rel_cond_entropy) + "," +
         fmt_double(r.mse_train) + "," + fmt_double(r.mse_infer) + "," +
         fmt_double(r.accuracy) + "," + err + "\n";
}

}  // namespace

Dataset load_data(const DataSpec& spec) {
  if (spec.source == "blobs") {
    return synth_blobs(spec.n_classes, spec.dim, spec.per_class, spec.spread,
                       spec.seed);
  }
  if (spec.source == "csv") {
    if (spec.csv_path.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "data_source=csv needs data_csv_path");
    }
    return load_csv(spec.csv_path, spec.n_classes, spec.seed);
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown data_source '" + spec.source + "'");
}

RunConfig run_config_from_json(const nlohmann::json& doc, RunConfig cfg) {
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "config must be an object");
  cfg.train = training_config_from_json(doc, cfg.train);
  nlohmann::json attack = nlohmann::json::object();
  for (const auto& [key, value] : doc.items()) {
    if (key.rfind("attack_", 0) == 0) attack[key.substr(7)] = value;
  }
  cfg.attack = attack_config_from_json(attack, cfg.attack);
  try {
    cfg.data.source = doc.value("data_source", cfg.data.source);
    cfg.data.n_classes = doc.value("data_n_classes", cfg.data.n_classes);
    cfg.data.dim = doc.value("data_dim", cfg.data.dim);
    cfg.data.per_class = doc.value("data_per_class", cfg.data.per_class);
    cfg.data.spread = doc.value("data_spread", cfg.data.spread);
    cfg.data.seed = doc.value("data_seed", cfg.data.seed);
    cfg.data.csv_path = doc.value("data_csv_path", cfg.data.csv_path);
    if (doc.contains("run_id")) cfg.run_id = doc.at("run_id").get<std::string>();
    cfg.h_x = doc.value("h_x", cfg.h_x);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("run config: ") + e.what());
  }
  return cfg;
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json doc = to_json(cfg.train);
  const nlohmann::json attack = to_json(cfg.attack);
  for (const auto& [key, value] : attack.items()) {
    doc["attack_" + key] = value;
  }
  doc["data_source"] = cfg.data.source;
  doc["data_n_classes"] = cfg.data.n_classes;
  doc["data_dim"] = cfg.data.dim;
  doc["data_per_class"] = cfg.data.per_class;
  doc["data_spread"] = cfg.data.spread;
  doc["data_seed"] = cfg.data.seed;
  doc["data_csv_path"] = cfg.data.csv_path;
  doc["h_x"] = cfg.h_x;
  if (cfg.run_id) doc["run_id"] = *cfg.run_id;
  return doc;
}

RunConfig load_run_config(const fs::path& path) {
  return run_config_from_json(read_json(path, ErrorKind::kIo));
}

std::string resolve_run_id(const RunConfig& cfg) {
  if (cfg.run_id) return *cfg.run_id;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json(cfg).dump())));
  return std::string("run-") + buf + "-s" + std::to_string(cfg.train.seed);
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json artifacts = nlohmann::json::object();
  for (const auto& [name, file] : m.artifacts) artifacts[name] = file;
  return {{"run_id", m.run_id},
          {"config", to_json(m.config)},
          {"artifacts", std::move(artifacts)}};
}

RunManifest load_manifest(const fs::path& run_dir) {
  const nlohmann::json doc =
      read_json(run_dir / kManifestFile, ErrorKind::kMissingArtifact);
  RunManifest m;
  try {
    m.run_id = doc.at("run_id").get<std::string>();
    m.config = run_config_from_json(doc.at("config"));
    for (const auto& [name, file] : doc.at("artifacts").items()) {
      m.artifacts.emplace_back(name, file.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, "manifest: " + std::string(e.what()));
  }
  m.output_dir = run_dir;
  return m;
}

std::string history_csv(const std::string& run_id,
                        const std::vector<LossBreakdown>& history) {
  std::string out = "# run_id=" + run_id + "\n";
  out += "epoch,l_d,l_c,total,accuracy,rel_cond_entropy\n";
  for (const auto& h : history) {
    out += std::to_string(h.epoch) + "," + fmt_double(h.l_d) + "," +
           fmt_double(h.l_c) + "," + fmt_double(h.total) + "," +
           fmt_double(h.accuracy) + "," + fmt_double(-h.l_c) + "\n";
  }
  return out;
}

RunManifest cmd_train(const RunConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const Dataset data = load_data(cfg.data);
  const TrainResult trained = train(cfg.train, data);

  RunManifest m;
  m.run_id = resolve_run_id(cfg);
  m.config = cfg;
  m.output_dir = out_dir;
  write_json(out_dir / "encoder.json", to_json(trained.encoder));
  write_json(out_dir / "decoder.json", to_json(trained.decoder));
  write_text(out_dir / "history.csv", history_csv(m.run_id, trained.history));
  m.artifacts = {{"encoder", "encoder.json"},
                 {"decoder", "decoder.json"},
                 {"history", "history.csv"}};
  if (trained.mixture.k() > 0) {
    write_json(out_dir / "mixture.json", to_json(trained.mixture));
    m.artifacts.emplace_back("mixture", "mixture.json");
  }
  write_json(out_dir / kManifestFile, to_json(m));
  return m;
}

AttackOutcome cmd_attack(const fs::path& run_dir,
                         std::optional<AttackConfig> override_cfg) {
  RunManifest m = load_manifest(run_dir);
  if (override_cfg) m.config.attack = *override_cfg;
  const NeuralModule encoder =
      module_from_json(read_json(artifact(m, "encoder"), ErrorKind::kMissingArtifact));
  const NeuralModule decoder =
      module_from_json(read_json(artifact(m, "decoder"), ErrorKind::kMissingArtifact));
  const Dataset data = load_data(m.config.data);
  const NoiseModel noise = path_noise(m.config.train);

  double floor = 0.0;
  for (const auto& [name, file] : m.artifacts) {
    if (name != "mixture") continue;
    const GaussianMixture mix =
        mixture_from_json(read_json(artifact(m, "mixture"), ErrorKind::kMissingArtifact));
    floor = make_bounds_report(mix, NoiseModel{mix.dim, m.config.train.noise_std},
                               m.config.h_x, static_cast<int>(data.dim()))
                .mse_floor;
  }

  const Eigen::MatrixXd x_train = data.rows(data.train);
  const Eigen::MatrixXd x_test = data.rows(data.test);
  const NeuralModule attacker = train_attacker(encoder, noise, x_train, m.config.attack);
  AttackOutcome outcome;
  outcome.report = evaluate_attack(attacker, encoder, noise, x_train, x_test,
                                   m.config.attack.seed, floor);
  outcome.accuracy = evaluate_utility(encoder, decoder, x_test,
                                      data.labels_of(data.test), noise,
                                      derive_seed(m.config.train.seed, {0xe7a1}));

  write_json(run_dir / "attacker.json", to_json(attacker));
  nlohmann::json report = to_json(outcome.report);
  report["accuracy"] = outcome.accuracy;
  report["run_id"] = m.run_id;
  report["attack_config"] = to_json(m.config.attack);
  write_json(run_dir / "attack_report.json", report);

  const AttackReport& r = outcome.report;
  write_text(run_dir / "attack.csv",
             "# run_id=" + m.run_id + "\n" +
                 "mse_train,mse_infer,psnr_train,psnr_infer,floor,accuracy\n" +
                 fmt_double(r.mse_train) + "," + fmt_double(r.mse_infer) + "," +
                 fmt_double(r.psnr_train) + "," + fmt_double(r.psnr_infer) + "," +
                 fmt_double(r.floor) + "," + fmt_double(outcome.accuracy) + "\n");
  return outcome;
}

BoundsReport cmd_bounds(const fs::path& run_dir) {
  const RunManifest m = load_manifest(run_dir);
  const GaussianMixture mix =
      mixture_from_json(read_json(artifact(m, "mixture"), ErrorKind::kMissingArtifact));
  const NeuralModule encoder =
      module_from_json(read_json(artifact(m, "encoder"), ErrorKind::kMissingArtifact));
  const BoundsReport report =
      make_bounds_report(mix, NoiseModel{mix.dim, m.config.train.noise_std},
                         m.config.h_x, static_cast<int>(encoder.in_dim()));
  nlohmann::json doc = to_json(report);
  doc["run_id"] = m.run_id;
  write_json(run_dir / "bounds.json", doc);
  return report;
}

GaussianBounds gaussian_fixture_bounds(const JointGaussianSpec& spec) {
  GaussianBounds b;
  b.cond_entropy = analytic_cond_entropy(spec);
  b.mse_floor = mse_floor(b.cond_entropy, spec.x_dim());
  b.minimal_mse = minimal_mse_oracle(spec);
  return b;
}

std::vector<double> default_variance_grid() {
  return {0.01, 0.025, 0.05, 0.1, 0.2, 0.3};
}

std::vector<SweepRow> cmd_sweep(const RunConfig& base,
                                const std::vector<double>& grid,
                                const fs::path& out_dir, int threads) {
  if (grid.empty()) throw Error(ErrorKind::kInvalidArgument, "empty variance grid");
  for (double v : grid) {
    if (!(v > 0.0)) throw Error(ErrorKind::kInvalidArgument, "variances must be > 0");
  }
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "sweep.csv", std::ios::binary);
  if (!csv) throw Error(ErrorKind::kIo, "cannot write sweep.csv");
  csv << "# run_id=" << resolve_run_id(base) << "\n"
      << "variance,rel_cond_entropy,mse_train,mse_infer,accuracy,error\n";
  csv.flush();

  std::vector<SweepRow> rows(grid.size());
  std::vector<bool> done(grid.size(), false);
  size_t next_to_write = 0;
  std::mutex mu;
  std::atomic<size_t> next_job{0};

  auto worker = [&] {
    for (size_t i = next_job++; i < grid.size(); i = next_job++) {
      SweepRow row;
      try {
        row = run_sweep_point(base, grid[i]);
      } catch (const std::exception& e) {
        row.variance = grid[i];
        row.rel_cond_entropy = row.mse_train = row.mse_infer = row.accuracy =
            std::nan("");
        row.error = e.what();
      }
      std::lock_guard<std::mutex> lock(mu);
      rows[i] = std::move(row);
      done[i] = true;
      while (next_to_write < grid.size() && done[next_to_write]) {
        csv << sweep_row_csv(rows[next_to_write++]);
        csv.flush();
      }
    }
  };

  const int n_workers =
      std::clamp(threads, 1, static_cast<int>(grid.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

nlohmann::json cmd_report(const fs::path& out_dir) {
  if (!fs::is_directory(out_dir)) {
    throw Error(ErrorKind::kMissingArtifact, out_dir.string() + " is not a directory");
  }
  std::vector<fs::path> run_dirs;
  for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
    if (entry.is_regular_file() && entry.path().filename() == kManifestFile) {
      run_dirs.push_back(entry.path().parent_path());
    }
  }
  std::sort(run_dirs.begin(), run_dirs.end());

  nlohmann::json runs = nlohmann::json::array();
  std::string csv =
      "run_id,lambda,noise_std,epochs,l_d,l_c,accuracy,rel_cond_entropy,"
      "mse_train,mse_infer,psnr_infer,floor\n";
  for (const auto& dir : run_dirs) {
    const RunManifest m = load_manifest(dir);
    nlohmann::json row{{"run_id", m.run_id},
                       {"dir", fs::relative(dir, out_dir).string()},
                       {"lambda", m.config.train.lambda},
                       {"noise_std", m.config.train.noise_std},
                       {"epochs", m.config.train.epochs}};
    // Last epoch of the history CSV.
    std::ifstream hist(dir / "history.csv");
    std::string line, last;
    while (std::getline(hist, line)) {
      if (!line.empty() && line[0] != '#' && line.rfind("epoch", 0) != 0) last = line;
    }
    std::vector<double> cols;
    std::stringstream ss(last);
    for (std::string f; std::getline(ss, f, ',');) cols.push_back(std::strtod(f.c_str(), nullptr));
    const double nan = std::nan("");
    const bool has_hist = cols.size() == 6;
    row["l_d"] = has_hist ? cols[1] : nan;
    row["l_c"] = has_hist ? cols[2] : nan;
    row["accuracy"] = has_hist ? cols[4] : nan;
    row["rel_cond_entropy"] = has_hist ? cols[5] : nan;
    nlohmann::json attack;
    if (fs::exists(dir / "attack_report.json")) {
      attack = read_json(dir / "attack_report.json", ErrorKind::kMissingArtifact);
    }
    auto get = [&](const char* key) {
      return attack.is_object() && attack.contains(key) ? attack[key].get<double>()
                                                        : nan;
    };
    row["mse_train"] = get("mse_train");
    row["mse_infer"] = get("mse_infer");
    row["psnr_infer"] = get("psnr_infer");
    row["floor"] = get("floor");
    csv += m.run_id + "," + fmt_double(m.config.train.lambda) + "," +
           fmt_double(m.config.train.noise_std) + "," +
           std::to_string(m.config.train.epochs);
    for (const char* key : {"l_d", "l_c", "accuracy", "rel_cond_entropy",
                            "mse_train", "mse_infer", "psnr_infer", "floor"}) {
      csv += "," + fmt_double(row[key].is_number() ? row[key].get<double>() : nan);
    }
    csv += "\n";
    runs.push_back(std::move(row));
  }
  write_text(out_dir / "report.csv", csv);
  return {{"runs", std::move(runs)}};
}

int worker_threads() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("CEM_LAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) return std::min(cap, hw);
  }
  return hw;
}

namespace {

struct CommonFlags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<double> noise_std;
  std::optional<int> k;
  std::optional<int> epochs;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file (flat key-value)");
  cmd->add_option("--out", f.out, "Output/run directory")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Training and attack seed");
  cmd->add_option("--lambda", f.lambda, "Weight of the entropy penalty");
  cmd->add_option("--noise-std", f.noise_std, "Feature noise standard deviation");
  cmd->add_option("--k", f.k, "Mixture components (0 = 3 x classes)");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
}

// Config file first, then flags on top.
RunConfig resolve_config(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) {
    if (!fs::exists(f.config)) {
      throw Error(ErrorKind::kIo, "config file '" + f.config + "' not found");
    }
    cfg = load_run_config(f.config);
  }
  if (f.seed) cfg.train.seed = cfg.attack.seed = *f.seed;
  if (f.lambda) cfg.train.lambda = *f.lambda;
  if (f.noise_std) cfg.train.noise_std = *f.noise_std;
  if (f.k) cfg.train.k = *f.k;
  if (f.epochs) cfg.train.epochs = *f.epochs;
  return cfg;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kUnknownDefense:
      return kUsageError;
    default:
      return kRuntimeFailure;
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Conditional-entropy defense lab for split inference"};
  app.require_subcommand(1);

  CommonFlags train_f, attack_f, bounds_f, sweep_f, report_f;
  CLI::App* train_cmd = app.add_subcommand("train", "Train encoder/decoder");
  add_common(train_cmd, train_f);
  CLI::App* attack_cmd = app.add_subcommand("attack", "Train and evaluate an inversion attacker");
  add_common(attack_cmd, attack_f);
  std::optional<int> attack_epochs;
  attack_cmd->add_option("--attack-epochs", attack_epochs, "Attacker epochs");
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "Report entropy and MSE bounds");
  add_common(bounds_cmd, bounds_f);
  std::string gaussian_spec;
  bounds_cmd->add_option("--gaussian-spec", gaussian_spec,
                         "Jointly Gaussian fixture (JSON) instead of a run");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Noise-variance sweep");
  add_common(sweep_cmd, sweep_f);
  std::vector<double> grid;
  sweep_cmd->add_option("--grid", grid, "Noise variances")->delimiter(',');
  CLI::App* report_cmd = app.add_subcommand("report", "Aggregate runs under --out");
  add_common(report_cmd, report_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  // Configuration errors are usage errors.
  RunConfig cfg;
  CommonFlags* active = nullptr;
  if (*train_cmd) active = &train_f;
  if (*attack_cmd) active = &attack_f;
  if (*bounds_cmd) active = &bounds_f;
  if (*sweep_cmd) active = &sweep_f;
  if (*report_cmd) active = &report_f;
  try {
    cfg = resolve_config(*active);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }

  const fs::path out = active->out;
  try {
    if (*train_cmd) {
      const RunManifest m = cmd_train(cfg, out);
      std::cout << "run " << m.run_id << " written to " << out.string() << "\n";
    } else if (*attack_cmd) {
      std::optional<AttackConfig> override_cfg;
      if (attack_epochs || attack_f.seed) {
        override_cfg = load_manifest(out).config.attack;
        if (attack_epochs) override_cfg->epochs = *attack_epochs;
        if (attack_f.seed) override_cfg->seed = *attack_f.seed;
      }
      const AttackOutcome o = cmd_attack(out, override_cfg);
      std::cout << to_json(o.report).dump() << "\n";
    } else if (*bounds_cmd) {
      if (!gaussian_spec.empty()) {
        const GaussianBounds b = gaussian_fixture_bounds(
            joint_gaussian_from_json(read_json(gaussian_spec, ErrorKind::kIo)));
        const nlohmann::json doc{{"cond_entropy", b.cond_entropy},
                                 {"mse_floor", b.mse_floor},
                                 {"minimal_mse", b.minimal_mse}};
        fs::create_directories(out);
        write_json(out / "gaussian_bounds.json", doc);
        std::cout << doc.dump() << "\n";
      } else {
        std::cout << to_json(cmd_bounds(out)).dump() << "\n";
      }
    } else if (*sweep_cmd) {
      const auto rows = cmd_sweep(cfg, grid.empty() ? default_variance_grid() : grid,
                                  out, worker_threads());
      std::cout << rows.size() << " sweep rows written to "
                << (out / "sweep.csv").string() << "\n";
    } else if (*report_cmd) {
      std::cout << cmd_report(out).dump(2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}

}  // namespace cem::cli
