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

#include "cem/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace cem {

Eigen::MatrixXd Dataset::rows(const std::vector<int>& idx) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), inputs.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(i) = inputs.row(idx[i]);
  return out;
}

Eigen::VectorXi Dataset::labels_of(const std::vector<int>& idx) const {
  Eigen::VectorXi out(static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
  return out;
}

Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double lo = x.col(c).minCoeff();
    const double range = x.col(c).maxCoeff() - lo;
    if (range > 0.0) {
      out.col(c) = (x.col(c).array() - lo) / range;
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

void stratified_split(Dataset& data, double train_fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> by_class(static_cast<size_t>(data.n_classes));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    by_class[data.labels[i]].push_back(static_cast<int>(i));
  }
  data.train.clear();
  data.test.clear();
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_train = static_cast<size_t>(
        std::lround(train_fraction * static_cast<double>(members.size())));
    data.train.insert(data.train.end(), members.begin(),
                      members.begin() + static_cast<long>(n_train));
    data.test.insert(data.test.end(),
                     members.begin() + static_cast<long>(n_train), members.end());
  }
  std::sort(data.train.begin(), data.train.end());
  std::sort(data.test.begin(), data.test.end());
}

Dataset synth_blobs(int n_classes, int d, int per_class, double spread,
                    std::uint64_t seed) {
  if (n_classes < 1 || n_classes > d) {
    throw Error(ErrorKind::kInvalidArgument, "synth_blobs needs 1 <= n_classes <= d");
  }
  if (per_class < 2) {
    throw Error(ErrorKind::kInvalidArgument, "synth_blobs needs per_class >= 2");
  }
  if (spread < 0.0) throw Error(ErrorKind::kInvalidArgument, "spread must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset data;
  data.n_classes = n_classes;
  data.inputs.resize(static_cast<Eigen::Index>(n_classes) * per_class, d);
  data.labels.resize(data.inputs.rows());
  Eigen::Index row = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int p = 0; p < per_class; ++p, ++row) {
      for (int t = 0; t < d; ++t) {
        data.inputs(row, t) = (t == c ? 1.0 : 0.0) + spread * normal(rng);
      }
      data.labels[row] = c;
    }
  }
  data.inputs = minmax_normalize(data.inputs);
  stratified_split(data, 0.8, seed ^ 0x9e3779b97f4a7c15ULL);
  return data;
}

Dataset load_csv(const std::string& path, int n_classes,
                 std::uint64_t split_seed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  if (n_classes < 1) throw Error(ErrorKind::kInvalidArgument, "n_classes >= 1");

  std::vector<std::vector<double>> values;
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  long width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);

    int label = 0;
    try {
      size_t used = 0;
      label = std::stoi(fields.at(0), &used);
      if (used != fields[0].size()) throw std::invalid_argument("label");
    } catch (const std::exception&) {
      if (values.empty() && labels.empty()) continue;  // header
      throw Error(ErrorKind::kParse,
                  path + ":" + std::to_string(line_no) + ": bad label");
    }
    if (label < 0 || label >= n_classes) {
      throw Error(ErrorKind::kLabelOutOfRange,
                  path + ":" + std::to_string(line_no) + ": label " +
                      std::to_string(label));
    }
    const long row_width = static_cast<long>(fields.size()) - 1;
    if (width < 0) width = row_width;
    if (row_width != width || row_width < 1) {
      throw Error(ErrorKind::kShapeMismatch,
                  path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(width) + " values, got " +
                      std::to_string(row_width));
    }
    std::vector<double> row;
    for (size_t f = 1; f < fields.size(); ++f) {
      try {
        size_t used = 0;
        row.push_back(std::stod(fields[f], &used));
        if (used != fields[f].size()) throw std::invalid_argument("value");
      } catch (const std::exception&) {
        throw Error(ErrorKind::kParse, path + ":" + std::to_string(line_no) +
                                           ": bad value '" + fields[f] + "'");
      }
    }
    values.push_back(std::move(row));
    labels.push_back(label);
  }
  if (values.empty()) throw Error(ErrorKind::kParse, path + ": no data rows");

  Dataset data;
  data.n_classes = n_classes;
  data.inputs.resize(static_cast<Eigen::Index>(values.size()), width);
  data.labels.resize(data.inputs.rows());
  for (size_t i = 0; i < values.size(); ++i) {
    for (long t = 0; t < width; ++t) data.inputs(i, t) = values[i][t];
    data.labels[i] = labels[i];
  }
  if (!data.inputs.allFinite()) {
    throw Error(ErrorKind::kParse, path + ": non-finite value");
  }
  if (data.inputs.minCoeff() < 0.0 || data.inputs.maxCoeff() > 1.0) {
    data.inputs = minmax_normalize(data.inputs);
  }
  stratified_split(data, 0.8, split_seed);
  return data;
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  char buf[40];
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (Eigen::Index t = 0; t < data.dim(); ++t) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.inputs(i, t));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

Eigen::MatrixXd sample_joint_gaussian_inputs(const JointGaussianSpec& spec,
                                             int n, std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::MatrixXd lower = spec.x_cov.factor();
  Eigen::MatrixXd g(n, spec.x_dim());
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index t = 0; t < g.cols(); ++t) g(i, t) = normal(rng);
  }
  return g * lower.transpose();
}

}  // namespace cem
