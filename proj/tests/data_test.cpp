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
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <Eigen/QR>
#include <gtest/gtest.h>

#include "test_util.hpp"

namespace cem {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("cem_data_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

TEST(SynthBlobsTest, ZeroSpreadCollapsesClasses) {
  const Dataset d = synth_blobs(3, 5, 10, 0.0, 1);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      if (d.labels[i] == d.labels[j]) {
        EXPECT_EQ(d.inputs.row(i), d.inputs.row(j));
      }
    }
  }
}

TEST(SynthBlobsTest, LinearlySeparable) {
  const Dataset d = synth_blobs(3, 8, 200, 0.05, 2);
  // Least-squares one-hot probe with a bias column.
  Eigen::MatrixXd a(d.size(), d.dim() + 1);
  a << d.inputs, Eigen::VectorXd::Ones(d.size());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(d.size(), 3);
  for (Eigen::Index i = 0; i < d.size(); ++i) y(i, d.labels[i]) = 1.0;
  const Eigen::MatrixXd w = a.colPivHouseholderQr().solve(y);
  const Eigen::MatrixXd scores = a * w;
  int correct = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    Eigen::Index arg;
    scores.row(i).maxCoeff(&arg);
    correct += arg == d.labels[i];
  }
  EXPECT_GE(correct / static_cast<double>(d.size()), 0.99);
}

TEST(SynthBlobsTest, SameSeedIsBitIdentical) {
  const Dataset a = synth_blobs(3, 16, 50, 0.1, 9);
  const Dataset b = synth_blobs(3, 16, 50, 0.1, 9);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.inputs, synth_blobs(3, 16, 50, 0.1, 10).inputs);
}

TEST(SynthBlobsTest, NormalizedAndSplit) {
  const Dataset d = synth_blobs(4, 6, 25, 0.2, 3);
  EXPECT_EQ(d.size(), 100);
  EXPECT_GE(d.inputs.minCoeff(), 0.0);
  EXPECT_LE(d.inputs.maxCoeff(), 1.0);
  EXPECT_EQ(d.train.size(), 80u);
  EXPECT_EQ(d.test.size(), 20u);
  std::set<int> all(d.train.begin(), d.train.end());
  for (int i : d.test) EXPECT_EQ(all.count(i), 0u);
  all.insert(d.test.begin(), d.test.end());
  EXPECT_EQ(all.size(), 100u);
}

TEST(SynthBlobsTest, RejectsTinyClasses) {
  EXPECT_THROW(synth_blobs(3, 5, 1, 0.1, 0), Error);
}

TEST(StratifiedSplitTest, PreservesClassFrequencies) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset d;
    d.n_classes = 4;
    const int n = 30 + static_cast<int>(rng() % 100);
    d.inputs = Eigen::MatrixXd::Zero(n, 1);
    d.labels.resize(n);
    for (int i = 0; i < n; ++i) d.labels[i] = static_cast<int>(rng() % 4);
    const double frac = 0.5 + 0.4 * (trial % 5) / 4.0;
    stratified_split(d, frac, trial);
    for (int c = 0; c < 4; ++c) {
      const long total = (d.labels.array() == c).count();
      const long in_train = std::count_if(d.train.begin(), d.train.end(),
                                          [&](int i) { return d.labels[i] == c; });
      EXPECT_LE(std::abs(in_train - frac * total), 1.0);
    }
  }
}

TEST(NormalizeTest, Idempotent) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = 7.0 * testing::random_gaussian_matrix(40, 6, rng);
  const Eigen::MatrixXd once = minmax_normalize(x);
  EXPECT_LT((minmax_normalize(once) - once).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_DOUBLE_EQ(once.minCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(once.maxCoeff(), 1.0);
}

TEST(NormalizeTest, ConstantColumnMapsToZero) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  EXPECT_TRUE(minmax_normalize(x).col(1).isZero(0.0));
}

TEST(LoadCsvTest, TwoRowFile) {
  TempDir dir;
  write_text(dir.file("a.csv"), "label,a,b\n0,0.1,0.2\n1,0.3,0.4\n");
  const Dataset d = load_csv(dir.file("a.csv"), 2);
  EXPECT_EQ(d.size(), 2);
  EXPECT_EQ(d.dim(), 2);
  EXPECT_EQ(d.labels, Eigen::Vector2i(0, 1));
  EXPECT_DOUBLE_EQ(d.inputs(1, 0), 0.3);
}

TEST(LoadCsvTest, RaggedRowNamesTheLine) {
  TempDir dir;
  write_text(dir.file("r.csv"), "0,0.1,0.2\n1,0.3\n");
  try {
    load_csv(dir.file("r.csv"), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShapeMismatch);
    EXPECT_NE(std::string(e.what()).find("r.csv:2:"), std::string::npos) << e.what();
  }
}

TEST(LoadCsvTest, LabelOutOfRange) {
  TempDir dir;
  write_text(dir.file("l.csv"), "0,0.1\n5,0.3\n");
  try {
    load_csv(dir.file("l.csv"), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLabelOutOfRange);
  }
}

TEST(LoadCsvTest, GarbageValueIsParseError) {
  TempDir dir;
  write_text(dir.file("g.csv"), "0,0.1\n1,abc\n");
  try {
    load_csv(dir.file("g.csv"), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
  }
}

TEST(LoadCsvTest, MissingFileIsIoError) {
  try {
    load_csv("/nonexistent/cem/data.csv", 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(LoadCsvTest, OutOfRangeValuesAreNormalized) {
  TempDir dir;
  write_text(dir.file("n.csv"), "0,2\n1,4\n0,6\n");
  const Dataset d = load_csv(dir.file("n.csv"), 2);
  EXPECT_DOUBLE_EQ(d.inputs(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(d.inputs(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(d.inputs(2, 0), 1.0);
}

TEST(LoadCsvTest, RoundTripOfSynthBlobs) {
  TempDir dir;
  const Dataset d = synth_blobs(3, 7, 30, 0.1, 11);
  write_csv(dir.file("blobs.csv"), d);
  const Dataset back = load_csv(dir.file("blobs.csv"), 3);
  ASSERT_EQ(back.size(), d.size());
  EXPECT_LE((back.inputs - d.inputs).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(back.labels, d.labels);
}

TEST(JointGaussianSamplingTest, EmpiricalCovarianceMatches) {
  std::mt19937_64 rng(6);
  const JointGaussianSpec spec = testing::random_joint_gaussian(rng, 3, 2);
  const Eigen::MatrixXd x = sample_joint_gaussian_inputs(spec, 200000, 1);
  const Eigen::MatrixXd cov = x.transpose() * x / x.rows();
  EXPECT_LT((cov - spec.x_cov.dense()).cwiseAbs().maxCoeff(),
            0.03 * spec.x_cov.dense().cwiseAbs().maxCoeff());
}

}  // namespace
}  // namespace cem
