/*
 * Copyright 2026 The specrf Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "specrf/dataio.hpp"
#include "specrf/errors.hpp"
#include "test_support.hpp"

namespace specrf::dataio {
namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("specrf_dataio_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path file(const std::string& name, const std::string& content) {
    const auto p = dir_ / name;
    write_text(p, content);
    return p;
  }
  std::filesystem::path dir_;
};

using LoadCsv = TempDir;
using Results = TempDir;

CsvSelection two_features() {
  CsvSelection s;
  s.label_column = 0;
  s.feature_columns = {1, 2};
  return s;
}

TEST_F(LoadCsv, SmallFile) {
  const auto p = file("small.csv", "1,0.5,0.5\n0,1,0\n1,0,1");
  const Dataset d = load_csv(p, two_features());
  ASSERT_EQ(d.size(), 3);
  EXPECT_EQ(d.inputs.cols(), 2);
  EXPECT_EQ(d.outputs(1, 0), 0.0);
  EXPECT_EQ(d.inputs(0, 1), 0.5);
  EXPECT_EQ(d.inputs(2, 1), 1.0);
}

TEST_F(LoadCsv, RowLimitKeepsLeadingRows) {
  const auto p = file("small.csv", "1,0.5,0.5\n0,1,0\n1,0,1\n");
  CsvSelection s = two_features();
  s.row_limit = 2;
  const Dataset d = load_csv(p, s);
  ASSERT_EQ(d.size(), 2);
  EXPECT_EQ(d.inputs(1, 0), 1.0);
  s.row_limit = 0;
  EXPECT_THROW(load_csv(p, s), DomainError);
}

TEST_F(LoadCsv, NonFiniteCellNamesRow) {
  const auto p = file("bad.csv", "1,NaN,0.5\n0,1,0\n");
  try {
    load_csv(p, two_features());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 1);
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST_F(LoadCsv, RaggedRowAndMissingFile) {
  EXPECT_THROW(load_csv(file("ragged.csv", "1,2,3\n1,2\n"), two_features()), ParseError);
  EXPECT_THROW(load_csv(dir_ / "absent.csv", two_features()), IoError);
  EXPECT_THROW(load_csv(file("narrow.csv", "1,2\n"), two_features()), DomainError);
}

TEST_F(LoadCsv, DefaultSelectionTakesFourteenColumns) {
  std::string row = "1";
  for (int k = 1; k <= 18; ++k) row += "," + std::to_string(k);
  const Dataset d = load_csv(file("wide.csv", row + "\n" + row + "\n"));
  EXPECT_EQ(d.inputs.cols(), kDefaultFeatureCount);
  EXPECT_EQ(d.inputs(0, 0), 1.0);
  EXPECT_EQ(d.inputs(0, 13), 14.0);
}

TEST(Standardize, TwoValueColumn) {
  Dataset d;
  d.inputs = Eigen::MatrixXd(2, 1);
  d.inputs << 0, 2;
  d.outputs = Eigen::MatrixXd::Zero(2, 1);
  const auto [out, params] = standardize(d);
  EXPECT_DOUBLE_EQ(out.inputs(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(out.inputs(1, 0), 1.0);
  EXPECT_FALSE(params.any_constant());
}

TEST(Standardize, MomentsAndIdempotence) {
  Dataset d;
  d.inputs = 3.0 * specrf::testing::gaussian_matrix(200, 4, 1);
  d.inputs.col(2).array() += 5.0;
  d.outputs = Eigen::MatrixXd::Zero(200, 1);
  const auto [once, params] = standardize(d);
  for (Eigen::Index c = 0; c < 4; ++c) {
    const double mean = once.inputs.col(c).mean();
    const double var = (once.inputs.col(c).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-10);
    EXPECT_NEAR(var, 1.0, 1e-10);
  }
  const auto twice = standardize(once).first;
  EXPECT_LE((twice.inputs - once.inputs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Standardize, ConstantColumnsAndTestStatistics) {
  Dataset train;
  train.inputs = Eigen::MatrixXd(3, 2);
  train.inputs << 1, 7, 2, 7, 3, 7;
  train.outputs = Eigen::MatrixXd::Zero(3, 1);
  const auto [out, params] = standardize(train);
  EXPECT_TRUE(params.any_constant());
  EXPECT_EQ(out.inputs(0, 1), 0.0);
  Dataset test = train;
  test.inputs << 2, 8, 2, 8, 2, 8;
  const Dataset applied = params.apply(test);
  EXPECT_DOUBLE_EQ(applied.inputs(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(applied.inputs(0, 1), 1.0);
  Dataset single = train.rows({0});
  EXPECT_THROW(standardize(single), DomainError);
}

Dataset indexed(int n) {
  Dataset d;
  d.inputs = Eigen::VectorXd::LinSpaced(n, 0, n - 1);
  d.outputs = d.inputs;
  return d;
}

TEST(Split, DisjointAndCovering) {
  const auto [train, test] = split(indexed(10), 7, 3, 4);
  EXPECT_EQ(train.size(), 7);
  EXPECT_EQ(test.size(), 3);
  std::set<double> seen;
  for (Eigen::Index i = 0; i < 7; ++i) seen.insert(train.inputs(i, 0));
  for (Eigen::Index i = 0; i < 3; ++i) seen.insert(test.inputs(i, 0));
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Split, SeedDeterminism) {
  const auto a = split(indexed(100), 60, 40, 1);
  const auto b = split(indexed(100), 60, 40, 1);
  const auto c = split(indexed(100), 60, 40, 2);
  EXPECT_EQ(a.first.inputs, b.first.inputs);
  EXPECT_NE(a.first.inputs, c.first.inputs);
}

TEST(Split, LargeConfigurationAndOversubscription) {
  const auto [train, test] = split(indexed(10000), 5000, 5000, 3);
  EXPECT_EQ(train.size() + test.size(), 10000);
  EXPECT_THROW(split(indexed(10), 8, 3, 0), DomainError);
}

TEST_F(Results, RoundTripPreservesValuesAndHeader) {
  Table t;
  t.header = {"alpha", "beta value"};
  t.add_row({0.1, std::int64_t{3}});
  t.add_row({1.0 / 3.0, std::numbers::pi});
  save_results(t, dir_ / "t.csv");
  const Table back = read_table(dir_ / "t.csv");
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.column("alpha"), t.column("alpha"));
  EXPECT_EQ(back.column("beta value"), t.column("beta value"));
  EXPECT_THROW(t.add_row({1.0}), DomainError);
}

TEST(Format, SeventeenDigitsReparseExactly) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const double x = specrf::testing::gaussian_vector(1, seed)[0] * std::pow(10.0, static_cast<double>(seed % 40) - 20);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(std::stod(format_double(std::numeric_limits<double>::min())), std::numeric_limits<double>::min());
}

TEST(Hash, MatchesGitBlobIds) {
  EXPECT_EQ(content_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(content_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Dataset, ValidateRejectsMisalignment) {
  Dataset d;
  d.inputs = Eigen::MatrixXd::Zero(3, 1);
  d.outputs = Eigen::MatrixXd::Zero(2, 1);
  EXPECT_THROW(d.validate(), DomainError);
  d.outputs = Eigen::MatrixXd::Zero(3, 1);
  d.outputs(1, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(d.validate(), DomainError);
}

}  // namespace
}  // namespace specrf::dataio
