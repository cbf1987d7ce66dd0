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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace specrf::dataio {

/// Aligned input/output samples. Function-valued inputs are stored as flat
/// grid values per row.
struct Dataset {
  Eigen::MatrixXd inputs;   // n x d_in
  Eigen::MatrixXd outputs;  // n x d_v
  std::string source;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return inputs.rows(); }
  /// Throws DomainError on misaligned rows or non-finite entries.
  void validate() const;
  Dataset rows(const std::vector<Eigen::Index>& index) const;
};

struct CsvSelection {
  int label_column = 0;
  /// Empty selects the 14 columns following the label.
  std::vector<int> feature_columns;
  std::optional<long> row_limit;
  bool has_header = false;
};

inline constexpr int kDefaultFeatureCount = 14;

Dataset load_csv(const std::filesystem::path& path, const CsvSelection& selection = {});

struct Standardization {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;
  std::vector<bool> constant;  // zero-variance columns, left unscaled

  bool any_constant() const;
  Dataset apply(const Dataset& data) const;
};

/// Per-input-column mean 0 and population variance 1. Requires n >= 2.
std::pair<Dataset, Standardization> standardize(const Dataset& data);

/// Seeded shuffle into disjoint train and test parts.
std::pair<Dataset, Dataset> split(const Dataset& data, Eigen::Index n_train, Eigen::Index n_test,
                                  std::uint64_t seed);

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
  /// Column by name as doubles; throws DomainError if absent or non-numeric.
  std::vector<double> column(const std::string& name) const;
};

/// 17 significant digits, which reparse to the same double.
std::string format_double(double value);
std::string format_cell(const Cell& cell);

std::string to_csv(const Table& table);
void save_results(const Table& table, const std::filesystem::path& path);
/// Reads a CSV with a header row; numeric cells become doubles.
Table read_table(const std::filesystem::path& path);

/// Git-style blob hash: SHA-1 of "blob <size>\0" followed by the content.
std::string content_hash(const std::string& content);
std::string file_hash(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// Writes a synthetic file with SUSY's layout: a 0/1 label followed by 18 features.
void write_susy_like(const std::filesystem::path& path, long rows, std::uint64_t seed);

}  // namespace specrf::dataio
