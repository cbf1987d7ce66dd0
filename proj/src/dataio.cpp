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

#include "specrf/dataio.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "specrf/errors.hpp"
#include "specrf/rng.hpp"

namespace specrf::dataio {

namespace {

// Splits one CSV record; handles double-quoted fields with "" escapes.
std::vector<std::string> split_record(const std::string& line, long row) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw ParseError("unterminated quote in row " + std::to_string(row), row, 0);
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return lines;
}

}  // namespace

void Dataset::validate() const {
  if (inputs.rows() != outputs.rows()) throw DomainError("inputs and outputs have different row counts");
  if (!inputs.allFinite() || !outputs.allFinite()) throw DomainError("dataset contains non-finite values");
}

Dataset Dataset::rows(const std::vector<Eigen::Index>& index) const {
  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(index.size()), inputs.cols());
  out.outputs.resize(static_cast<Eigen::Index>(index.size()), outputs.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    out.inputs.row(static_cast<Eigen::Index>(k)) = inputs.row(index[k]);
    out.outputs.row(static_cast<Eigen::Index>(k)) = outputs.row(index[k]);
  }
  out.source = source;
  out.seed = seed;
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSelection& selection) {
  if (selection.row_limit && *selection.row_limit <= 0) throw DomainError("row limit must be positive");
  std::vector<int> columns = selection.feature_columns;
  if (columns.empty()) {
    columns.resize(kDefaultFeatureCount);
    std::iota(columns.begin(), columns.end(), selection.label_column + 1);
  }
  const std::vector<std::string> lines = read_lines(path);
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  int width = -1;
  for (std::size_t li = selection.has_header ? 1 : 0; li < lines.size(); ++li) {
    if (selection.row_limit && static_cast<long>(rows.size()) >= *selection.row_limit) break;
    const long row = static_cast<long>(li) + 1;
    if (trim(lines[li]).empty()) continue;
    const std::vector<std::string> fields = split_record(lines[li], row);
    if (width < 0) {
      width = static_cast<int>(fields.size());
      const int needed = std::max(selection.label_column, *std::max_element(columns.begin(), columns.end()));
      if (selection.label_column < 0 || *std::min_element(columns.begin(), columns.end()) < 0 || needed >= width)
        throw DomainError("selected columns exceed the " + std::to_string(width) + " columns of '" +
                          path.string() + "'");
    } else if (static_cast<int>(fields.size()) != width) {
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(width),
                       row, static_cast<long>(fields.size()));
    }
    auto cell = [&](int col) {
      const std::optional<double> value = parse_double(fields[static_cast<std::size_t>(col)]);
      if (!value || !std::isfinite(*value))
        throw ParseError("malformed numeric cell '" + fields[static_cast<std::size_t>(col)] + "' at row " +
                             std::to_string(row) + ", column " + std::to_string(col + 1),
                         row, col + 1);
      return *value;
    };
    labels.push_back(cell(selection.label_column));
    std::vector<double> values;
    values.reserve(columns.size());
    for (int col : columns) values.push_back(cell(col));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DomainError("'" + path.string() + "' contains no data rows");
  Dataset data;
  data.inputs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
  data.outputs.resize(static_cast<Eigen::Index>(rows.size()), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < columns.size(); ++k)
      data.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    data.outputs(static_cast<Eigen::Index>(i), 0) = labels[i];
  }
  data.source = path.filename().string();
  return data;
}

bool Standardization::any_constant() const {
  return std::any_of(constant.begin(), constant.end(), [](bool c) { return c; });
}

Dataset Standardization::apply(const Dataset& data) const {
  if (data.inputs.cols() != mean.size()) throw DomainError("standardization has the wrong number of columns");
  Dataset out = data;
  out.inputs = ((data.inputs.rowwise() - mean).array().rowwise() / scale.array()).matrix();
  return out;
}

std::pair<Dataset, Standardization> standardize(const Dataset& data) {
  if (data.size() < 2) throw DomainError("standardization needs at least two rows");
  Standardization params;
  const double n = static_cast<double>(data.size());
  params.mean = data.inputs.colwise().mean();
  params.scale.resize(data.inputs.cols());
  params.constant.assign(static_cast<std::size_t>(data.inputs.cols()), false);
  for (Eigen::Index c = 0; c < data.inputs.cols(); ++c) {
    const double var = (data.inputs.col(c).array() - params.mean[c]).square().sum() / n;
    if (var > 0.0) {
      params.scale[c] = std::sqrt(var);
    } else {
      params.scale[c] = 1.0;
      params.constant[static_cast<std::size_t>(c)] = true;
    }
  }
  return {params.apply(data), params};
}

std::pair<Dataset, Dataset> split(const Dataset& data, Eigen::Index n_train, Eigen::Index n_test,
                                  std::uint64_t seed) {
  if (n_train < 0 || n_test < 0 || n_train + n_test > data.size())
    throw DomainError("split of " + std::to_string(n_train) + " + " + std::to_string(n_test) +
                      " exceeds " + std::to_string(data.size()) + " rows");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng = make_rng(seed);
  // Fisher-Yates with an explicit index draw so the permutation does not
  // depend on the standard library's shuffle.
  for (std::size_t i = order.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  std::vector<Eigen::Index> train(order.begin(), order.begin() + n_train);
  std::vector<Eigen::Index> test(order.begin() + n_train, order.begin() + n_train + n_test);
  Dataset a = data.rows(train);
  Dataset b = data.rows(test);
  a.seed = b.seed = seed;
  return {std::move(a), std::move(b)};
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != header.size()) throw DomainError("table row does not match the header");
  rows.push_back(std::move(row));
}

std::vector<double> Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DomainError("no column named '" + name + "'");
  const auto index = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (const auto* d = std::get_if<double>(&row[index])) {
      out.push_back(*d);
    } else if (const auto* i = std::get_if<std::int64_t>(&row[index])) {
      out.push_back(static_cast<double>(*i));
    } else {
      throw DomainError("column '" + name + "' is not numeric");
    }
  }
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::general, 17);
  if (ec != std::errc()) throw InternalError("double formatting failed");
  return std::string(buffer, ptr);
}

std::string format_cell(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  const std::string& s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"') quoted.push_back('"');
    quoted.push_back(ch);
  }
  quoted.push_back('"');
  return quoted;
}

std::string to_csv(const Table& table) {
  std::string out;
  auto emit = [&](const std::vector<Cell>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out.push_back(',');
      out += format_cell(cells[i]);
    }
    out.push_back('\n');
  };
  emit(std::vector<Cell>(table.header.begin(), table.header.end()));
  for (const auto& row : table.rows) emit(row);
  return out;
}

void save_results(const Table& table, const std::filesystem::path& path) {
  for (const auto& row : table.rows)
    if (row.size() != table.header.size()) throw DomainError("table is not rectangular");
  write_text(path, to_csv(table));
}

Table read_table(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ParseError("'" + path.string() + "' has no header", 1, 0);
  Table table;
  table.header = split_record(lines[0], 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const long row = static_cast<long>(li) + 1;
    const std::vector<std::string> fields = split_record(lines[li], row);
    if (fields.size() != table.header.size())
      throw ParseError("row " + std::to_string(row) + " does not match the header", row,
                       static_cast<long>(fields.size()));
    std::vector<Cell> cells;
    cells.reserve(fields.size());
    for (const auto& f : fields) {
      if (const auto value = parse_double(f)) {
        cells.emplace_back(*value);
      } else {
        cells.emplace_back(f);
      }
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

std::string content_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned char byte : digest) os << std::setw(2) << static_cast<int>(byte);
  return os.str();
}

std::string file_hash(const std::filesystem::path& path) { return content_hash(read_text(path)); }

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  out.close();
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_susy_like(const std::filesystem::path& path, long rows, std::uint64_t seed) {
  if (rows < 1) throw DomainError("fixture needs at least one row");
  constexpr int kFeatures = 18;
  Rng rng = make_rng(seed);
  std::bernoulli_distribution label(0.46);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::string out;
  for (long i = 0; i < rows; ++i) {
    const int y = label(rng) ? 1 : 0;
    out += std::to_string(y);
    for (int k = 0; k < kFeatures; ++k) {
      // Signal-dependent shift on a subset of columns, positive "momenta" elsewhere.
      double x = normal(rng) + (k % 3 == 0 ? 0.6 * y : 0.0);
      if (k % 3 == 1) x = std::abs(x) + 0.3 * y;
      out.push_back(',');
      out += format_double(x);
    }
    out.push_back('\n');
  }
  write_text(path, out);
}

}  // namespace specrf::dataio
