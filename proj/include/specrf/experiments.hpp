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
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "specrf/conclab.hpp"
#include "specrf/dataio.hpp"
#include "specrf/features.hpp"
#include "specrf/spectral.hpp"
#include "specrf/synthetic.hpp"

namespace specrf::experiments {

enum class ExitCode : int { ok = 0, failure = 1, invariant = 2, config = 3, io = 4 };

struct ProblemConfig {
  std::string kind = "synthetic";  // synthetic | gaussian | csv | operator | susy_like (gen only)
  // synthetic
  double r = 0.5;
  double b = 1.0;
  int d_max = 256;
  double R = 1.0;
  synthetic::FeatureSampling sampling = synthetic::FeatureSampling::uniform;
  synthetic::SourceProfile profile = synthetic::SourceProfile::isotropic;
  // synthetic, gaussian
  double noise = 0.5;
  // gaussian
  int dim = 1;
  double frequency = 2.0;
  // csv
  std::string path;
  dataio::CsvSelection csv;
  bool standardize = true;
  // operator
  int grid_points = 16;
  int modes = 4;
};

struct FeatureConfig {
  std::string kind = "auto";  // auto | problem | ntk | rff
  std::string activation = "tanh";
  std::string lift = "none";  // none | identity
  double tau = 1.0;
  features::ParameterSet trainable = features::ParameterSet::all;
  double lengthscale = 1.0;
};

struct FilterConfig {
  std::string kind = "landweber";  // tikhonov | landweber | cutoff | scaled_tikhonov
  double step = 0.5;
  double scale = 1.0;  // scaled_tikhonov: scale / (t + lambda), declared with Tikhonov constants

  spectral::SpectralFilter make() const;
};

struct VerifyConfig {
  std::vector<FilterConfig> filters;
  int grid = 100;
  std::vector<conclab::EventId> events;
  int trials = 200;
  conclab::SimulationSettings settings;
  int d_max = 64;
  double b = 1.0;
  double r = 0.5;
};

struct CompareSettings {
  int seeds = 10;
  long steps = 100;
  double step = 0.1;
};

struct RunConfig {
  std::string subcommand;
  std::uint64_t seed = 0;
  int jobs = 0;
  bool paper_scale = false;
  bool svg = false;
  std::filesystem::path out = "out";

  ProblemConfig problem;
  FeatureConfig features;
  FilterConfig filter;
  std::vector<double> lambda_grid = {0.01};
  long steps = 100;
  int n_train = 1000;
  int n_test = 1000;
  std::vector<int> M_grid = {64};
  std::vector<long> T_grid = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  std::vector<long> n_grid = {500, 1000, 2000, 4000, 8000};
  int repetitions = 10;
  double delta = 0.1;
  synthetic::ScheduleMultipliers schedule;
  VerifyConfig verify;
  CompareSettings compare;

  /// The input document, echoed into the manifest.
  nlohmann::json document = nlohmann::json::object();
};

/// Parses and validates a configuration document for a subcommand. Throws
/// ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_config(const nlohmann::json& document, const std::string& subcommand);
/// Applies the paper-scale preset (n = 5000 per split, 50 repetitions).
void apply_paper_scale(RunConfig& config);
/// Resolved configuration in the same schema as the input.
nlohmann::json to_json(const RunConfig& config);

struct CommandResult {
  std::vector<std::pair<std::string, dataio::Table>> tables;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> extra_files;  // name, content
  ExitCode exit = ExitCode::ok;
};

CommandResult cmd_gen(const RunConfig& config);
CommandResult cmd_fit(const RunConfig& config);
CommandResult cmd_sweep_heatmap(const RunConfig& config);
CommandResult cmd_rates(const RunConfig& config);
CommandResult cmd_verify(const RunConfig& config);
CommandResult cmd_ntk_compare(const RunConfig& config);

CommandResult run_command(const RunConfig& config);

/// Writes every table and extra file into config.out plus manifest.json.
/// `inputs` maps logical input names to files whose content hashes are recorded.
void write_outputs(const RunConfig& config, const CommandResult& result,
                   const std::vector<std::pair<std::string, std::filesystem::path>>& inputs);

/// Runs body(i) for i in [0, count) on up to `jobs` threads (0 = all cores).
/// The first exception by index is rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

/// Heat map of a (M, T, value) table as a minimal SVG with a linear color ramp.
std::string heatmap_svg(const dataio::Table& table);

}  // namespace specrf::experiments
