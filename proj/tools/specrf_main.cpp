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

// Command-line driver: specrf <subcommand> [--config FILE] [--seed N] [--out DIR] [--jobs N] [--paper-scale] [--svg]

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "specrf/dataio.hpp"
#include "specrf/errors.hpp"
#include "specrf/experiments.hpp"

namespace {

using specrf::experiments::ExitCode;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
  bool paper_scale = false;
  bool svg = false;
};

std::uint64_t parse_seed(const std::string& text, const std::string& origin) {
  try {
    std::size_t used = 0;
    const unsigned long long value = std::stoull(text, &used, 10);
    if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw specrf::ConfigError(origin + " is not an unsigned 64-bit integer: '" + text + "'");
  }
}

int run(const std::string& subcommand, const Options& options) {
  nlohmann::json document = nlohmann::json::object();
  std::vector<std::pair<std::string, std::filesystem::path>> inputs;
  if (!options.config_path.empty()) {
    const std::string text = specrf::dataio::read_text(options.config_path);
    try {
      document = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw specrf::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    inputs.emplace_back("config", options.config_path);
  }
  auto config = specrf::experiments::parse_config(document, subcommand);
  if (const char* env = std::getenv("SPECRF_SEED"); env != nullptr && *env != '\0') {
    config.seed = parse_seed(env, "SPECRF_SEED");
  }
  if (options.seed) config.seed = *options.seed;
  if (options.out) config.out = *options.out;
  if (options.jobs) {
    if (*options.jobs < 0) throw specrf::ConfigError("--jobs must be nonnegative");
    config.jobs = *options.jobs;
  }
  if (options.svg) config.svg = true;
  if (options.paper_scale) specrf::experiments::apply_paper_scale(config);

  const auto result = specrf::experiments::run_command(config);
  specrf::experiments::write_outputs(config, result, inputs);
  for (const auto& [name, table] : result.tables) {
    std::cout << (config.out / name).string() << " (" << table.rows.size() << " rows)\n";
  }
  if (result.exit != ExitCode::ok) std::cerr << "specrf: invariant violation reported in " << config.out << "\n";
  return static_cast<int>(result.exit);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-feature regression with spectral regularization"};
  app.require_subcommand(1);
  Options options;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen", "Generate a dataset"},
      {"fit", "Fit and evaluate one model"},
      {"sweep-heatmap", "Test error over a grid of feature counts and gradient steps"},
      {"rates", "Excess risk along the rate schedule"},
      {"verify", "Check filter constants and concentration events"},
      {"ntk-compare", "Compare a shallow neural operator with its frozen-feature model"}};
  std::string seed_text;
  std::string out_dir;
  int jobs = 0;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", options.config_path, "JSON configuration file");
    sub->add_option("--seed", seed_text, "Base seed (overrides SPECRF_SEED and the config)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--jobs", jobs, "Worker threads, 0 for all cores");
    sub->add_flag("--paper-scale", options.paper_scale, "n = 5000 per split and 50 repetitions");
    sub->add_flag("--svg", options.svg, "Also write heatmap.svg (sweep-heatmap)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::config);
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub->count("--seed") > 0) options.seed = parse_seed(seed_text, "--seed");
    if (sub->count("--out") > 0) options.out = out_dir;
    if (sub->count("--jobs") > 0) options.jobs = jobs;
    return run(subcommand, options);
  } catch (const specrf::ConfigError& e) {
    std::cerr << "specrf: configuration error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::config);
  } catch (const specrf::ParseError& e) {
    std::cerr << "specrf: input error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::io);
  } catch (const specrf::IoError& e) {
    std::cerr << "specrf: I/O error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::io);
  } catch (const specrf::ConsistencyError& e) {
    std::cerr << "specrf: invariant violation: " << e.what() << "\n";
    return static_cast<int>(ExitCode::invariant);
  } catch (const specrf::InternalError& e) {
    std::cerr << "specrf: invariant violation: " << e.what() << "\n";
    return static_cast<int>(ExitCode::invariant);
  } catch (const std::exception& e) {
    std::cerr << "specrf: " << e.what() << "\n";
    return static_cast<int>(ExitCode::failure);
  }
}
