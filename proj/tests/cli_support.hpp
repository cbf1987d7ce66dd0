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

// Helpers for tests that drive the command-line binary.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <sys/wait.h>

#include "json.hpp"
#include "specrf/dataio.hpp"

namespace specrf::testing {

inline std::string cli_path() { return SPECRF_CLI_PATH; }

/// Runs the binary through the shell and returns its exit status.
inline int run_cli(const std::string& arguments, const std::string& env = "") {
  const std::string command = env + (env.empty() ? "" : " ") + "'" + cli_path() + "' " + arguments + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

/// Small configurations, one per subcommand, that finish in seconds.
inline std::map<std::string, nlohmann::json> quick_configs() {
  using nlohmann::json;
  return {
      {"gen", json{{"problem", {{"kind", "synthetic"}, {"d_max", 16}}}, {"n_train", 20}, {"n_test", 10}}},
      {"fit", json{{"problem", {{"d_max", 16}}}, {"M_grid", {16}}, {"n_train", 60}, {"n_test", 40}, {"steps", 20}}},
      {"sweep-heatmap",
       json{{"M_grid", {4, 16}}, {"T_grid", {1, 8}}, {"n_train", 50}, {"n_test", 50}, {"repetitions", 2}}},
      {"rates",
       json{{"problem", {{"d_max", 16}, {"sampling", "importance"}, {"profile", "critical"}}},
            {"filter", {{"kind", "landweber"}, {"step", 1.0}}},
            {"n_grid", {50, 100, 200}},
            {"repetitions", 2}}},
      {"verify", json{{"verify", {{"events", {"E6", "E7"}}, {"trials", 50}, {"d_max", 8}, {"grid", 20}}}}},
      {"ntk-compare",
       json{{"problem", {{"kind", "operator"}, {"grid_points", 8}, {"modes", 2}}},
            {"M_grid", {8, 32}},
            {"n_train", 6},
            {"n_test", 4},
            {"compare", {{"seeds", 2}, {"steps", 20}}}}},
  };
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("specrf_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_config(const std::filesystem::path& dir, const std::string& name,
                                          const nlohmann::json& config) {
  const auto path = dir / (name + ".json");
  dataio::write_text(path, config.dump(2));
  return path;
}

/// Every CSV in a directory, by file name.
inline std::map<std::string, std::string> csv_outputs(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".csv") out[entry.path().filename().string()] = dataio::read_text(entry.path());
  return out;
}

}  // namespace specrf::testing
