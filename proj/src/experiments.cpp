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

#include "specrf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "specrf/errors.hpp"
#include "specrf/estimator.hpp"
#include "specrf/neuralop.hpp"
#include "specrf/rng.hpp"

namespace specrf::experiments {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

// Seed stream tags.
constexpr std::uint64_t kProblemStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kTestStream = 3;
constexpr std::uint64_t kFeatureStream = 4;
constexpr std::uint64_t kEventStream = 5;
constexpr std::uint64_t kNetworkStream = 6;
constexpr std::uint64_t kSplitStream = 7;

// ---------------------------------------------------------------------------
// Parsing helpers

void check_keys(const json& object, const std::string& where, const std::set<std::string>& allowed) {
  if (!object.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : object.items()) {
    if (!allowed.count(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& object, const std::string& key, T& target, const std::string& where) {
  if (!object.contains(key)) return;
  try {
    target = object.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("wrong type for '" + key + "' in " + where);
  }
}

void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

template <typename T>
void require_positive_grid(const std::vector<T>& grid, const std::string& name) {
  require(!grid.empty(), name + " must be nonempty");
  for (T value : grid) require(value > 0, name + " entries must be positive");
}

FilterConfig parse_filter(const json& object, const std::string& where) {
  FilterConfig filter;
  check_keys(object, where, {"kind", "step", "scale"});
  read(object, "kind", filter.kind, where);
  read(object, "step", filter.step, where);
  read(object, "scale", filter.scale, where);
  static const std::set<std::string> kinds = {"tikhonov", "landweber", "cutoff", "scaled_tikhonov"};
  require(kinds.count(filter.kind), "unknown filter kind '" + filter.kind + "'");
  require(filter.step > 0.0 && filter.step <= 1.0, "filter step must lie in (0, 1]");
  require(filter.scale > 0.0 && std::isfinite(filter.scale), "filter scale must be positive");
  return filter;
}

json filter_json(const FilterConfig& filter) {
  return {{"kind", filter.kind}, {"step", filter.step}, {"scale", filter.scale}};
}

void apply_defaults(RunConfig& config) {
  const std::string& cmd = config.subcommand;
  if (cmd == "sweep-heatmap") {
    config.problem.kind = "gaussian";
    config.problem.noise = 0.5;
    config.M_grid = {16, 64, 256, 1024};
  } else if (cmd == "ntk-compare") {
    config.problem.kind = "operator";
    config.features.kind = "ntk";
    config.features.lift = "identity";
    config.M_grid = {64, 256, 1024};
    config.n_train = 16;
    config.n_test = 16;
  } else if (cmd == "fit") {
    config.M_grid = {256};
    config.lambda_grid = {0.01};
  } else if (cmd == "gen") {
    config.n_train = 1000;
  }
  config.verify.filters = {FilterConfig{"tikhonov", 0.5, 1.0}, FilterConfig{"landweber", 0.5, 1.0},
                           FilterConfig{"cutoff", 0.5, 1.0}};
  config.verify.events = conclab::all_events();
  config.verify.settings.n = 100;
  config.verify.settings.M = 100;
  config.verify.settings.lambda = 0.05;
  config.verify.settings.delta = 0.1;
  config.verify.settings.noise_half_width = 0.5;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

spectral::SpectralFilter FilterConfig::make() const {
  if (kind == "tikhonov") return spectral::SpectralFilter::tikhonov();
  if (kind == "landweber") return spectral::SpectralFilter::landweber(step);
  if (kind == "cutoff") return spectral::SpectralFilter::cutoff();
  if (kind == "scaled_tikhonov") {
    const double s = scale;
    spectral::FilterConstants constants;
    constants.qualification = 1.0;
    return spectral::SpectralFilter::custom(
        "scaled_tikhonov", [s](double lambda, double t) { return s / (t + lambda); }, constants,
        [](double) { return 1.0; });
  }
  throw ConfigError("unknown filter kind '" + kind + "'");
}

RunConfig parse_config(const json& document, const std::string& subcommand) {
  static const std::set<std::string> commands = {"gen", "fit", "sweep-heatmap", "rates", "verify", "ntk-compare"};
  if (!commands.count(subcommand)) throw ConfigError("unknown subcommand '" + subcommand + "'");
  RunConfig config;
  config.subcommand = subcommand;
  apply_defaults(config);
  config.document = document.is_null() ? json::object() : document;
  const json& doc = config.document;

  check_keys(doc, "config",
             {"subcommand", "seed", "jobs", "out", "paper_scale", "svg", "problem", "features", "filter",
              "lambda_grid", "steps", "n_train", "n_test", "M_grid", "T_grid", "n_grid", "repetitions", "delta",
              "schedule", "verify", "compare"});
  if (doc.contains("subcommand")) {
    std::string declared;
    read(doc, "subcommand", declared, "config");
    require(declared == subcommand, "config declares subcommand '" + declared + "'");
  }
  read(doc, "seed", config.seed, "config");
  read(doc, "jobs", config.jobs, "config");
  std::string out = config.out.string();
  read(doc, "out", out, "config");
  config.out = out;
  read(doc, "paper_scale", config.paper_scale, "config");
  read(doc, "svg", config.svg, "config");

  if (doc.contains("problem")) {
    const json& p = doc.at("problem");
    check_keys(p, "problem",
               {"kind", "r", "b", "d_max", "R", "sampling", "profile", "noise", "dim", "frequency", "path",
                "label_column", "feature_columns", "row_limit", "has_header", "standardize", "grid_points",
                "modes"});
    ProblemConfig& pc = config.problem;
    read(p, "kind", pc.kind, "problem");
    read(p, "r", pc.r, "problem");
    read(p, "b", pc.b, "problem");
    read(p, "d_max", pc.d_max, "problem");
    read(p, "R", pc.R, "problem");
    std::string sampling = synthetic::to_string(pc.sampling);
    std::string profile = synthetic::to_string(pc.profile);
    read(p, "sampling", sampling, "problem");
    read(p, "profile", profile, "problem");
    pc.sampling = synthetic::feature_sampling_from_string(sampling);
    pc.profile = synthetic::source_profile_from_string(profile);
    read(p, "noise", pc.noise, "problem");
    read(p, "dim", pc.dim, "problem");
    read(p, "frequency", pc.frequency, "problem");
    read(p, "path", pc.path, "problem");
    read(p, "label_column", pc.csv.label_column, "problem");
    read(p, "feature_columns", pc.csv.feature_columns, "problem");
    if (p.contains("row_limit") && !p.at("row_limit").is_null()) {
      long limit = 0;
      read(p, "row_limit", limit, "problem");
      pc.csv.row_limit = limit;
    }
    read(p, "has_header", pc.csv.has_header, "problem");
    read(p, "standardize", pc.standardize, "problem");
    read(p, "grid_points", pc.grid_points, "problem");
    read(p, "modes", pc.modes, "problem");
  }
  if (doc.contains("features")) {
    const json& f = doc.at("features");
    check_keys(f, "features", {"kind", "activation", "lift", "tau", "trainable", "lengthscale"});
    FeatureConfig& fc = config.features;
    read(f, "kind", fc.kind, "features");
    read(f, "activation", fc.activation, "features");
    read(f, "lift", fc.lift, "features");
    read(f, "tau", fc.tau, "features");
    std::string trainable = features::to_string(fc.trainable);
    read(f, "trainable", trainable, "features");
    try {
      fc.trainable = features::parameter_set_from_string(trainable);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    read(f, "lengthscale", fc.lengthscale, "features");
  }
  if (doc.contains("filter")) config.filter = parse_filter(doc.at("filter"), "filter");
  if (doc.contains("lambda_grid")) {
    if (doc.at("lambda_grid").is_number()) {
      config.lambda_grid = {doc.at("lambda_grid").get<double>()};
    } else {
      read(doc, "lambda_grid", config.lambda_grid, "config");
    }
  }
  read(doc, "steps", config.steps, "config");
  read(doc, "n_train", config.n_train, "config");
  read(doc, "n_test", config.n_test, "config");
  read(doc, "M_grid", config.M_grid, "config");
  read(doc, "T_grid", config.T_grid, "config");
  read(doc, "n_grid", config.n_grid, "config");
  read(doc, "repetitions", config.repetitions, "config");
  read(doc, "delta", config.delta, "config");
  if (doc.contains("schedule")) {
    const json& s = doc.at("schedule");
    check_keys(s, "schedule", {"lambda", "features"});
    read(s, "lambda", config.schedule.lambda, "schedule");
    read(s, "features", config.schedule.features, "schedule");
  }
  if (doc.contains("verify")) {
    const json& v = doc.at("verify");
    check_keys(v, "verify", {"filters", "grid", "events", "trials", "n", "M", "lambda", "delta", "noise", "d_max",
                             "b", "r"});
    VerifyConfig& vc = config.verify;
    if (v.contains("filters")) {
      require(v.at("filters").is_array(), "verify.filters must be an array");
      vc.filters.clear();
      for (const json& f : v.at("filters")) vc.filters.push_back(parse_filter(f, "verify.filters"));
    }
    read(v, "grid", vc.grid, "verify");
    if (v.contains("events")) {
      std::vector<std::string> names;
      read(v, "events", names, "verify");
      vc.events.clear();
      for (const auto& name : names) {
        try {
          vc.events.push_back(conclab::event_from_string(name));
        } catch (const Error& e) {
          throw ConfigError(e.what());
        }
      }
    }
    read(v, "trials", vc.trials, "verify");
    read(v, "n", vc.settings.n, "verify");
    read(v, "M", vc.settings.M, "verify");
    read(v, "lambda", vc.settings.lambda, "verify");
    read(v, "delta", vc.settings.delta, "verify");
    read(v, "noise", vc.settings.noise_half_width, "verify");
    read(v, "d_max", vc.d_max, "verify");
    read(v, "b", vc.b, "verify");
    read(v, "r", vc.r, "verify");
  }
  if (doc.contains("compare")) {
    const json& c = doc.at("compare");
    check_keys(c, "compare", {"seeds", "steps", "step"});
    read(c, "seeds", config.compare.seeds, "compare");
    read(c, "steps", config.compare.steps, "compare");
    read(c, "step", config.compare.step, "compare");
  }

  // Validation, before any computation.
  const ProblemConfig& pc = config.problem;
  static const std::set<std::string> problem_kinds = {"synthetic", "gaussian", "csv", "operator", "susy_like"};
  require(problem_kinds.count(pc.kind), "unknown problem kind '" + pc.kind + "'");
  require(pc.kind != "susy_like" || subcommand == "gen", "problem kind 'susy_like' is only valid for gen");
  require(pc.r > 0.0 && std::isfinite(pc.r), "problem.r must be positive");
  require(pc.b > 0.0 && pc.b <= 1.0, "problem.b must lie in (0, 1]");
  require(pc.d_max >= 1, "problem.d_max must be at least 1");
  require(pc.R > 0.0 && std::isfinite(pc.R), "problem.R must be positive");
  require(pc.noise >= 0.0 && std::isfinite(pc.noise), "problem.noise must be nonnegative");
  require(pc.dim >= 1, "problem.dim must be at least 1");
  require(pc.grid_points >= 1 && pc.modes >= 1, "problem.grid_points and problem.modes must be positive");
  require(pc.kind != "csv" || !pc.path.empty(), "problem.path is required for csv problems");
  if ((subcommand == "rates") && pc.kind != "synthetic") throw ConfigError("rates needs a synthetic problem");
  if (subcommand == "ntk-compare" && pc.kind != "operator") throw ConfigError("ntk-compare needs an operator problem");

  const FeatureConfig& fc = config.features;
  static const std::set<std::string> feature_kinds = {"auto", "problem", "ntk", "rff"};
  require(feature_kinds.count(fc.kind), "unknown feature kind '" + fc.kind + "'");
  require(fc.kind != "problem" || pc.kind == "synthetic", "problem features need a synthetic problem");
  require(fc.lift == "none" || fc.lift == "identity", "features.lift must be 'none' or 'identity'");
  try {
    features::Activation::from_name(fc.activation);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  require(fc.tau > 0.0 && std::isfinite(fc.tau), "features.tau must be positive");
  require(fc.lengthscale > 0.0 && std::isfinite(fc.lengthscale), "features.lengthscale must be positive");

  require_positive_grid(config.lambda_grid, "lambda_grid");
  for (double l : config.lambda_grid) require(l <= 1.0, "lambda_grid entries must lie in (0, 1]");
  require_positive_grid(config.M_grid, "M_grid");
  require_positive_grid(config.T_grid, "T_grid");
  require_positive_grid(config.n_grid, "n_grid");
  require(config.steps >= 1, "steps must be at least 1");
  require(config.n_train >= 1 && config.n_test >= 1, "n_train and n_test must be positive");
  require(config.repetitions >= 1, "repetitions must be at least 1");
  require(config.delta > 0.0 && config.delta < 1.0, "delta must lie in (0, 1)");
  require(config.jobs >= 0, "jobs must be nonnegative");
  require(config.schedule.lambda > 0.0 && config.schedule.features > 0.0, "schedule multipliers must be positive");

  const VerifyConfig& vc = config.verify;
  require(vc.grid >= 2, "verify.grid must be at least 2");
  require(vc.trials >= 50, "verify.trials must be at least 50");
  require(vc.settings.n >= 1 && vc.settings.M >= 1, "verify.n and verify.M must be positive");
  require(vc.settings.lambda > 0.0 && vc.settings.lambda <= 1.0, "verify.lambda must lie in (0, 1]");
  require(vc.settings.delta > 0.0 && vc.settings.delta < 0.5, "verify.delta must lie in (0, 1/2)");
  require(vc.settings.noise_half_width >= 0.0, "verify.noise must be nonnegative");
  require(vc.d_max >= 1, "verify.d_max must be at least 1");
  require(vc.b > 0.0 && vc.b <= 1.0, "verify.b must lie in (0, 1]");
  require(vc.r > 0.0, "verify.r must be positive");

  require(config.compare.seeds >= 1, "compare.seeds must be at least 1");
  require(config.compare.steps >= 1, "compare.steps must be at least 1");
  require(config.compare.step > 0.0 && std::isfinite(config.compare.step), "compare.step must be positive");
  for (int M : config.M_grid) {
    require(subcommand != "ntk-compare" || M % 2 == 0, "ntk-compare widths must be even");
  }

  std::sort(config.T_grid.begin(), config.T_grid.end());
  config.T_grid.erase(std::unique(config.T_grid.begin(), config.T_grid.end()), config.T_grid.end());
  if (config.paper_scale) apply_paper_scale(config);
  return config;
}

void apply_paper_scale(RunConfig& config) {
  config.paper_scale = true;
  config.n_train = 5000;
  config.n_test = 5000;
  config.repetitions = 50;
}

json to_json(const RunConfig& config) {
  const ProblemConfig& pc = config.problem;
  json problem = {{"kind", pc.kind},
                  {"r", pc.r},
                  {"b", pc.b},
                  {"d_max", pc.d_max},
                  {"R", pc.R},
                  {"sampling", synthetic::to_string(pc.sampling)},
                  {"profile", synthetic::to_string(pc.profile)},
                  {"noise", pc.noise},
                  {"dim", pc.dim},
                  {"frequency", pc.frequency},
                  {"path", pc.path},
                  {"label_column", pc.csv.label_column},
                  {"feature_columns", pc.csv.feature_columns},
                  {"row_limit", pc.csv.row_limit ? json(*pc.csv.row_limit) : json(nullptr)},
                  {"has_header", pc.csv.has_header},
                  {"standardize", pc.standardize},
                  {"grid_points", pc.grid_points},
                  {"modes", pc.modes}};
  const FeatureConfig& fc = config.features;
  json feats = {{"kind", fc.kind},
                {"activation", fc.activation},
                {"lift", fc.lift},
                {"tau", fc.tau},
                {"trainable", features::to_string(fc.trainable)},
                {"lengthscale", fc.lengthscale}};
  json filters = json::array();
  for (const auto& f : config.verify.filters) filters.push_back(filter_json(f));
  json events = json::array();
  for (auto id : config.verify.events) events.push_back(conclab::to_string(id));
  const VerifyConfig& vc = config.verify;
  json verify = {{"filters", filters},      {"grid", vc.grid},
                 {"events", events},        {"trials", vc.trials},
                 {"n", vc.settings.n},      {"M", vc.settings.M},
                 {"lambda", vc.settings.lambda}, {"delta", vc.settings.delta},
                 {"noise", vc.settings.noise_half_width}, {"d_max", vc.d_max},
                 {"b", vc.b},               {"r", vc.r}};
  return {{"subcommand", config.subcommand},
          {"seed", config.seed},
          {"out", config.out.string()},
          {"paper_scale", config.paper_scale},
          {"svg", config.svg},
          {"problem", problem},
          {"features", feats},
          {"filter", filter_json(config.filter)},
          {"lambda_grid", config.lambda_grid},
          {"steps", config.steps},
          {"n_train", config.n_train},
          {"n_test", config.n_test},
          {"M_grid", config.M_grid},
          {"T_grid", config.T_grid},
          {"n_grid", config.n_grid},
          {"repetitions", config.repetitions},
          {"delta", config.delta},
          {"schedule", {{"lambda", config.schedule.lambda}, {"features", config.schedule.features}}},
          {"verify", verify},
          {"compare", {{"seeds", config.compare.seeds}, {"steps", config.compare.steps}, {"step", config.compare.step}}}};
}

// ---------------------------------------------------------------------------
// Parallel execution

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

// ---------------------------------------------------------------------------
// Problems and feature maps

struct ProblemData {
  dataio::Dataset train;
  dataio::Dataset test;
  std::optional<Eigen::MatrixXd> test_oracle;
};

synthetic::SyntheticProblem make_synthetic(const RunConfig& config) {
  const ProblemConfig& pc = config.problem;
  const auto spec = synthetic::SpectrumSpec::power_law(pc.b, pc.d_max);
  return synthetic::make_problem(spec, pc.r, pc.R, derive_seed(config.seed, {kProblemStream}),
                                 {pc.sampling, pc.profile});
}

/// Train/test data for one repetition.
ProblemData materialize(const RunConfig& config, const synthetic::SyntheticProblem* problem, std::uint64_t rep) {
  const ProblemConfig& pc = config.problem;
  const std::uint64_t train_seed = derive_seed(config.seed, {kTrainStream, rep});
  const std::uint64_t test_seed = derive_seed(config.seed, {kTestStream, rep});
  ProblemData data;
  if (pc.kind == "synthetic") {
    const auto noise = synthetic::NoiseModel::bounded_uniform(pc.noise, problem->target().sup_bound());
    data.train = synthetic::sample_dataset(*problem, config.n_train, noise, train_seed);
    data.test = synthetic::sample_dataset(*problem, config.n_test, noise, test_seed);
    data.test_oracle = Eigen::MatrixXd(problem->target_values(data.test.inputs.col(0)));
  } else if (pc.kind == "gaussian") {
    synthetic::GaussianRegression task{pc.dim, pc.frequency, pc.noise};
    data.train = task.sample(config.n_train, train_seed);
    data.test = task.sample(config.n_test, test_seed);
    Eigen::MatrixXd oracle(data.test.size(), 1);
    for (Eigen::Index j = 0; j < data.test.size(); ++j) oracle(j, 0) = task.target(data.test.inputs.row(j).transpose());
    data.test_oracle = oracle;
  } else if (pc.kind == "csv") {
    const auto all = dataio::load_csv(pc.path, pc.csv);
    if (static_cast<Eigen::Index>(config.n_train) + config.n_test > all.size()) {
      throw ConfigError("n_train + n_test exceeds the " + std::to_string(all.size()) + " rows of " + pc.path);
    }
    auto parts = dataio::split(all, config.n_train, config.n_test, derive_seed(config.seed, {kSplitStream, rep}));
    data.train = std::move(parts.first);
    data.test = std::move(parts.second);
    if (pc.standardize) {
      auto standardized = dataio::standardize(data.train);
      data.test = standardized.second.apply(data.test);
      data.train = std::move(standardized.first);
    }
  } else if (pc.kind == "operator") {
    neuralop::OperatorTask task{pc.grid_points, pc.modes};
    data.train = task.sample(config.n_train, train_seed);
    data.test = task.sample(config.n_test, test_seed);
    data.test_oracle = data.test.outputs;
  } else {
    throw ConfigError("problem kind '" + pc.kind + "' provides no train/test data");
  }
  return data;
}

features::NtkMapConfig ntk_config(const RunConfig& config, int input_dim) {
  const FeatureConfig& fc = config.features;
  features::NtkMapConfig map;
  if (config.problem.kind == "operator") {
    map.grid_points = config.problem.grid_points;
    map.input_channels = 1;
  } else {
    map.grid_points = 1;
    map.input_channels = input_dim;
  }
  map.lift = fc.lift == "identity" ? features::Lift::identity() : features::Lift::none();
  map.activation = features::Activation::from_name(fc.activation);
  map.tau = fc.tau;
  map.trainable = fc.trainable;
  return map;
}

features::FeatureMapPtr make_map(const RunConfig& config, const synthetic::SyntheticProblem* problem,
                                 int input_dim) {
  std::string kind = config.features.kind;
  if (kind == "auto") kind = config.problem.kind == "synthetic" ? "problem" : "ntk";
  if (kind == "problem") return problem->feature_map();
  if (kind == "rff") return std::make_shared<features::RandomFourierMap>(input_dim, config.features.lengthscale);
  return features::ntk_feature_map(ntk_config(config, input_dim));
}

std::string describe(const std::exception& e) { return e.what(); }

double mean_of(const std::vector<double>& values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stdev_of(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size() - 1));
}

dataio::Cell optional_cell(const std::optional<double>& value) {
  if (value) return *value;
  return std::string();
}

}  // namespace

// ---------------------------------------------------------------------------
// Subcommands

CommandResult cmd_gen(const RunConfig& config) {
  CommandResult result;
  const ProblemConfig& pc = config.problem;
  if (pc.kind == "susy_like") {
    const std::uint64_t seed = derive_seed(config.seed, {kTrainStream, 0});
    const auto path = config.out / "susy_like.csv";
    dataio::write_susy_like(path, config.n_train, seed);
    result.extra_files.emplace_back("susy_like.csv", dataio::read_text(path));
    result.summary = {{"rows", config.n_train}, {"columns", 19}};
    return result;
  }
  std::optional<synthetic::SyntheticProblem> problem;
  if (pc.kind == "synthetic") problem = make_synthetic(config);
  const ProblemData data = materialize(config, problem ? &*problem : nullptr, 0);
  dataio::Table table;
  for (Eigen::Index c = 0; c < data.train.inputs.cols(); ++c) table.header.push_back("u" + std::to_string(c));
  for (Eigen::Index c = 0; c < data.train.outputs.cols(); ++c) table.header.push_back("v" + std::to_string(c));
  for (Eigen::Index j = 0; j < data.train.size(); ++j) {
    std::vector<dataio::Cell> row;
    for (Eigen::Index c = 0; c < data.train.inputs.cols(); ++c) row.emplace_back(data.train.inputs(j, c));
    for (Eigen::Index c = 0; c < data.train.outputs.cols(); ++c) row.emplace_back(data.train.outputs(j, c));
    table.add_row(std::move(row));
  }
  result.tables.emplace_back("data.csv", std::move(table));
  result.summary = {{"rows", data.train.size()}, {"source", data.train.source}};
  if (problem) result.summary["problem"] = synthetic::to_json(*problem);
  return result;
}

CommandResult cmd_fit(const RunConfig& config) {
  std::optional<synthetic::SyntheticProblem> problem;
  if (config.problem.kind == "synthetic") problem = make_synthetic(config);
  const ProblemData data = materialize(config, problem ? &*problem : nullptr, 0);
  const auto map = make_map(config, problem ? &*problem : nullptr, static_cast<int>(data.train.inputs.cols()));
  const auto filter = config.filter.make();
  const bool iterative = filter.kind() == spectral::FilterKind::landweber;

  struct Cell {
    int M;
    double lambda;
  };
  std::vector<Cell> cells;
  for (int M : config.M_grid) {
    if (iterative) {
      cells.push_back({M, spectral::landweber_lambda(config.filter.step, config.steps)});
    } else {
      for (double l : config.lambda_grid) cells.push_back({M, l});
    }
  }
  std::vector<std::vector<dataio::Cell>> rows(cells.size() * 2);
  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const Cell cell = cells[i];
    try {
      auto fs = std::make_shared<const features::FeatureSet>(
          features::sample_features(map, cell.M, derive_seed(config.seed, {kFeatureStream, 0, std::uint64_t(cell.M)})));
      const auto design = features::build_design(fs, data.train.inputs);
      const Eigen::VectorXd v = design.stack_outputs(data.train.outputs);
      const estimator::RFModel model = iterative ? estimator::fit_gd(design, v, config.filter.step, config.steps)
                                                 : estimator::fit_closed(design, v, filter, cell.lambda);
      const auto train = estimator::evaluate(model, data.train.inputs, data.train.outputs);
      const auto test = estimator::evaluate(model, data.test.inputs, data.test.outputs, data.test_oracle);
      const auto make_row = [&](const std::string& split, const estimator::RiskReport& report) {
        return std::vector<dataio::Cell>{split,
                                         static_cast<std::int64_t>(report.n_test),
                                         static_cast<std::int64_t>(cell.M),
                                         filter.name(),
                                         model.lambda,
                                         static_cast<std::int64_t>(model.steps),
                                         report.empirical_risk,
                                         optional_cell(report.excess_l2)};
      };
      rows[2 * i] = make_row("train", train);
      rows[2 * i + 1] = make_row("test", test);
    } catch (const std::exception& e) {
      throw Error("fit cell (M=" + std::to_string(cell.M) + ", lambda=" + dataio::format_double(cell.lambda) +
                  ") failed: " + describe(e));
    }
  });
  CommandResult result;
  dataio::Table table;
  table.header = {"split", "n", "M", "filter", "lambda", "steps", "empirical_risk", "excess_l2"};
  for (auto& row : rows) table.add_row(std::move(row));
  result.tables.emplace_back("fit.csv", std::move(table));
  result.summary = {{"feature_map", map->name()}, {"summands", map->summands()}};
  return result;
}

CommandResult cmd_sweep_heatmap(const RunConfig& config) {
  std::optional<synthetic::SyntheticProblem> problem;
  if (config.problem.kind == "synthetic") problem = make_synthetic(config);
  const synthetic::SyntheticProblem* problem_ptr = problem ? &*problem : nullptr;
  const std::size_t nM = config.M_grid.size();
  const std::size_t nT = config.T_grid.size();
  const std::size_t reps = static_cast<std::size_t>(config.repetitions);

  std::vector<ProblemData> data(reps);
  parallel_for(reps, config.jobs, [&](std::size_t rep) { data[rep] = materialize(config, problem_ptr, rep); });
  const int input_dim = static_cast<int>(data[0].train.inputs.cols());
  const auto map = make_map(config, problem_ptr, input_dim);

  // errors[m][rep][t]
  std::vector<std::vector<std::vector<double>>> errors(nM, std::vector<std::vector<double>>(reps));
  parallel_for(nM * reps, config.jobs, [&](std::size_t job) {
    const std::size_t m = job / reps;
    const std::size_t rep = job % reps;
    const int M = config.M_grid[m];
    try {
      const std::uint64_t seed = derive_seed(config.seed, {kFeatureStream, rep, static_cast<std::uint64_t>(M)});
      auto fs = std::make_shared<const features::FeatureSet>(features::sample_features(map, M, seed));
      const auto design = features::build_design(fs, data[rep].train.inputs);
      const Eigen::VectorXd v = design.stack_outputs(data[rep].train.outputs);
      const auto path = estimator::fit_gd_path(design, v, config.filter.step, config.T_grid);
      std::vector<double>& out = errors[m][rep];
      for (const auto& model : path) {
        out.push_back(estimator::evaluate(model, data[rep].test.inputs, data[rep].test.outputs).empirical_risk);
      }
    } catch (const std::exception& e) {
      throw Error("heat-map cell (M=" + std::to_string(M) + ", repetition=" + std::to_string(rep) +
                  ") failed: " + describe(e));
    }
  });

  CommandResult result;
  dataio::Table table;
  table.header = {"M", "T", "mean_error", "std_error"};
  for (std::size_t m = 0; m < nM; ++m) {
    for (std::size_t t = 0; t < nT; ++t) {
      std::vector<double> cell(reps);
      for (std::size_t rep = 0; rep < reps; ++rep) cell[rep] = errors[m][rep][t];
      table.add_row({static_cast<std::int64_t>(config.M_grid[m]), static_cast<std::int64_t>(config.T_grid[t]),
                     mean_of(cell), stdev_of(cell)});
    }
  }
  if (config.svg) result.extra_files.emplace_back("heatmap.svg", heatmap_svg(table));
  result.tables.emplace_back("heatmap.csv", std::move(table));
  result.summary = {{"feature_map", map->name()},
                    {"summands", map->summands()},
                    {"step_size", config.filter.step},
                    {"repetitions", config.repetitions}};
  return result;
}

CommandResult cmd_rates(const RunConfig& config) {
  const auto problem = make_synthetic(config);
  const ProblemConfig& pc = config.problem;
  const auto filter = config.filter.make();
  const bool iterative = filter.kind() == spectral::FilterKind::landweber;
  const auto map = make_map(config, &problem, 1);
  const int p = map->summands();

  // Midpoint quadrature exact for products of two basis functions of index <= d_max.
  const Eigen::VectorXd grid = synthetic::midpoint_grid(2 * pc.d_max + 1);
  const Eigen::MatrixXd grid_inputs = grid;
  const Eigen::MatrixXd grid_target = problem.target_values(grid);
  const auto noise = synthetic::NoiseModel::bounded_uniform(pc.noise, problem.target().sup_bound());

  const std::size_t nn = config.n_grid.size();
  const std::size_t reps = static_cast<std::size_t>(config.repetitions);
  std::vector<synthetic::RateSchedule> schedules;
  for (long n : config.n_grid) {
    schedules.push_back(synthetic::rate_schedule(n, pc.r, pc.b, config.delta, config.schedule, p));
  }
  std::vector<std::vector<double>> excess(nn, std::vector<double>(reps));
  std::vector<long> steps(nn, 0);
  std::vector<double> lambdas(nn, 0.0);
  parallel_for(nn * reps, config.jobs, [&](std::size_t job) {
    const std::size_t i = job / reps;
    const std::size_t rep = job % reps;
    const auto& s = schedules[i];
    try {
      const auto train = synthetic::sample_dataset(
          problem, s.n, noise, derive_seed(config.seed, {kTrainStream, rep, static_cast<std::uint64_t>(s.n)}));
      auto fs = std::make_shared<const features::FeatureSet>(features::sample_features(
          map, s.features, derive_seed(config.seed, {kFeatureStream, rep, static_cast<std::uint64_t>(s.n)})));
      const auto design = features::build_design(fs, train.inputs);
      const Eigen::VectorXd v = design.stack_outputs(train.outputs);
      estimator::RFModel model;
      if (iterative) {
        const long T = std::max(1L, std::lround(1.0 / (config.filter.step * s.lambda)));
        model = estimator::fit_gd(design, v, config.filter.step, T);
      } else {
        model = estimator::fit_closed(design, v, filter, s.lambda);
      }
      const auto report = estimator::evaluate(model, grid_inputs, grid_target, grid_target);
      excess[i][rep] = *report.excess_l2;
      if (rep == 0) {
        steps[i] = model.steps;
        lambdas[i] = model.lambda;
      }
    } catch (const std::exception& e) {
      throw Error("rate cell (n=" + std::to_string(s.n) + ", repetition=" + std::to_string(rep) +
                  ") failed: " + describe(e));
    }
  });

  CommandResult result;
  dataio::Table table;
  table.header = {"n", "lambda", "steps", "M", "above_n0", "mean_excess_l2", "std_excess_l2", "bound_shape"};
  std::vector<double> ns;
  std::vector<double> means;
  for (std::size_t i = 0; i < nn; ++i) {
    const auto& s = schedules[i];
    const double m = mean_of(excess[i]);
    ns.push_back(static_cast<double>(s.n));
    means.push_back(m);
    table.add_row({static_cast<std::int64_t>(s.n), lambdas[i], static_cast<std::int64_t>(steps[i]),
                   static_cast<std::int64_t>(s.features), static_cast<std::int64_t>(s.above_n0 ? 1 : 0), m,
                   stdev_of(excess[i]), s.bound_shape});
  }
  const double target = -pc.r / (2.0 * pc.r + pc.b);
  const double largest = *std::max_element(means.begin(), means.end());
  const double smallest = *std::min_element(means.begin(), means.end());
  // Flat or vanishing errors leave no statistical error to track.
  const bool degenerate = nn < 3 || !(smallest > 0.0) || largest < 1e-12 || largest < 1.1 * smallest;
  double slope = 0.0;
  if (nn >= 3 && smallest > 0.0) slope = synthetic::fit_rate(ns, means);
  const bool below_n0 = std::any_of(schedules.begin(), schedules.end(), [](const auto& s) { return !s.above_n0; });

  dataio::Table summary;
  summary.header = {"slope", "target_slope", "points", "degenerate", "any_below_n0"};
  summary.add_row({slope, target, static_cast<std::int64_t>(nn), static_cast<std::int64_t>(degenerate ? 1 : 0),
                   static_cast<std::int64_t>(below_n0 ? 1 : 0)});
  result.tables.emplace_back("rates.csv", std::move(table));
  result.tables.emplace_back("rates_summary.csv", std::move(summary));
  result.summary = {{"slope", slope},
                    {"target_slope", target},
                    {"degenerate", degenerate},
                    {"problem", synthetic::to_json(problem)},
                    {"noise", synthetic::to_json(noise)}};
  return result;
}

CommandResult cmd_verify(const RunConfig& config) {
  const VerifyConfig& vc = config.verify;
  CommandResult result;

  dataio::Table filters;
  filters.header = {"filter",     "lambda",  "sup_t_phi", "sup_phi_scaled", "sup_residual", "sup_qualification",
                    "qualification_ratio", "flag_D", "flag_E", "flag_c0", "flag_cq"};
  bool flagged = false;
  const auto t_grid = spectral::unit_grid(vc.grid);
  for (const auto& fc : vc.filters) {
    const auto filter = fc.make();
    std::vector<double> lambdas;
    if (filter.kind() == spectral::FilterKind::landweber) {
      const long first = static_cast<long>(std::ceil(1.0 / fc.step - 1e-12));
      for (long T = first; T < first + vc.grid; ++T) lambdas.push_back(spectral::landweber_lambda(fc.step, T));
    } else {
      lambdas = spectral::unit_grid(vc.grid);
    }
    std::vector<double> q_grid;
    if (std::isfinite(filter.constants().qualification)) {
      const double nu = filter.constants().qualification;
      for (int k = 0; k <= 4; ++k) q_grid.push_back(nu * k / 4.0);
    } else {
      q_grid = {0.0, 0.5, 1.0, 2.0, 4.0};
    }
    const auto report = spectral::verify_filter_constants(filter, t_grid, lambdas, q_grid);
    flagged = flagged || report.flagged();
    for (const auto& row : report.rows) {
      filters.add_row({report.filter, row.lambda, row.sup_t_phi, row.sup_phi_scaled, row.sup_residual,
                       row.sup_qualification, row.qualification_ratio, static_cast<std::int64_t>(row.flag_D),
                       static_cast<std::int64_t>(row.flag_E), static_cast<std::int64_t>(row.flag_c0),
                       static_cast<std::int64_t>(row.flag_cq)});
    }
  }

  const auto spec = synthetic::SpectrumSpec::power_law(vc.b, vc.d_max);
  const auto problem = synthetic::make_problem(spec, vc.r, 1.0, derive_seed(config.seed, {kProblemStream}));
  const conclab::PopulationModel model(problem);
  std::vector<conclab::TrialReport> reports(vc.events.size());
  parallel_for(vc.events.size(), config.jobs, [&](std::size_t i) {
    reports[i] = conclab::simulate_event(vc.events[i], model, vc.settings, vc.trials,
                                         derive_seed(config.seed, {kEventStream, i}));
  });
  bool violated = false;
  for (const auto& r : reports) violated = violated || r.violation_rate > vc.settings.delta;

  result.tables.emplace_back("filters.csv", std::move(filters));
  result.tables.emplace_back("events.csv", conclab::report_table(reports));
  result.summary = {{"filter_flags", flagged}, {"event_violations", violated}};
  if (flagged || violated) result.exit = ExitCode::invariant;
  return result;
}

CommandResult cmd_ntk_compare(const RunConfig& config) {
  const ProblemData data = materialize(config, nullptr, 0);
  neuralop::CompareConfig base;
  base.map = ntk_config(config, 1);
  for (int s = 0; s < config.compare.seeds; ++s) {
    base.seeds.push_back(derive_seed(config.seed, {kNetworkStream, static_cast<std::uint64_t>(s)}));
  }
  base.network = {config.compare.step, config.compare.steps};
  base.kernel = base.network;

  std::vector<neuralop::WidthDiscrepancy> widths(config.M_grid.size());
  parallel_for(widths.size(), config.jobs, [&](std::size_t i) {
    neuralop::CompareConfig cc = base;
    cc.widths = {config.M_grid[i]};
    try {
      widths[i] = neuralop::compare_to_kernel_gd(data.train, data.test, cc).at(0);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw Error("ntk-compare width M=" + std::to_string(config.M_grid[i]) + " failed: " + describe(e));
    }
  });

  CommandResult result;
  dataio::Table table;
  table.header = {"M", "median_discrepancy", "max_discrepancy", "max_drift"};
  dataio::Table per_seed;
  per_seed.header = {"M", "seed_index", "discrepancy"};
  for (const auto& w : widths) {
    table.add_row({static_cast<std::int64_t>(w.width), w.median,
                   *std::max_element(w.discrepancies.begin(), w.discrepancies.end()), w.max_drift});
    for (std::size_t s = 0; s < w.discrepancies.size(); ++s) {
      per_seed.add_row({static_cast<std::int64_t>(w.width), static_cast<std::int64_t>(s), w.discrepancies[s]});
    }
  }
  result.tables.emplace_back("ntk_compare.csv", std::move(table));
  result.tables.emplace_back("ntk_compare_seeds.csv", std::move(per_seed));
  result.summary = {{"activation", config.features.activation},
                    {"trainable", features::to_string(config.features.trainable)}};
  return result;
}

CommandResult run_command(const RunConfig& config) {
  const std::string& cmd = config.subcommand;
  if (cmd == "gen") return cmd_gen(config);
  if (cmd == "fit") return cmd_fit(config);
  if (cmd == "sweep-heatmap") return cmd_sweep_heatmap(config);
  if (cmd == "rates") return cmd_rates(config);
  if (cmd == "verify") return cmd_verify(config);
  if (cmd == "ntk-compare") return cmd_ntk_compare(config);
  throw ConfigError("unknown subcommand '" + cmd + "'");
}

// ---------------------------------------------------------------------------
// Output

void write_outputs(const RunConfig& config, const CommandResult& result,
                   const std::vector<std::pair<std::string, std::filesystem::path>>& inputs) {
  json outputs = json::object();
  for (const auto& [name, table] : result.tables) {
    const std::string text = dataio::to_csv(table);
    dataio::write_text(config.out / name, text);
    outputs[name] = dataio::content_hash(text);
  }
  for (const auto& [name, text] : result.extra_files) {
    dataio::write_text(config.out / name, text);
    outputs[name] = dataio::content_hash(text);
  }
  json input_hashes = json::object();
  for (const auto& [name, path] : inputs) input_hashes[name] = dataio::file_hash(path);
  if (config.problem.kind == "csv") input_hashes["data"] = dataio::file_hash(config.problem.path);
  json manifest = {{"version", kVersion},
                   {"subcommand", config.subcommand},
                   {"seed", config.seed},
                   {"config", to_json(config)},
                   {"inputs", input_hashes},
                   {"outputs", outputs},
                   {"summary", result.summary},
                   {"exit_code", static_cast<int>(result.exit)}};
  dataio::write_text(config.out / "manifest.json", manifest.dump(2) + "\n");
}

std::string heatmap_svg(const dataio::Table& table) {
  const auto Ms = table.column("M");
  const auto Ts = table.column("T");
  const auto values = table.column("mean_error");
  std::vector<double> rows(Ms.begin(), Ms.end());
  std::vector<double> cols(Ts.begin(), Ts.end());
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  const double lo = values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
  const double hi = values.empty() ? 1.0 : *std::max_element(values.begin(), values.end());
  const int cell = 32;
  const int margin = 60;
  const int width = margin + cell * static_cast<int>(cols.size()) + 10;
  const int height = margin + cell * static_cast<int>(rows.size()) + 10;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto r = std::lower_bound(rows.begin(), rows.end(), Ms[k]) - rows.begin();
    const auto c = std::lower_bound(cols.begin(), cols.end(), Ts[k]) - cols.begin();
    const double x = hi > lo ? (values[k] - lo) / (hi - lo) : 0.0;
    // Linear ramp from dark blue (low error) to yellow (high error).
    const int red = static_cast<int>(std::lround(20 + x * 235));
    const int green = static_cast<int>(std::lround(30 + x * 200));
    const int blue = static_cast<int>(std::lround(120 - x * 100));
    svg << "  <rect x=\"" << margin + cell * c << "\" y=\"" << margin + cell * r << "\" width=\"" << cell
        << "\" height=\"" << cell << "\" fill=\"rgb(" << red << "," << green << "," << blue << ")\"/>\n";
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    svg << "  <text x=\"4\" y=\"" << margin + cell * r + cell / 2 + 4 << "\" font-size=\"10\">M="
        << static_cast<long>(rows[r]) << "</text>\n";
  }
  for (std::size_t c = 0; c < cols.size(); ++c) {
    svg << "  <text x=\"" << margin + cell * c + 2 << "\" y=\"" << margin - 6 << "\" font-size=\"10\">"
        << static_cast<long>(cols[c]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace specrf::experiments
