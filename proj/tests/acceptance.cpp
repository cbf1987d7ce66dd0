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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli_support.hpp"
#include "specrf/conclab.hpp"
#include "specrf/estimator.hpp"
#include "specrf/experiments.hpp"
#include "specrf/features.hpp"
#include "specrf/neuralop.hpp"
#include "specrf/rng.hpp"
#include "specrf/spectral.hpp"
#include "specrf/synthetic.hpp"

namespace {

using namespace specrf;
using nlohmann::json;

// Tolerances and budgets.
constexpr double kFilterGridRuntime = 5.0;
constexpr double kOracleTolerance = 1e-9;
constexpr double kOracleRuntime = 10.0;
constexpr double kRateSlopeTolerance = 0.1;
constexpr double kRateRuntime = 600.0;
constexpr double kPlateauTolerance = 0.05;
constexpr double kPlateauRuntime = 300.0;
constexpr double kMonteCarloSlope = -0.5;
constexpr double kMonteCarloTolerance = 0.15;
constexpr double kMonteCarloRuntime = 120.0;
constexpr double kDelta = 0.1;
constexpr double kEventRuntime = 600.0;
constexpr double kNtkKernelTolerance = 1e-10;
constexpr double kGradientTolerance = 1e-5;
constexpr double kInitTolerance = 1e-12;
constexpr double kNtkRuntime = 60.0;
constexpr double kLinearTolerance = 1e-10;
constexpr double kLinearizationRuntime = 300.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

Outcome with_budget(Outcome o, double elapsed, double budget) {
  if (budget > 0.0 && elapsed > budget) {
    o.pass = false;
    o.detail += "; over the " + fmt(budget) + " s budget";
  }
  return o;
}

// 1. Regularization-function axioms on 100 x 100 grids.
Outcome filter_axioms() {
  const std::vector<double> t_grid = spectral::unit_grid(100);
  const std::vector<double> q_grid = {0.0, 0.5, 1.0, 2.0, 4.0};
  int flagged = 0;
  std::string names;
  for (const auto& filter :
       {spectral::SpectralFilter::tikhonov(), spectral::SpectralFilter::landweber(0.5), spectral::SpectralFilter::cutoff()}) {
    std::vector<double> lambdas;
    if (filter.kind() == spectral::FilterKind::landweber) {
      const long first = static_cast<long>(std::ceil(1.0 / filter.step_size()));
      for (long T = first; T < first + 100; ++T) lambdas.push_back(spectral::landweber_lambda(filter.step_size(), T));
    } else {
      lambdas = spectral::unit_grid(100);
    }
    std::vector<double> qs;
    for (double q : q_grid)
      if (q <= filter.constants().qualification) qs.push_back(q);
    const auto report = spectral::verify_filter_constants(filter, t_grid, lambdas, qs);
    for (const auto& row : report.rows) flagged += row.flagged() ? 1 : 0;
    names += (names.empty() ? "" : ",") + report.filter;
  }
  return {flagged == 0, std::to_string(flagged) + " flagged rows over " + names};
}

// 2. Closed-form Landweber against explicit gradient descent.
Outcome oracle_equivalence() {
  Rng rng = make_rng(20260202);
  std::uniform_int_distribution<int> pick_n(5, 100), pick_m(2, 50), pick_T(1, 300), pick_d(1, 4);
  std::uniform_real_distribution<double> pick_step(0.05, 1.0), unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int instance = 0; instance < 50; ++instance) {
    const int n = pick_n(rng), M = pick_m(rng), d = pick_d(rng);
    const double alpha = pick_step(rng);
    // Landweber needs lambda = 1/(alpha T) <= 1.
    const long T = static_cast<long>(std::ceil(1.0 / alpha)) + pick_T(rng);
    auto map = std::make_shared<features::RandomFourierMap>(d, 0.5 + 0.5 * (instance % 3));
    auto fs = std::make_shared<const features::FeatureSet>(
        features::sample_features(map, M, derive_seed(20260202, {static_cast<std::uint64_t>(instance)})));
    Eigen::MatrixXd inputs(n, d);
    for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = unit(rng);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    const auto design = features::build_design(fs, inputs);
    const auto closed = estimator::fit_closed(design, v, spectral::SpectralFilter::landweber(alpha),
                                              spectral::landweber_lambda(alpha, T));
    const auto gd = estimator::fit_gd(design, v, alpha, T);
    const double scale = std::max(gd.theta.norm(), 1e-300);
    worst = std::max(worst, (closed.theta - gd.theta).norm() / scale);
  }
  return {worst <= kOracleTolerance, "max relative error " + fmt(worst)};
}

// 3. Rate recovery for one preset.
Outcome rate_recovery(const std::string& preset) {
  const std::string text = dataio::read_text(std::string(SPECRF_CONFIG_DIR) + "/" + preset);
  auto config = experiments::parse_config(json::parse(text), "rates");
  config.jobs = 1;
  const auto result = experiments::cmd_rates(config);
  const auto& summary = result.tables.at(1).second;
  const double slope = summary.column("slope").at(0);
  const double target = summary.column("target_slope").at(0);
  const bool degenerate = summary.column("degenerate").at(0) != 0.0;
  const bool pass = !degenerate && std::abs(slope - target) <= kRateSlopeTolerance;
  return {pass, preset + ": slope " + fmt(slope) + " vs " + fmt(target) + (degenerate ? " (degenerate)" : "")};
}

// 4. Test error at ceil(4 sqrt(n) p) features against 16 sqrt(n) p features at fixed T.
Outcome feature_plateau() {
  const int n = 1000;
  const int p = 3;  // scalar input, no lift: p = d + 2
  const int small = static_cast<int>(std::ceil(4.0 * std::sqrt(n) * p));
  const int large = static_cast<int>(std::lround(16.0 * std::sqrt(n) * p));
  // T_n on the r = 1/2, b = 1 schedule with alpha = 1/2.
  const auto schedule =
      synthetic::rate_schedule(n, 0.5, 1.0, kDelta, synthetic::ScheduleMultipliers{0.009095, 1.0});
  const long T = std::lround(1.0 / (0.5 * schedule.lambda));
  const json doc = {{"problem", {{"kind", "gaussian"}, {"dim", 1}, {"frequency", 2.0}, {"noise", 0.5}}},
                    {"features", {{"kind", "ntk"}, {"lift", "none"}}},
                    {"filter", {{"kind", "landweber"}, {"step", 0.5}}},
                    {"n_train", n},
                    {"n_test", n},
                    {"M_grid", {small, large}},
                    {"T_grid", {T}},
                    {"repetitions", 20},
                    {"seed", 20260104},
                    {"jobs", 1}};
  const auto result = experiments::cmd_sweep_heatmap(experiments::parse_config(doc, "sweep-heatmap"));
  const auto& table = result.tables.at(0).second;
  const auto Ms = table.column("M");
  const auto errors = table.column("mean_error");
  double e_small = 0.0, e_large = 0.0;
  for (std::size_t i = 0; i < Ms.size(); ++i) (Ms[i] == small ? e_small : e_large) = errors[i];
  const double gap = std::abs(e_small - e_large) / e_large;
  return {gap <= kPlateauTolerance, "M=" + std::to_string(small) + " error " + fmt(e_small) + ", M=" +
                                        std::to_string(large) + " error " + fmt(e_large) + ", T=" +
                                        std::to_string(T) + ", relative gap " + fmt(gap)};
}

// 5. Hilbert-Schmidt error of the random-feature kernel on the finite-rank problem.
Outcome monte_carlo_rate() {
  const int d_max = 64;
  const auto problem = synthetic::make_problem(synthetic::SpectrumSpec::power_law(1.0, d_max), 0.5, 1.0, 5);
  // A midpoint grid finer than the rank integrates products of basis functions exactly,
  // so the scaled Frobenius norm below is the L^2 Hilbert-Schmidt norm.
  const int N = 2 * d_max + 1;
  const Eigen::VectorXd grid = synthetic::midpoint_grid(N);
  Eigen::MatrixXd exact(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) exact(i, j) = problem.kernel(grid[i], grid[j]);
  std::vector<double> Ms, errors;
  for (int M : {16, 64, 256, 1024}) {
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto fs = features::sample_features(problem.feature_map(), M, derive_seed(20260105, {std::uint64_t(M), seed}));
      Eigen::MatrixXd Phi(N, M);
      for (int i = 0; i < N; ++i) Phi.row(i) = features::feature_block(fs, Eigen::VectorXd::Constant(1, grid[i]));
      mean += ((Phi * Phi.transpose()) - exact).norm() / N;
    }
    Ms.push_back(M);
    errors.push_back(mean / 100.0);
  }
  const double slope = synthetic::fit_rate(Ms, errors);
  return {std::abs(slope - kMonteCarloSlope) <= kMonteCarloTolerance, "slope " + fmt(slope)};
}

// 6. Violation rates of the concentration events.
Outcome concentration_events() {
  const auto problem = synthetic::make_problem(synthetic::SpectrumSpec::power_law(1.0, 64), 0.5, 1.0, 6);
  const conclab::PopulationModel model(problem);
  double worst = 0.0;
  std::string worst_event;
  int checked = 0;
  for (const auto& [n, M] : std::vector<std::pair<int, int>>{{100, 100}, {400, 400}}) {
    conclab::SimulationSettings s;
    s.n = n;
    s.M = M;
    s.lambda = 0.05;
    s.delta = kDelta;
    for (conclab::EventId id : conclab::all_events()) {
      const auto report =
          conclab::simulate_event(id, model, s, 200, derive_seed(20260106, {std::uint64_t(n), std::uint64_t(id)}));
      ++checked;
      if (report.violation_rate >= worst) {
        worst = report.violation_rate;
        worst_event = conclab::to_string(id) + " at n=M=" + std::to_string(n);
      }
    }
  }
  return {worst <= kDelta, std::to_string(checked) + " event runs, worst violation rate " + fmt(worst) + " (" +
                               worst_event + ")"};
}

// 7. Neural tangent kernel, gradients and symmetric initialization.
Outcome ntk_correctness() {
  double kernel_gap = 0.0, gradient_gap = 0.0, init_output = 0.0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    features::NtkMapConfig c;
    c.grid_points = 5 + static_cast<int>(seed % 3);
    c.lift = seed % 2 ? features::Lift::identity() : features::Lift::none();
    c.activation = features::Activation::from_name(seed % 3 == 0 ? "tanh" : seed % 3 == 1 ? "sigmoid" : "softplus");
    c.tau = 0.5 + 0.25 * static_cast<double>(seed);
    const int M = 8 + 4 * static_cast<int>(seed);
    auto net = neuralop::init_symmetric(c, M, seed);
    const auto fs = neuralop::ntk_features(net);
    const neuralop::OperatorTask task{c.grid_points, 3};
    const auto data = task.sample(6, 100 + seed);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      init_output = std::max(init_output, neuralop::forward(net, data.inputs.row(i).transpose()).cwiseAbs().maxCoeff());
      for (Eigen::Index j = 0; j < data.size(); ++j) {
        const Eigen::MatrixXd a = neuralop::empirical_ntk(net, data.inputs.row(i).transpose(), data.inputs.row(j).transpose());
        const Eigen::MatrixXd b = features::kernel_approx(fs, data.inputs.row(i).transpose(), data.inputs.row(j).transpose());
        kernel_gap = std::max(kernel_gap, (a - b).cwiseAbs().maxCoeff());
      }
    }
    // Gradients are checked away from the symmetric point.
    Rng rng = make_rng(derive_seed(20260107, {seed}));
    std::normal_distribution<double> normal(0.0, 0.3);
    Eigen::VectorXd theta = net.parameters();
    for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] += normal(rng);
    net.set_parameters(theta);
    const Eigen::VectorXd grad = neuralop::risk_gradient(net, data);
    Eigen::VectorXd fd(theta.size());
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      auto plus = net, minus = net;
      Eigen::VectorXd tp = theta, tm = theta;
      tp[k] += h;
      tm[k] -= h;
      plus.set_parameters(tp);
      minus.set_parameters(tm);
      fd[k] = (neuralop::empirical_risk(plus, data) - neuralop::empirical_risk(minus, data)) / (2 * h);
    }
    gradient_gap = std::max(gradient_gap, (grad - fd).norm() / grad.norm());
  }
  const bool pass = kernel_gap <= kNtkKernelTolerance && gradient_gap <= kGradientTolerance && init_output <= kInitTolerance;
  return {pass, "kernel gap " + fmt(kernel_gap) + ", gradient gap " + fmt(gradient_gap) + ", initial output " +
                    fmt(init_output)};
}

// 8. Network against frozen-kernel gradient descent.
Outcome linearization() {
  const json base = {{"M_grid", {64, 256, 1024}}, {"compare", {{"seeds", 10}}}, {"seed", 20260108}, {"jobs", 1}};
  json identity = base;
  identity["features"] = {{"activation", "identity"}, {"trainable", "hidden"}};
  const auto linear = experiments::cmd_ntk_compare(experiments::parse_config(identity, "ntk-compare"));
  const auto max_linear = linear.tables.at(0).second.column("max_discrepancy");
  const double worst = *std::max_element(max_linear.begin(), max_linear.end());
  const auto tanh = experiments::cmd_ntk_compare(experiments::parse_config(base, "ntk-compare"));
  const auto medians = tanh.tables.at(0).second.column("median_discrepancy");
  bool decreasing = true;
  for (std::size_t i = 1; i < medians.size(); ++i) decreasing = decreasing && medians[i] < medians[i - 1];
  std::string list;
  for (double m : medians) list += (list.empty() ? "" : " > ") + fmt(m);
  return {worst <= kLinearTolerance && decreasing,
          "identity max " + fmt(worst) + "; tanh medians " + list + (decreasing ? "" : " (not decreasing)")};
}

// 9. Byte-identical outputs across two CLI runs.
Outcome determinism() {
  const auto dir = testing::scratch("acceptance_determinism");
  std::vector<std::string> differing;
  int runs = 0;
  for (const auto& [sub, config] : testing::quick_configs()) {
    const auto path = testing::write_config(dir, sub, config);
    std::map<std::string, std::string> outputs[2];
    // Same output directory both times: the manifest records it.
    const auto out = dir / sub;
    for (int k = 0; k < 2; ++k) {
      std::filesystem::remove_all(out);
      const int code = testing::run_cli(sub + " --config '" + path.string() + "' --out '" + out.string() + "' --seed 9");
      ++runs;
      if (code != 0) differing.push_back(sub + " (exit " + std::to_string(code) + ")");
      for (const auto& entry : std::filesystem::directory_iterator(out))
        outputs[k][entry.path().filename().string()] = dataio::read_text(entry.path());
    }
    if (outputs[0] != outputs[1] || outputs[0].empty()) differing.push_back(sub);
  }
  std::filesystem::remove_all(dir);
  std::string detail = std::to_string(runs) + " runs";
  for (const auto& d : differing) detail += "; differs: " + d;
  return {differing.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::function<Outcome()> run;
    double budget;
  };
  const std::vector<Criterion> criteria = {
      {1, filter_axioms, kFilterGridRuntime},
      {2, oracle_equivalence, kOracleRuntime},
      {3, [] {
         const auto a = rate_recovery("rates_r05_b1.json");
         const auto b = rate_recovery("rates_r1_b05.json");
         return Outcome{a.pass && b.pass, a.detail + "; " + b.detail};
       },
       2 * kRateRuntime},
      {4, feature_plateau, kPlateauRuntime},
      {5, monte_carlo_rate, kMonteCarloRuntime},
      {6, concentration_events, kEventRuntime},
      {7, ntk_correctness, kNtkRuntime},
      {8, linearization, kLinearizationRuntime},
      {9, determinism, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(start);
    o = with_budget(o, elapsed, c.budget);
    failures += o.pass ? 0 : 1;
    std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << " ["
              << fmt(elapsed, 3) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
