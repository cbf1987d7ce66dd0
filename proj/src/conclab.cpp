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

#include "specrf/conclab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "specrf/errors.hpp"
#include "specrf/features.hpp"
#include "specrf/rng.hpp"

namespace specrf::conclab {

namespace {

void require_positive(double x, const char* what) {
  if (!(x > 0.0)) throw DomainError(std::string(what) + " must be positive");
}

double need(const std::optional<double>& value, const char* name, EventId id) {
  if (!value) throw ConfigError("event " + to_string(id) + " needs parameter '" + name + "'");
  return *value;
}

double log_term(double delta) { return std::log(2.0 / delta); }

double op_norm_symmetric(const Eigen::MatrixXd& X) {
  if (X.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(X, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double op_norm(const Eigen::MatrixXd& X) {
  if (X.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  return svd.singularValues()(0);
}

}  // namespace

double bernstein_bound(double B, double V_norm, double V_trace, double m, double delta) {
  require_positive(B, "B");
  require_positive(V_norm, "||V||");
  require_positive(V_trace, "tr V");
  require_positive(m, "m");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (V_trace < V_norm) throw DomainError("trace of V is smaller than its norm");
  const double beta = std::log(4.0 * V_trace / (V_norm * delta));
  return 2.0 * B * beta / (3.0 * m) + std::sqrt(2.0 * V_norm * beta / m);
}

double pinelis_bound(double B, double V, double n, double delta) {
  require_positive(B, "B");
  if (!(V >= 0.0)) throw DomainError("V must be nonnegative");
  require_positive(n, "n");
  if (!(delta > 0.0 && delta < 0.5)) throw DomainError("delta must lie in (0, 1/2)");
  return (2.0 * B / n + 2.0 * V / std::sqrt(n)) * log_term(delta);
}

std::string to_string(EventId id) { return "E" + std::to_string(static_cast<int>(id) + 1); }

EventId event_from_string(const std::string& name) {
  for (EventId id : all_events())
    if (to_string(id) == name) return id;
  throw ConfigError("unknown event '" + name + "' (expected E1..E9)");
}

const std::vector<EventId>& all_events() {
  static const std::vector<EventId> events = {EventId::E1, EventId::E2, EventId::E3, EventId::E4, EventId::E5,
                                              EventId::E6, EventId::E7, EventId::E8, EventId::E9};
  return events;
}

bool is_data_event(EventId id) {
  switch (id) {
    case EventId::E2:
    case EventId::E4:
    case EventId::E5:
    case EventId::E6:
      return false;
    default:
      return true;
  }
}

double event_rhs(const EventSpec& spec) {
  const EventId id = spec.id;
  const EventParameters& p = spec.parameters;
  const double delta = need(p.delta, "delta", id);
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  const double k = need(p.kappa, "kappa", id);
  const double k2 = k * k;
  const double L = log_term(delta);
  switch (id) {
    case EventId::E1: {
      const double n = need(p.n, "n", id), lambda = need(p.lambda, "lambda", id);
      const double beta = std::log(4.0 * k2 * (need(p.dim_features, "dim_features", id) + 1.0) /
                                   (delta * need(p.norm_features, "norm_features", id)));
      return 4.0 * k2 * beta / (3.0 * n * lambda) + std::sqrt(2.0 * k2 * beta / (n * lambda));
    }
    case EventId::E2: {
      const double M = need(p.M, "M", id), lambda = need(p.lambda, "lambda", id);
      const double summands = need(p.summands, "summands", id);
      const double beta = std::log(4.0 * k2 * (need(p.dim_population, "dim_population", id) + 1.0) /
                                   (delta * need(p.norm_population, "norm_population", id)));
      return 4.0 * k2 * beta / (3.0 * M * lambda) + std::sqrt(2.0 * summands * k2 * beta / (M * lambda));
    }
    case EventId::E3: {
      const double n = need(p.n, "n", id), lambda = need(p.lambda, "lambda", id);
      const double N = need(p.dim_features, "dim_features", id);
      return (2.0 * k / (std::sqrt(lambda) * n) + std::sqrt(4.0 * k2 * N / n)) * L;
    }
    case EventId::E4: {
      const double M = need(p.M, "M", id), lambda = need(p.lambda, "lambda", id);
      const double N = need(p.dim_population, "dim_population", id);
      return (4.0 * k2 / (lambda * M) + std::sqrt(4.0 * k2 * N / (lambda * M))) * L;
    }
    case EventId::E5: {
      const double M = need(p.M, "M", id), lambda = need(p.lambda, "lambda", id);
      const double N = need(p.dim_population, "dim_population", id);
      return (2.0 * k / (std::sqrt(lambda) * M) + std::sqrt(4.0 * k2 * N / M)) * L;
    }
    case EventId::E6: {
      const double M = need(p.M, "M", id);
      return (2.0 * k2 / M + 2.0 * k2 / std::sqrt(M)) * L;
    }
    case EventId::E7: {
      const double n = need(p.n, "n", id);
      return (2.0 * k2 / n + 2.0 * k2 / std::sqrt(n)) * L;
    }
    case EventId::E8: {
      const double n = need(p.n, "n", id), lambda = need(p.lambda, "lambda", id);
      const double Q = need(p.Q, "Q", id), Z = need(p.Z, "Z", id);
      const double N = need(p.dim_features, "dim_features", id);
      return (4.0 * Q * Z * k / (std::sqrt(lambda) * n) + 4.0 * Q * std::sqrt(N) / std::sqrt(n)) * L;
    }
    case EventId::E9: {
      const double n = need(p.n, "n", id), lambda = need(p.lambda, "lambda", id);
      const double Q = need(p.Q, "Q", id), C = need(p.sup_constant, "sup_constant", id);
      const double r = need(p.r, "r", id), residual = need(p.residual_l2, "residual_l2", id);
      const double growth = std::pow(lambda, -std::max(0.5 - r, 0.0));
      const double B = 4.0 * (Q * Q + C * C * growth * growth);
      const double V = std::numbers::sqrt2 * (Q + C * growth) * residual;
      return 2.0 * (B / n + V / std::sqrt(n)) * L;
    }
  }
  throw InternalError("unhandled event");
}

PopulationModel::PopulationModel(const synthetic::SyntheticProblem& problem)
    : problem_(&problem), kappa_(problem.kappa()) {
  population_ = problem.spectrum().eigenvalues / (kappa_ * kappa_);
}

Eigen::VectorXd PopulationModel::feature_spectrum(const std::vector<int>& indices) const {
  if (indices.empty()) throw DomainError("feature draw is empty");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(problem_->rank());
  for (int i : indices) {
    if (i < 1 || i > problem_->rank()) throw DomainError("feature index out of range");
    counts[i - 1] += 1.0;
  }
  const Eigen::VectorXd fraction = counts / static_cast<double>(indices.size());
  return fraction.cwiseProduct(problem_->amplitudes() / (kappa_ * kappa_));
}

std::vector<int> PopulationModel::draw_features(int M, std::uint64_t seed) const {
  const features::FeatureSet fs = features::sample_features(problem_->feature_map(), M, seed);
  std::vector<int> indices;
  indices.reserve(static_cast<std::size_t>(M));
  for (const auto& omega : fs.samples()) indices.push_back(static_cast<int>(omega[0]));
  return indices;
}

namespace {

struct ActiveSet {
  std::vector<int> index;  // 0-based basis indices with s_i > 0
  Eigen::VectorXd s;
};

ActiveSet active_set(const Eigen::VectorXd& s) {
  ActiveSet a;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > 0.0) a.index.push_back(static_cast<int>(i));
  a.s.resize(static_cast<Eigen::Index>(a.index.size()));
  for (std::size_t k = 0; k < a.index.size(); ++k) a.s[static_cast<Eigen::Index>(k)] = s[a.index[k]];
  return a;
}

Eigen::VectorXd residual_coefficients(const PopulationModel& model, const SimulationSettings& settings,
                                      const Eigen::VectorXd& s) {
  const Eigen::VectorXd& g = model.problem().target().coefficients;
  Eigen::VectorXd c(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i)
    c[i] = settings.filter.evaluate_residual(settings.lambda, s[i]) * g[i];
  return c;
}

void check_settings(const SimulationSettings& settings) {
  if (settings.n < 1 || settings.M < 1) throw DomainError("n and M must be positive");
  if (!(settings.lambda > 0.0 && settings.lambda <= 1.0)) throw DomainError("lambda must lie in (0, 1]");
  if (!(settings.delta > 0.0 && settings.delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  settings.filter.check_lambda(settings.lambda);
}

}  // namespace

double event_lhs(EventId id, const PopulationModel& model, const SimulationSettings& settings,
                 const TrialInput& trial) {
  const double lambda = settings.lambda;
  const Eigen::VectorXd s = model.feature_spectrum(trial.features);
  const Eigen::VectorXd& mu = model.population_spectrum();
  if (!is_data_event(id)) {
    const Eigen::ArrayXd diff = (s - mu).array();
    switch (id) {
      case EventId::E2:
        return (diff.abs() / (mu.array() + lambda)).maxCoeff();
      case EventId::E4:
        return std::sqrt((diff / (mu.array() + lambda)).square().sum());
      case EventId::E5:
        return (diff.abs() / (mu.array() + lambda).sqrt()).maxCoeff();
      default:
        return std::sqrt(diff.square().sum());
    }
  }
  const Eigen::Index n = trial.inputs.size();
  if (n == 0) throw DomainError("data event without a sample");
  const int d = model.problem().rank();
  if (id == EventId::E9) {
    const Eigen::VectorXd c = residual_coefficients(model, settings, s);
    const Eigen::VectorXd values = synthetic::basis_matrix(trial.inputs, d) * c;
    return std::abs(values.squaredNorm() / static_cast<double>(n) - c.squaredNorm());
  }
  // Data events live on span{e_i : s_i > 0}, where A = U S W^T has U = those
  // basis vectors and S = diag(sqrt(s_i)).
  const ActiveSet a = active_set(s);
  const Eigen::Index k = a.s.size();
  const Eigen::MatrixXd E = synthetic::basis_matrix(trial.inputs, d);
  Eigen::MatrixXd Ea(n, k);
  for (Eigen::Index c = 0; c < k; ++c) Ea.col(c) = E.col(a.index[static_cast<std::size_t>(c)]);
  const Eigen::ArrayXd root = a.s.array().sqrt();
  const Eigen::ArrayXd shrink = (a.s.array() + lambda).rsqrt();
  if (id == EventId::E8) {
    if (trial.noise.size() != n) throw DomainError("noise sample does not match the inputs");
    const Eigen::VectorXd projected = Ea.transpose() * trial.noise / static_cast<double>(n);
    return (shrink * root * projected.array()).matrix().norm();
  }
  Eigen::MatrixXd D = Ea.transpose() * Ea / static_cast<double>(n) - Eigen::MatrixXd::Identity(k, k);
  D = root.matrix().asDiagonal() * D * root.matrix().asDiagonal();  // S (E_hat - I) S
  switch (id) {
    case EventId::E1:
      return op_norm_symmetric(shrink.matrix().asDiagonal() * D * shrink.matrix().asDiagonal());
    case EventId::E3:
      return (shrink.matrix().asDiagonal() * D).norm();
    case EventId::E7:
      return D.norm();
    default:
      throw InternalError("unhandled data event");
  }
}

double event_lhs_sampled(EventId id, const PopulationModel& model, const SimulationSettings& settings,
                         const TrialInput& trial) {
  const synthetic::SyntheticProblem& problem = model.problem();
  const double kappa = model.kappa();
  const double lambda = settings.lambda;
  const auto& map = problem.feature_map();
  std::vector<features::Omega> samples;
  samples.reserve(trial.features.size());
  for (int i : trial.features) samples.push_back(Eigen::VectorXd::Constant(1, i));
  auto fs = std::make_shared<const features::FeatureSet>(map, std::move(samples));
  // N > d_max midpoints integrate every product e_i e_j exactly.
  const int N = 2 * problem.rank() + 1;
  const Eigen::VectorXd grid = synthetic::midpoint_grid(N);
  Eigen::VectorXd point(1), other(1);

  if (!is_data_event(id)) {
    Eigen::MatrixXd KL(N, N), KM(N, N);
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) {
        point[0] = grid[a];
        other[0] = grid[b];
        KL(a, b) = features::kernel_exact(*map, point, other)(0, 0);
        KM(a, b) = features::kernel_approx(*fs, point, other)(0, 0);
      }
    const double scale = 1.0 / (kappa * kappa * N);
    KL *= scale;
    KM *= scale;
    const Eigen::MatrixXd diff = KM - KL;
    const spectral::EigenSystem population(KL);
    const Eigen::MatrixXd root = population.function([lambda](double t) { return 1.0 / std::sqrt(std::max(t, 0.0) + lambda); });
    switch (id) {
      case EventId::E2:
        return op_norm_symmetric(root * diff * root);
      case EventId::E4:
        return (root * diff * root).norm();
      case EventId::E5:
        return op_norm(root * diff);
      default:
        return diff.norm();
    }
  }

  const Eigen::Index n = trial.inputs.size();
  const int width = fs->width();
  Eigen::MatrixXd Zg(N, width);
  for (int a = 0; a < N; ++a) {
    point[0] = grid[a];
    Zg.row(a) = features::feature_block(*fs, point).row(0) / kappa;
  }
  const Eigen::MatrixXd cov_population = Zg.transpose() * Zg / static_cast<double>(N);

  if (id == EventId::E9) {
    Eigen::MatrixXd KM = Zg * Zg.transpose() / static_cast<double>(N);
    KM = 0.5 * (KM + KM.transpose());
    const Eigen::VectorXd target_grid = problem.target_values(grid) / std::sqrt(static_cast<double>(N));
    const spectral::EigenSystem system(KM);
    const Eigen::VectorXd filtered =
        spectral::apply_filter(settings.filter, lambda, system, target_grid).col(0) * std::sqrt(static_cast<double>(N));
    const Eigen::VectorXd theta = Zg.transpose() * filtered / static_cast<double>(N);
    const Eigen::VectorXd grid_residual = problem.target_values(grid) - Zg * theta;
    double sample = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      point[0] = trial.inputs[j];
      const double fit = (features::feature_block(*fs, point).row(0) / kappa).dot(theta);
      const double res = problem.target_value(trial.inputs[j]) - fit;
      sample += res * res;
    }
    return std::abs(sample / static_cast<double>(n) - grid_residual.squaredNorm() / static_cast<double>(N));
  }

  const features::DesignMatrix design = features::build_design(fs, trial.inputs, kappa);
  const Eigen::MatrixXd diff = design.cov() - cov_population;
  const spectral::EigenSystem population(cov_population);
  const Eigen::MatrixXd root = population.function([lambda](double t) { return 1.0 / std::sqrt(std::max(t, 0.0) + lambda); });
  switch (id) {
    case EventId::E1:
      return op_norm_symmetric(root * diff * root);
    case EventId::E3:
      return (root * diff).norm();
    case EventId::E7:
      return diff.norm();
    case EventId::E8:
      if (trial.noise.size() != n) throw DomainError("noise sample does not match the inputs");
      return (root * design.embed_adjoint(trial.noise)).norm();
    default:
      throw InternalError("unhandled data event");
  }
}

EventSpec event_spec(EventId id, const PopulationModel& model, const SimulationSettings& settings,
                     const std::vector<int>& features) {
  check_settings(settings);
  EventSpec spec;
  spec.id = id;
  EventParameters& p = spec.parameters;
  p.kappa = 1.0;
  p.lambda = settings.lambda;
  p.n = settings.n;
  p.M = settings.M;
  p.delta = settings.delta;
  p.summands = 1.0;
  const Eigen::VectorXd& mu = model.population_spectrum();
  p.dim_population = synthetic::effective_dimension(mu, settings.lambda);
  p.norm_population = mu.maxCoeff();
  if (!features.empty()) {
    const Eigen::VectorXd s = model.feature_spectrum(features);
    p.dim_features = synthetic::effective_dimension(s, settings.lambda);
    p.norm_features = s.maxCoeff();
    const synthetic::SyntheticProblem& problem = model.problem();
    const synthetic::NoiseModel noise =
        synthetic::NoiseModel::bounded_uniform(settings.noise_half_width, problem.target().sup_bound());
    p.Q = noise.Q;
    p.Z = noise.Z;
    p.r = problem.target().r;
    // ||F*_lambda||_inf <= 2 kappa^(2r+1) R D lambda^(-(1/2-r)+); with kappa
    // normalized to 1 the source radius becomes kappa^(2r) R.
    const double radius = std::pow(model.kappa(), 2.0 * problem.target().r) * problem.target().R;
    p.sup_constant = 2.0 * radius * settings.filter.constants().D;
    p.residual_l2 = residual_coefficients(model, settings, s).norm();
  }
  return spec;
}

TrialInput sample_trial(EventId id, const PopulationModel& model, const SimulationSettings& settings,
                        const std::vector<int>& fixed_features, std::uint64_t seed) {
  TrialInput trial;
  if (!is_data_event(id)) {
    trial.features = model.draw_features(settings.M, seed);
    return trial;
  }
  trial.features = fixed_features;
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> eps(-settings.noise_half_width, settings.noise_half_width);
  trial.inputs.resize(settings.n);
  trial.noise.resize(settings.n);
  for (int j = 0; j < settings.n; ++j) trial.inputs[j] = unit(rng);
  for (int j = 0; j < settings.n; ++j) trial.noise[j] = settings.noise_half_width > 0.0 ? eps(rng) : 0.0;
  return trial;
}

TrialReport simulate_event(EventId id, const PopulationModel& model, const SimulationSettings& settings, int trials,
                           std::uint64_t seed) {
  if (trials < 50) throw DomainError("simulation needs at least 50 trials");
  check_settings(settings);
  const std::vector<int> features = model.draw_features(settings.M, derive_seed(seed, {0x5eedULL}));
  const double rhs = event_rhs(event_spec(id, model, settings, features));
  std::vector<double> lhs;
  lhs.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    const TrialInput trial =
        sample_trial(id, model, settings, features, derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    lhs.push_back(event_lhs(id, model, settings, trial));
  }
  TrialReport report;
  report.id = id;
  report.trials = trials;
  report.violations = static_cast<int>(std::count_if(lhs.begin(), lhs.end(), [rhs](double x) { return x > rhs; }));
  report.violation_rate = static_cast<double>(report.violations) / trials;
  report.rhs = rhs;
  std::sort(lhs.begin(), lhs.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(lhs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, lhs.size() - 1);
    return lhs[lo] + (pos - static_cast<double>(lo)) * (lhs[hi] - lhs[lo]);
  };
  report.lhs_median = quantile(0.5);
  report.lhs_q90 = quantile(0.9);
  report.lhs_max = lhs.back();
  report.settings = settings;
  return report;
}

dataio::Table report_table(const std::vector<TrialReport>& reports) {
  dataio::Table table;
  table.header = {"event", "n", "M", "lambda", "delta", "trials", "violations", "violation_rate", "rhs",
                  "lhs_median", "lhs_q90", "lhs_max"};
  for (const TrialReport& r : reports) {
    table.add_row({to_string(r.id), std::int64_t{r.settings.n}, std::int64_t{r.settings.M}, r.settings.lambda,
                   r.settings.delta, std::int64_t{r.trials}, std::int64_t{r.violations}, r.violation_rate, r.rhs,
                   r.lhs_median, r.lhs_q90, r.lhs_max});
  }
  return table;
}

}  // namespace specrf::conclab
