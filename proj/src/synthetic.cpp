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

#include "specrf/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "specrf/errors.hpp"
#include "specrf/rng.hpp"

namespace specrf::synthetic {

SpectrumSpec SpectrumSpec::power_law(double b, int d_max) {
  if (!(b > 0.0 && b <= 1.0)) throw DomainError("capacity exponent b must lie in (0, 1]");
  if (d_max < 1) throw DomainError("spectrum needs at least one eigenvalue");
  SpectrumSpec spec;
  spec.b = b;
  spec.d_max = d_max;
  spec.eigenvalues.resize(d_max);
  for (int i = 0; i < d_max; ++i) spec.eigenvalues[i] = std::pow(static_cast<double>(i + 1), -1.0 / b);
  // N(lambda) <= d_max always. For b < 1 the series is dominated by the
  // integral of 1 / (1 + lambda x^(1/b)) over (0, inf), which equals
  // lambda^(-b) pi b / sin(pi b). For b = 1, N(lambda) lambda <= tr(L).
  const double analytic = b < 1.0 ? std::numbers::pi * b / std::sin(std::numbers::pi * b) : spec.trace();
  spec.c_b = std::min(analytic, static_cast<double>(d_max));
  return spec;
}

double effective_dimension(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("effective dimension needs lambda > 0");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) sum += eigenvalues[i] / (eigenvalues[i] + lambda);
  return sum;
}

double effective_dimension(const SpectrumSpec& spec, double lambda) {
  return effective_dimension(spec.eigenvalues, lambda);
}

double basis_function(int i, double u) { return std::numbers::sqrt2 * std::cos(std::numbers::pi * i * u); }

Eigen::MatrixXd basis_matrix(const Eigen::Ref<const Eigen::VectorXd>& u, int d) {
  Eigen::MatrixXd E(u.size(), d);
  for (Eigen::Index j = 0; j < u.size(); ++j)
    for (int i = 0; i < d; ++i) E(j, i) = basis_function(i + 1, u[j]);
  return E;
}

std::string to_string(FeatureSampling sampling) {
  return sampling == FeatureSampling::uniform ? "uniform" : "importance";
}

std::string to_string(SourceProfile profile) {
  return profile == SourceProfile::isotropic ? "isotropic" : "critical";
}

FeatureSampling feature_sampling_from_string(const std::string& name) {
  if (name == "uniform") return FeatureSampling::uniform;
  if (name == "importance") return FeatureSampling::importance;
  throw ConfigError("unknown feature sampling '" + name + "' (expected uniform or importance)");
}

SourceProfile source_profile_from_string(const std::string& name) {
  if (name == "isotropic") return SourceProfile::isotropic;
  if (name == "critical") return SourceProfile::critical;
  throw ConfigError("unknown source profile '" + name + "' (expected isotropic or critical)");
}

double SourceTarget::rkhs_norm(const Eigen::VectorXd& eigenvalues) const {
  return std::sqrt((coefficients.array().square() / eigenvalues.array()).sum());
}

double SourceTarget::sup_bound() const { return std::numbers::sqrt2 * coefficients.cwiseAbs().sum(); }

NoiseModel NoiseModel::bounded_uniform(double half_width, double target_sup) {
  if (!(half_width >= 0.0)) throw DomainError("noise half-width must be nonnegative");
  NoiseModel noise;
  noise.half_width = half_width;
  noise.Q = target_sup + half_width;
  noise.Z = noise.Q;
  return noise;
}

SyntheticProblem::SyntheticProblem(SpectrumSpec spectrum, SourceTarget target, ProblemOptions options,
                                   std::uint64_t seed)
    : spectrum_(std::move(spectrum)), target_(std::move(target)), options_(options), seed_(seed) {
  const int d = spectrum_.d_max;
  const double tr = spectrum_.trace();
  probabilities_.resize(d);
  amplitudes_.resize(d);
  for (int i = 0; i < d; ++i) {
    if (options_.sampling == FeatureSampling::uniform) {
      probabilities_[i] = 1.0 / d;
      amplitudes_[i] = d * spectrum_.eigenvalues[i];
    } else {
      probabilities_[i] = spectrum_.eigenvalues[i] / tr;
      amplitudes_[i] = tr;
    }
  }
  features::FiniteSupport support;
  for (int i = 0; i < d; ++i) {
    support.atoms.push_back(Eigen::VectorXd::Constant(1, i + 1));
    support.probabilities.push_back(probabilities_[i]);
  }
  const Eigen::VectorXd roots = amplitudes_.cwiseSqrt();
  auto evaluator = [roots](const Eigen::Ref<const Eigen::VectorXd>& u, const features::Omega& omega,
                           Eigen::Ref<Eigen::MatrixXd> out) {
    const int i = static_cast<int>(omega[0]);
    out(0, 0) = roots[i - 1] * basis_function(i, u[0]);
  };
  map_ = std::make_shared<const features::DiscreteFeatureMap>("finite_rank", 1, 1, 1, kappa(), std::move(support),
                                                              evaluator);
}

double SyntheticProblem::kappa() const { return std::sqrt(2.0 * amplitudes_.maxCoeff()); }

double SyntheticProblem::target_value(double u) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < target_.coefficients.size(); ++i)
    sum += target_.coefficients[i] * basis_function(static_cast<int>(i) + 1, u);
  return sum;
}

Eigen::VectorXd SyntheticProblem::target_values(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return basis_matrix(u, rank()) * target_.coefficients;
}

double SyntheticProblem::kernel(double u, double v) const {
  double sum = 0.0;
  for (int i = 0; i < rank(); ++i)
    sum += spectrum_.eigenvalues[i] * basis_function(i + 1, u) * basis_function(i + 1, v);
  return sum;
}

SyntheticProblem make_problem(const SpectrumSpec& spec, double r, double R, std::uint64_t seed,
                              const ProblemOptions& options) {
  if (spec.d_max < 1) throw DomainError("finite-rank problem needs d_max >= 1");
  if (spec.eigenvalues.size() != spec.d_max) throw DomainError("spectrum size does not match d_max");
  if (!(r > 0.0) || !(R > 0.0)) throw DomainError("source parameters r and R must be positive");
  Rng rng = make_rng(seed);
  SourceTarget target;
  target.r = r;
  target.R = R;
  target.h.resize(spec.d_max);
  if (options.profile == SourceProfile::isotropic) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < spec.d_max; ++i) target.h[i] = normal(rng);
  } else {
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < spec.d_max; ++i)
      target.h[i] = (coin(rng) ? 1.0 : -1.0) / std::sqrt(static_cast<double>(i + 1));
  }
  target.h *= R / target.h.norm();
  target.coefficients = spec.eigenvalues.array().pow(r) * target.h.array();
  return SyntheticProblem(spec, std::move(target), options, seed);
}

dataio::Dataset sample_dataset(const SyntheticProblem& problem, Eigen::Index n, const NoiseModel& noise,
                               std::uint64_t seed) {
  if (n < 1) throw DomainError("dataset needs at least one sample");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> eps(-noise.half_width, noise.half_width);
  dataio::Dataset data;
  data.inputs.resize(n, 1);
  data.outputs.resize(n, 1);
  for (Eigen::Index j = 0; j < n; ++j) data.inputs(j, 0) = unit(rng);
  data.outputs.col(0) = problem.target_values(data.inputs.col(0));
  if (noise.half_width > 0.0)
    for (Eigen::Index j = 0; j < n; ++j) data.outputs(j, 0) += eps(rng);
  data.source = "synthetic";
  data.seed = seed;
  return data;
}

Eigen::VectorXd midpoint_grid(int points) {
  if (points < 1) throw DomainError("grid needs at least one point");
  Eigen::VectorXd grid(points);
  for (int k = 0; k < points; ++k) grid[k] = (k + 0.5) / points;
  return grid;
}

double feature_exponent(double r, double b) {
  const double s = 2.0 * r + b;
  if (r < 0.5) return 1.0 / s;
  if (r <= 1.0) return (1.0 + b * (2.0 * r - 1.0)) / s;
  return 2.0 * r / s;
}

RateSchedule rate_schedule(long n, double r, double b, double delta, const ScheduleMultipliers& multipliers,
                           int summands) {
  if (n < 1) throw DomainError("sample size must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("confidence delta must lie in (0, 1)");
  if (!(r > 0.0) || !(b > 0.0 && b <= 1.0)) throw DomainError("need r > 0 and b in (0, 1]");
  if (!(2.0 * r + b > 1.0)) throw DomainError("schedule requires 2r + b > 1");
  if (!(multipliers.lambda > 0.0) || !(multipliers.features > 0.0))
    throw DomainError("schedule multipliers must be positive");
  if (summands < 1) throw DomainError("summand count must be positive");
  RateSchedule s;
  s.n = n;
  s.r = r;
  s.b = b;
  s.delta = delta;
  s.summands = summands;
  s.multipliers = multipliers;
  const double nn = static_cast<double>(n);
  const double s2 = 2.0 * r + b;
  s.lambda_raw = multipliers.lambda * std::pow(nn, -1.0 / s2) * std::pow(std::log(2.0 / delta), 3.0);
  s.lambda = std::min(s.lambda_raw, 1.0);
  s.steps = std::max(1L, std::lround(1.0 / s.lambda));
  s.feature_exponent = feature_exponent(r, b);
  const double m = summands * multipliers.features * std::log(nn) * std::pow(nn, s.feature_exponent);
  s.features = std::max(1, static_cast<int>(std::ceil(m)));
  s.n0 = std::exp(s2 / (s2 - 1.0));
  s.above_n0 = nn >= s.n0;
  s.bound_shape = std::pow(nn, -r / s2) * std::pow(std::log(1.0 / delta), 3.0 * r + 1.0);
  return s;
}

double fit_rate(const std::vector<double>& ns, const std::vector<double>& errors) {
  if (ns.size() != errors.size()) throw DomainError("sizes and errors differ in length");
  if (ns.size() < 3) throw DomainError("rate fit needs at least three points");
  const std::size_t k = ns.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(ns[i] > 0.0) || !(errors[i] > 0.0)) throw DomainError("rate fit needs positive sizes and errors");
    mx += std::log(ns[i]);
    my += std::log(errors[i]);
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = std::log(ns[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(errors[i]) - my);
  }
  if (sxx == 0.0) throw DomainError("rate fit needs at least two distinct sizes");
  return sxy / sxx;
}

namespace {
std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }
}  // namespace

nlohmann::json to_json(const SpectrumSpec& spec) {
  return {{"b", spec.b}, {"d_max", spec.d_max}, {"c_b", spec.c_b}, {"eigenvalues", to_vector(spec.eigenvalues)}};
}

nlohmann::json to_json(const SyntheticProblem& problem) {
  const SourceTarget& t = problem.target();
  return {{"spectrum", to_json(problem.spectrum())},
          {"r", t.r},
          {"R", t.R},
          {"seed", problem.seed()},
          {"sampling", to_string(problem.options().sampling)},
          {"profile", to_string(problem.options().profile)},
          {"kappa", problem.kappa()},
          {"h", to_vector(t.h)},
          {"coefficients", to_vector(t.coefficients)},
          {"truncation_error", problem.truncation_error()}};
}

nlohmann::json to_json(const NoiseModel& noise) {
  return {{"kind", "bounded_uniform"}, {"half_width", noise.half_width}, {"Q", noise.Q}, {"Z", noise.Z}};
}

nlohmann::json to_json(const RateSchedule& s) {
  return {{"n", s.n},
          {"r", s.r},
          {"b", s.b},
          {"delta", s.delta},
          {"summands", s.summands},
          {"lambda_multiplier", s.multipliers.lambda},
          {"feature_multiplier", s.multipliers.features},
          {"lambda_raw", s.lambda_raw},
          {"lambda", s.lambda},
          {"steps", s.steps},
          {"feature_exponent", s.feature_exponent},
          {"features", s.features},
          {"n0", s.n0},
          {"above_n0", s.above_n0},
          {"bound_shape", s.bound_shape}};
}

double GaussianRegression::target(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) sum += std::sin(frequency * x[k]);
  return sum / std::sqrt(static_cast<double>(x.size()));
}

dataio::Dataset GaussianRegression::sample(Eigen::Index n, std::uint64_t seed) const {
  if (n < 1) throw DomainError("dataset needs at least one sample");
  if (dim < 1) throw DomainError("input dimension must be positive");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> eps(-noise_half_width, noise_half_width);
  dataio::Dataset data;
  data.inputs.resize(n, dim);
  data.outputs.resize(n, 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int k = 0; k < dim; ++k) data.inputs(j, k) = normal(rng);
    data.outputs(j, 0) = target(data.inputs.row(j).transpose());
    if (noise_half_width > 0.0) data.outputs(j, 0) += eps(rng);
  }
  data.source = "gaussian_regression";
  data.seed = seed;
  return data;
}

}  // namespace specrf::synthetic
