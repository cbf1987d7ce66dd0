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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "specrf/dataio.hpp"
#include "specrf/features.hpp"

namespace specrf::synthetic {

/// Power-law spectrum mu_i = i^(-1/b), i = 1..d_max, with a constant c_b such
/// that N(lambda) <= c_b lambda^(-b) for all lambda in (0, 1].
struct SpectrumSpec {
  double b = 1.0;
  int d_max = 256;
  Eigen::VectorXd eigenvalues;
  double c_b = 0.0;

  static SpectrumSpec power_law(double b, int d_max = 256);
  double trace() const { return eigenvalues.sum(); }
};

double effective_dimension(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues, double lambda);
double effective_dimension(const SpectrumSpec& spec, double lambda);

/// e_i(u) = sqrt(2) cos(pi i u), orthonormal in L^2[0, 1].
double basis_function(int i, double u);
/// Row j holds e_1..e_d at u_j.
Eigen::MatrixXd basis_matrix(const Eigen::Ref<const Eigen::VectorXd>& u, int d);

/// How features are drawn from {1..d_max}.
///   uniform:    pi(i) = 1/d_max,       phi(u, i) = sqrt(d_max mu_i) e_i(u)
///   importance: pi(i) = mu_i / tr(L),  phi(u, i) = sqrt(tr(L)) e_i(u)
/// Both reproduce the same kernel sum_i mu_i e_i(u) e_i(v).
enum class FeatureSampling { uniform, importance };

/// How the source coefficients h are drawn before scaling to norm R.
///   isotropic: uniform on the sphere.
///   critical:  |h_i| proportional to i^(-1/2) with random signs, which puts
///              the target on the boundary of the source class.
enum class SourceProfile { isotropic, critical };

std::string to_string(FeatureSampling sampling);
std::string to_string(SourceProfile profile);
FeatureSampling feature_sampling_from_string(const std::string& name);
SourceProfile source_profile_from_string(const std::string& name);

struct ProblemOptions {
  FeatureSampling sampling = FeatureSampling::uniform;
  SourceProfile profile = SourceProfile::isotropic;
};

struct SourceTarget {
  double r = 0.5;
  double R = 1.0;
  Eigen::VectorXd h;
  Eigen::VectorXd coefficients;  // g_i = mu_i^r h_i

  /// ||G||_{L^2}.
  double l2_norm() const { return coefficients.norm(); }
  /// sqrt(sum g_i^2 / mu_i), the norm in the kernel's RKHS.
  double rkhs_norm(const Eigen::VectorXd& eigenvalues) const;
  /// sqrt(2) sum |g_i|, an upper bound of sup_u |G(u)|.
  double sup_bound() const;
};

/// Additive noise uniform on [-half_width, half_width], with moment
/// constants Q = sup|G| + half_width and Z = Q.
struct NoiseModel {
  double half_width = 0.0;
  double Q = 0.0;
  double Z = 0.0;

  static NoiseModel bounded_uniform(double half_width, double target_sup);
};

class SyntheticProblem {
 public:
  SyntheticProblem(SpectrumSpec spectrum, SourceTarget target, ProblemOptions options, std::uint64_t seed);

  const SpectrumSpec& spectrum() const { return spectrum_; }
  const SourceTarget& target() const { return target_; }
  const ProblemOptions& options() const { return options_; }
  std::uint64_t seed() const { return seed_; }
  int rank() const { return spectrum_.d_max; }

  /// Sampling probabilities pi(i) and squared feature amplitudes a_i with phi(u, i) = sqrt(a_i) e_i(u).
  const Eigen::VectorXd& probabilities() const { return probabilities_; }
  const Eigen::VectorXd& amplitudes() const { return amplitudes_; }
  double kappa() const;
  const features::FeatureMapPtr& feature_map() const { return map_; }

  double target_value(double u) const;
  Eigen::VectorXd target_values(const Eigen::Ref<const Eigen::VectorXd>& u) const;
  double kernel(double u, double v) const;
  /// Squared target mass beyond d_max; zero because h has exactly d_max entries.
  double truncation_error() const { return 0.0; }
  /// True when 2r + b > 1.
  bool admissible() const { return 2.0 * target_.r + spectrum_.b > 1.0; }

 private:
  SpectrumSpec spectrum_;
  SourceTarget target_;
  ProblemOptions options_;
  std::uint64_t seed_;
  Eigen::VectorXd probabilities_;
  Eigen::VectorXd amplitudes_;
  features::FeatureMapPtr map_;
};

/// Throws DomainError if d_max < 1 or r, R are not positive.
SyntheticProblem make_problem(const SpectrumSpec& spec, double r, double R, std::uint64_t seed,
                              const ProblemOptions& options = {});

/// v_j = G(u_j) + eps_j, u_j ~ U[0, 1]; inputs n x 1, outputs n x 1.
dataio::Dataset sample_dataset(const SyntheticProblem& problem, Eigen::Index n, const NoiseModel& noise,
                               std::uint64_t seed);

/// Midpoints (k - 1/2)/N, k = 1..N. With N > d_max the midpoint rule integrates
/// every product e_i e_j exactly, so root mean squares over this grid are exact
/// L^2 norms for functions in the span.
Eigen::VectorXd midpoint_grid(int points);

struct ScheduleMultipliers {
  double lambda = 1.0;    // C
  double features = 1.0;  // C~
};

struct RateSchedule {
  long n = 0;
  double r = 0.5;
  double b = 1.0;
  double delta = 0.1;
  int summands = 1;
  ScheduleMultipliers multipliers;
  double lambda_raw = 0.0;  // before clamping
  double lambda = 0.0;      // clamped to (0, 1]
  long steps = 1;           // round(1 / lambda)
  double feature_exponent = 0.0;
  int features = 1;         // ceil(p C~ log(n) n^e), at least 1
  double n0 = 0.0;
  bool above_n0 = false;
  /// n^(-r/(2r+b)) log^(3r+1)(1/delta), the shape of the excess-risk bound.
  double bound_shape = 0.0;
};

/// Throws DomainError for 2r + b <= 1, n < 1 or delta outside (0, 1).
RateSchedule rate_schedule(long n, double r, double b, double delta, const ScheduleMultipliers& multipliers = {},
                           int summands = 1);
double feature_exponent(double r, double b);

/// Least-squares slope of log(error) against log(n).
double fit_rate(const std::vector<double>& ns, const std::vector<double>& errors);

nlohmann::json to_json(const SpectrumSpec& spec);
nlohmann::json to_json(const SyntheticProblem& problem);
nlohmann::json to_json(const NoiseModel& noise);
nlohmann::json to_json(const RateSchedule& schedule);

/// Regression with Gaussian inputs x ~ N(0, I_d) and target
/// f(x) = d^(-1/2) sum_k sin(frequency x_k), plus uniform noise.
struct GaussianRegression {
  int dim = 1;
  double frequency = 2.0;
  double noise_half_width = 0.1;

  double target(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  dataio::Dataset sample(Eigen::Index n, std::uint64_t seed) const;
};

}  // namespace specrf::synthetic
