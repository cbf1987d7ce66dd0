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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specrf/dataio.hpp"
#include "specrf/spectral.hpp"
#include "specrf/synthetic.hpp"

namespace specrf::conclab {

/// 2 B beta / (3 m) + sqrt(2 ||V|| beta / m), beta = log(4 tr V / (||V|| delta)).
double bernstein_bound(double B, double V_norm, double V_trace, double m, double delta);
/// (2 B / n + 2 V / sqrt(n)) log(2 / delta), for delta in (0, 1/2).
double pinelis_bound(double B, double V, double n, double delta);

enum class EventId { E1, E2, E3, E4, E5, E6, E7, E8, E9 };

std::string to_string(EventId id);
EventId event_from_string(const std::string& name);
const std::vector<EventId>& all_events();
/// True for events about the data sample, false for events about the feature draw.
bool is_data_event(EventId id);

/// Quantities entering the right-hand sides. Unset fields that an event
/// needs make event_rhs throw ConfigError.
struct EventParameters {
  std::optional<double> kappa;
  std::optional<double> lambda;
  std::optional<double> n;
  std::optional<double> M;
  std::optional<double> delta;
  std::optional<double> summands;          // p
  std::optional<double> dim_population;    // N_L(lambda)
  std::optional<double> dim_features;      // N_{L_M}(lambda)
  std::optional<double> norm_population;   // ||L||
  std::optional<double> norm_features;     // ||L_M||
  std::optional<double> Q;
  std::optional<double> Z;
  std::optional<double> sup_constant;      // C with ||F*_lambda||_inf <= C lambda^(-(1/2 - r)+)
  std::optional<double> r;
  std::optional<double> residual_l2;       // ||G - S_M F*_lambda||_{L^2}
};

struct EventSpec {
  EventId id = EventId::E7;
  EventParameters parameters;
};

double event_rhs(const EventSpec& spec);

/**
 * Exact population operators of a finite-rank synthetic problem, in units
 * where the feature bound is 1: L = diag(mu_i / kappa^2) in the e_i basis and
 * L_M = diag(s_i) with s_i = count_i a_i / (kappa^2 M) for a feature draw.
 */
class PopulationModel {
 public:
  explicit PopulationModel(const synthetic::SyntheticProblem& problem);

  const synthetic::SyntheticProblem& problem() const { return *problem_; }
  double kappa() const { return kappa_; }
  const Eigen::VectorXd& population_spectrum() const { return population_; }
  /// Diagonal of L_M for features drawn with the given indices (1-based).
  Eigen::VectorXd feature_spectrum(const std::vector<int>& indices) const;
  std::vector<int> draw_features(int M, std::uint64_t seed) const;

 private:
  const synthetic::SyntheticProblem* problem_;
  double kappa_;
  Eigen::VectorXd population_;
};

struct SimulationSettings {
  int n = 100;
  int M = 100;
  double lambda = 0.1;  // in units where kappa = 1
  double delta = 0.1;
  double noise_half_width = 0.5;
  spectral::SpectralFilter filter = spectral::SpectralFilter::tikhonov();  // E9 only
};

/// Left-hand sides for one trial. The feature indices fix L_M; `inputs` and
/// `noise` are the data sample (ignored by feature events).
struct TrialInput {
  std::vector<int> features;
  Eigen::VectorXd inputs;
  Eigen::VectorXd noise;
};

/// Basis-coefficient evaluation of the event's left-hand side.
double event_lhs(EventId id, const PopulationModel& model, const SimulationSettings& settings,
                 const TrialInput& trial);
/// Independent evaluation through sampled features, the design matrix and
/// grid quadrature of the kernels. Slower; used to cross-check event_lhs.
double event_lhs_sampled(EventId id, const PopulationModel& model, const SimulationSettings& settings,
                         const TrialInput& trial);

/// All right-hand-side parameters of the event for a fixed feature draw.
EventSpec event_spec(EventId id, const PopulationModel& model, const SimulationSettings& settings,
                     const std::vector<int>& features);

struct TrialReport {
  EventId id = EventId::E7;
  int trials = 0;
  int violations = 0;
  double violation_rate = 0.0;
  double rhs = 0.0;
  double lhs_median = 0.0;
  double lhs_q90 = 0.0;
  double lhs_max = 0.0;
  SimulationSettings settings;
};

/// Draws trials: data events keep one feature draw and resample the data,
/// feature events resample the features. Throws DomainError for fewer than 50 trials.
TrialReport simulate_event(EventId id, const PopulationModel& model, const SimulationSettings& settings, int trials,
                           std::uint64_t seed);

TrialInput sample_trial(EventId id, const PopulationModel& model, const SimulationSettings& settings,
                        const std::vector<int>& fixed_features, std::uint64_t seed);

dataio::Table report_table(const std::vector<TrialReport>& reports);

}  // namespace specrf::conclab
