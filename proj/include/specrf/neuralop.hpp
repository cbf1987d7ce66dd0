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
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "specrf/dataio.hpp"
#include "specrf/features.hpp"

namespace specrf::neuralop {

using features::NtkMapConfig;

/**
 * Two-layer operator network on a fixed grid:
 *   G(u)(x_k) = M^(-1/2) sum_m a_m sigma(<b_m, J(u)(x_k)>).
 * Inputs are grid values, point-major (see NtkMapConfig::lifted_input).
 */
struct ShallowNO {
  NtkMapConfig config;
  Eigen::VectorXd a;  // M
  Eigen::MatrixXd B;  // M x d~

  int width() const { return static_cast<int>(a.size()); }
  int parameter_count() const { return static_cast<int>(a.size() + B.size()); }
  /// Flat parameters: a, then B row by row.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta);
};

/// a_m = tau for the first half and -tau for the second, b_{m + M/2} = b_m
/// with the first half standard normal. Throws DomainError for odd or nonpositive M.
ShallowNO init_symmetric(const NtkMapConfig& config, int width, std::uint64_t seed);

Eigen::VectorXd forward(const ShallowNO& net, const Eigen::Ref<const Eigen::VectorXd>& u);
/// One row of outputs per input row.
Eigen::MatrixXd forward_batch(const ShallowNO& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

/// n_X x P Jacobian of G(u) with respect to the flat parameters.
Eigen::MatrixXd jacobian(const ShallowNO& net, const Eigen::Ref<const Eigen::VectorXd>& u);

/// (1/2n) sum_i ||G(u_i) - v_i||^2 in the grid inner product (1/n_X) sum_k.
double empirical_risk(const ShallowNO& net, const dataio::Dataset& data);
/// Gradient of empirical_risk with respect to all flat parameters.
Eigen::VectorXd risk_gradient(const ShallowNO& net, const dataio::Dataset& data);

struct TrainRecord {
  std::vector<double> risk;   // t = 0..T
  std::vector<double> drift;  // ||theta_t - theta_0||, t = 0..T
  ShallowNO final;
};

/// Full-batch gradient descent on the parameters selected by
/// net.config.trainable; the others stay frozen.
TrainRecord train_gd(const ShallowNO& net, const dataio::Dataset& data, double step_size, long steps);

/// Tangent kernel at the current parameters, restricted to the trainable set:
/// J(u) J(v)^T with J the parameter Jacobian.
Eigen::MatrixXd empirical_ntk(const ShallowNO& net, const Eigen::Ref<const Eigen::VectorXd>& u,
                              const Eigen::Ref<const Eigen::VectorXd>& v);

/// Random features given by the network's input weights, one per neuron.
features::FeatureSet ntk_features(const ShallowNO& net, std::uint64_t seed = 0);
/// Throws ConsistencyError unless `fs` was built from this network's weights.
void check_features(const ShallowNO& net, const features::FeatureSet& fs);

/// Random input functions u(x) = sum_{k<=modes} c_k sin(pi k x) / k, c_k ~ N(0, 1),
/// on the midpoint grid, with targets v(x) = integral_0^x u(s) ds.
struct OperatorTask {
  int grid_points = 16;
  int modes = 4;

  Eigen::VectorXd grid() const;
  dataio::Dataset sample(Eigen::Index n, std::uint64_t seed) const;
};

struct GdSchedule {
  double step_size = 0.1;  // in network parameter units
  long steps = 100;
};

struct CompareConfig {
  NtkMapConfig map;
  std::vector<int> widths;
  std::vector<std::uint64_t> seeds;
  GdSchedule network;
  GdSchedule kernel;
};

struct WidthDiscrepancy {
  int width = 0;
  std::vector<double> discrepancies;  // one per seed
  double median = 0.0;
  double max_drift = 0.0;
};

/// Trains the network and the frozen-feature model on the same data with the
/// same schedule and reports the root mean squared grid distance of their
/// predictions on held-out inputs. Throws ConfigError if the two schedules differ.
std::vector<WidthDiscrepancy> compare_to_kernel_gd(const dataio::Dataset& train, const dataio::Dataset& heldout,
                                                   const CompareConfig& config);

double median(std::vector<double> values);

nlohmann::json to_json(const ShallowNO& net);
nlohmann::json to_json(const TrainRecord& record);

}  // namespace specrf::neuralop
