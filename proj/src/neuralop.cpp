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

#include "specrf/neuralop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "specrf/errors.hpp"
#include "specrf/estimator.hpp"
#include "specrf/rng.hpp"

namespace specrf::neuralop {

using features::ParameterSet;

namespace {

struct Layer {
  Eigen::MatrixXd J;    // n_X x d~
  Eigen::MatrixXd act;  // n_X x M
  Eigen::MatrixXd slope;  // n_X x M, sigma'
};

Layer evaluate_layer(const ShallowNO& net, const Eigen::Ref<const Eigen::VectorXd>& u, bool with_slope) {
  Layer layer;
  layer.J = net.config.lifted_input(u);
  if (layer.J.cols() != net.B.cols()) throw ConsistencyError("input weights do not match the lifted input");
  const Eigen::MatrixXd pre = layer.J * net.B.transpose();
  const features::Activation& sigma = net.config.activation;
  layer.act = pre.unaryExpr([&](double x) { return sigma(x); });
  if (with_slope) layer.slope = pre.unaryExpr([&](double x) { return sigma.derivative(x); });
  return layer;
}

void check_input(const ShallowNO& net, Eigen::Index size) {
  const Eigen::Index expected = static_cast<Eigen::Index>(net.config.grid_points) * net.config.input_channels;
  if (size != expected)
    throw DomainError("input has " + std::to_string(size) + " grid values, network expects " +
                      std::to_string(expected));
}

void check_data(const ShallowNO& net, const dataio::Dataset& data) {
  if (data.size() == 0) throw DomainError("empty dataset");
  check_input(net, data.inputs.cols());
  if (data.outputs.cols() != net.config.grid_points || data.outputs.rows() != data.size())
    throw DomainError("outputs are not on the network's grid");
}

bool trains_output(const ShallowNO& net) { return net.config.trainable != ParameterSet::hidden_layer; }
bool trains_hidden(const ShallowNO& net) { return net.config.trainable != ParameterSet::output_layer; }

}  // namespace

Eigen::VectorXd ShallowNO::parameters() const {
  Eigen::VectorXd theta(parameter_count());
  theta.head(a.size()) = a;
  for (Eigen::Index m = 0; m < B.rows(); ++m) theta.segment(a.size() + m * B.cols(), B.cols()) = B.row(m).transpose();
  return theta;
}

void ShallowNO::set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta) {
  if (theta.size() != parameter_count()) throw DomainError("parameter vector has the wrong length");
  a = theta.head(a.size());
  for (Eigen::Index m = 0; m < B.rows(); ++m) B.row(m) = theta.segment(a.size() + m * B.cols(), B.cols()).transpose();
}

ShallowNO init_symmetric(const NtkMapConfig& config, int width, std::uint64_t seed) {
  if (width < 2 || width % 2 != 0) throw DomainError("symmetric initialization needs an even width >= 2");
  // Validates the configuration the same way the feature map does.
  const features::NtkFeatureMap check(config);
  ShallowNO net;
  net.config = config;
  const int half = width / 2;
  const int dim = config.feature_dim();
  net.a.resize(width);
  net.a.head(half).setConstant(config.tau);
  net.a.tail(half).setConstant(-config.tau);
  net.B.resize(width, dim);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int m = 0; m < half; ++m)
    for (int j = 0; j < dim; ++j) net.B(m, j) = normal(rng);
  net.B.bottomRows(half) = net.B.topRows(half);
  return net;
}

Eigen::VectorXd forward(const ShallowNO& net, const Eigen::Ref<const Eigen::VectorXd>& u) {
  check_input(net, u.size());
  const Layer layer = evaluate_layer(net, u, false);
  return layer.act * net.a / std::sqrt(static_cast<double>(net.width()));
}

Eigen::MatrixXd forward_batch(const ShallowNO& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  Eigen::MatrixXd out(inputs.rows(), net.config.grid_points);
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) out.row(i) = forward(net, inputs.row(i).transpose()).transpose();
  return out;
}

Eigen::MatrixXd jacobian(const ShallowNO& net, const Eigen::Ref<const Eigen::VectorXd>& u) {
  check_input(net, u.size());
  const Layer layer = evaluate_layer(net, u, true);
  const Eigen::Index M = net.width();
  const Eigen::Index d = net.B.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(M));
  Eigen::MatrixXd jac(layer.J.rows(), net.parameter_count());
  jac.leftCols(M) = layer.act * scale;
  for (Eigen::Index m = 0; m < M; ++m) {
    const Eigen::VectorXd s = layer.slope.col(m) * (net.a[m] * scale);
    jac.middleCols(M + m * d, d) = s.asDiagonal() * layer.J;
  }
  return jac;
}

double empirical_risk(const ShallowNO& net, const dataio::Dataset& data) {
  check_data(net, data);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    total += (forward(net, data.inputs.row(i).transpose()) - data.outputs.row(i).transpose()).squaredNorm();
  return 0.5 * total / (static_cast<double>(data.size()) * net.config.grid_points);
}

Eigen::VectorXd risk_gradient(const ShallowNO& net, const dataio::Dataset& data) {
  check_data(net, data);
  const Eigen::Index M = net.width();
  const double scale = 1.0 / std::sqrt(static_cast<double>(M));
  const double weight = 1.0 / (static_cast<double>(data.size()) * net.config.grid_points);
  Eigen::VectorXd grad_a = Eigen::VectorXd::Zero(M);
  Eigen::MatrixXd grad_B = Eigen::MatrixXd::Zero(M, net.B.cols());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Layer layer = evaluate_layer(net, data.inputs.row(i).transpose(), true);
    const Eigen::VectorXd residual = (layer.act * net.a * scale - data.outputs.row(i).transpose()) * weight;
    grad_a.noalias() += layer.act.transpose() * residual * scale;
    const Eigen::MatrixXd weighted = residual.asDiagonal() * layer.slope;  // n_X x M
    grad_B.noalias() += weighted.transpose() * layer.J;
  }
  grad_B = (net.a * scale).asDiagonal() * grad_B;
  Eigen::VectorXd grad(net.parameter_count());
  grad.head(M) = grad_a;
  for (Eigen::Index m = 0; m < M; ++m) grad.segment(M + m * net.B.cols(), net.B.cols()) = grad_B.row(m).transpose();
  return grad;
}

TrainRecord train_gd(const ShallowNO& net, const dataio::Dataset& data, double step_size, long steps) {
  if (!(step_size > 0.0)) throw DomainError("step size must be positive");
  if (steps < 0) throw DomainError("number of steps must be nonnegative");
  check_data(net, data);
  TrainRecord record;
  record.final = net;
  const Eigen::VectorXd theta0 = net.parameters();
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(theta0.size());
  if (!trains_output(net)) mask.head(net.width()).setZero();
  if (!trains_hidden(net)) mask.tail(net.B.size()).setZero();
  Eigen::VectorXd theta = theta0;
  record.risk.reserve(static_cast<std::size_t>(steps) + 1);
  record.drift.reserve(static_cast<std::size_t>(steps) + 1);
  record.risk.push_back(empirical_risk(record.final, data));
  record.drift.push_back(0.0);
  for (long t = 0; t < steps; ++t) {
    theta -= step_size * risk_gradient(record.final, data).cwiseProduct(mask);
    record.final.set_parameters(theta);
    record.risk.push_back(empirical_risk(record.final, data));
    record.drift.push_back((theta - theta0).norm());
    if (!std::isfinite(record.risk.back())) throw DomainError("training diverged at step " + std::to_string(t + 1));
  }
  return record;
}

Eigen::MatrixXd empirical_ntk(const ShallowNO& net, const Eigen::Ref<const Eigen::VectorXd>& u,
                              const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::MatrixXd ju = jacobian(net, u);
  const Eigen::MatrixXd jv = jacobian(net, v);
  const Eigen::Index M = net.width();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(ju.rows(), jv.rows());
  if (trains_output(net)) K.noalias() += ju.leftCols(M) * jv.leftCols(M).transpose();
  if (trains_hidden(net)) K.noalias() += ju.rightCols(net.B.size()) * jv.rightCols(net.B.size()).transpose();
  return K;
}

features::FeatureSet ntk_features(const ShallowNO& net, std::uint64_t seed) {
  std::vector<features::Omega> samples;
  samples.reserve(static_cast<std::size_t>(net.width()));
  for (Eigen::Index m = 0; m < net.B.rows(); ++m) samples.emplace_back(net.B.row(m).transpose());
  return features::FeatureSet(features::ntk_feature_map(net.config), std::move(samples), seed);
}

void check_features(const ShallowNO& net, const features::FeatureSet& fs) {
  if (fs.size() != net.width()) throw ConsistencyError("feature count differs from the network width");
  for (Eigen::Index m = 0; m < net.B.rows(); ++m) {
    const features::Omega& omega = fs.samples()[static_cast<std::size_t>(m)];
    if (omega.size() != net.B.cols() || omega != net.B.row(m).transpose())
      throw ConsistencyError("feature " + std::to_string(m) + " differs from the network's input weights");
  }
}

Eigen::VectorXd OperatorTask::grid() const {
  Eigen::VectorXd x(grid_points);
  for (int k = 0; k < grid_points; ++k) x[k] = (k + 0.5) / grid_points;
  return x;
}

dataio::Dataset OperatorTask::sample(Eigen::Index n, std::uint64_t seed) const {
  if (n < 1) throw DomainError("dataset needs at least one sample");
  if (grid_points < 1 || modes < 1) throw DomainError("grid and mode counts must be positive");
  const Eigen::VectorXd x = grid();
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  dataio::Dataset data;
  data.inputs = Eigen::MatrixXd::Zero(n, grid_points);
  data.outputs = Eigen::MatrixXd::Zero(n, grid_points);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 1; k <= modes; ++k) {
      const double c = normal(rng) / k;
      const double w = std::numbers::pi * k;
      for (int j = 0; j < grid_points; ++j) {
        data.inputs(i, j) += c * std::sin(w * x[j]);
        data.outputs(i, j) += c * (1.0 - std::cos(w * x[j])) / w;
      }
    }
  }
  data.source = "antiderivative";
  data.seed = seed;
  return data;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t k = values.size();
  return k % 2 == 1 ? values[k / 2] : 0.5 * (values[k / 2 - 1] + values[k / 2]);
}

std::vector<WidthDiscrepancy> compare_to_kernel_gd(const dataio::Dataset& train, const dataio::Dataset& heldout,
                                                   const CompareConfig& config) {
  if (config.network.step_size != config.kernel.step_size || config.network.steps != config.kernel.steps)
    throw ConfigError("network and kernel paths must use the same step size and number of steps");
  if (config.widths.empty() || config.seeds.empty()) throw ConfigError("width and seed lists must be nonempty");
  if (heldout.size() == 0) throw DomainError("empty held-out set");
  const double alpha = config.network.step_size;
  const long steps = config.network.steps;
  std::vector<WidthDiscrepancy> out;
  for (int width : config.widths) {
    WidthDiscrepancy row;
    row.width = width;
    for (std::uint64_t seed : config.seeds) {
      const ShallowNO net = init_symmetric(config.map, width, derive_seed(seed, {static_cast<std::uint64_t>(width)}));
      const TrainRecord record = train_gd(net, train, alpha, steps);
      row.max_drift = std::max(row.max_drift, *std::max_element(record.drift.begin(), record.drift.end()));
      const Eigen::MatrixXd network_pred = forward_batch(record.final, heldout.inputs);

      auto fs = std::make_shared<const features::FeatureSet>(ntk_features(net, seed));
      check_features(net, *fs);
      const features::DesignMatrix design = features::build_design(fs, train.inputs);
      Eigen::MatrixXd kernel_pred = Eigen::MatrixXd::Zero(heldout.size(), config.map.grid_points);
      // An identically zero design has zero gradient, so the kernel path stays at zero.
      if (design.Z().squaredNorm() > 0.0) {
        // theta = kappa_scale * (network-unit parameters), so one network step
        // of size alpha is a design step of size alpha * kappa_scale^2.
        const double design_step = alpha * design.kappa_scale() * design.kappa_scale();
        if (design_step > 1.0)
          throw DomainError("step size exceeds the stability limit 1 / kappa^2 of the kernel path");
        const estimator::RFModel model =
            estimator::fit_gd(design, design.stack_outputs(train.outputs), design_step, steps);
        kernel_pred = estimator::predict_batch(model, heldout.inputs);
      }
      const double mse = (network_pred - kernel_pred).squaredNorm() /
                         (static_cast<double>(heldout.size()) * config.map.grid_points);
      row.discrepancies.push_back(std::sqrt(mse));
    }
    row.median = median(row.discrepancies);
    out.push_back(std::move(row));
  }
  return out;
}

namespace {
std::vector<double> flat(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}
}  // namespace

nlohmann::json to_json(const ShallowNO& net) {
  return {{"width", net.width()},
          {"grid_points", net.config.grid_points},
          {"input_channels", net.config.input_channels},
          {"lift", net.config.lift.name()},
          {"bias_channels", net.config.bias_channels()},
          {"activation", net.config.activation.name()},
          {"tau", net.config.tau},
          {"trainable", features::to_string(net.config.trainable)},
          {"feature_dim", net.B.cols()},
          {"a", flat(net.a)},
          {"B", flat(net.B)}};
}

nlohmann::json to_json(const TrainRecord& record) {
  return {{"risk", record.risk}, {"drift", record.drift}, {"final", to_json(record.final)}};
}

}  // namespace specrf::neuralop
