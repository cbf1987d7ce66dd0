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

#include "specrf/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "specrf/errors.hpp"

namespace specrf::features {

void FeatureMap::evaluate_block(const Eigen::Ref<const Eigen::VectorXd>& u,
                                const std::vector<Omega>& samples,
                                Eigen::Ref<Eigen::MatrixXd> out) const {
  const int p = summands();
  for (std::size_t m = 0; m < samples.size(); ++m)
    evaluate(u, samples[m], out.middleCols(static_cast<Eigen::Index>(m) * p, p));
}

Eigen::MatrixXd FeatureMap::evaluate(const Eigen::Ref<const Eigen::VectorXd>& u,
                                     const Omega& omega) const {
  Eigen::MatrixXd out(output_dim(), summands());
  evaluate(u, omega, out);
  return out;
}

// ---------------------------------------------------------------------------

DiscreteFeatureMap::DiscreteFeatureMap(std::string name, int input_dim, int output_dim, int summands,
                                       double kappa, FiniteSupport support, Evaluator evaluator)
    : name_(std::move(name)),
      input_dim_(input_dim),
      output_dim_(output_dim),
      summands_(summands),
      kappa_(kappa),
      support_(std::move(support)),
      evaluator_(std::move(evaluator)) {
  if (support_.atoms.empty() || support_.atoms.size() != support_.probabilities.size())
    throw ConstructionError("finite support needs one probability per atom");
  if (input_dim_ < 1 || output_dim_ < 1 || summands_ < 1)
    throw ConstructionError("feature map dimensions must be positive");
  if (!evaluator_) throw ConstructionError("feature map needs an evaluator");
  double total = 0.0;
  for (double p : support_.probabilities) {
    if (!(p >= 0.0)) throw ConstructionError("negative probability in finite support");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConstructionError("probabilities do not sum to one");
  cumulative_.resize(support_.probabilities.size());
  std::partial_sum(support_.probabilities.begin(), support_.probabilities.end(), cumulative_.begin());
  cumulative_.back() = 1.0;
}

Omega DiscreteFeatureMap::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double x = unit(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
  const auto index = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                           cumulative_.size() - 1);
  return support_.atoms[index];
}

void DiscreteFeatureMap::evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, const Omega& omega,
                                  Eigen::Ref<Eigen::MatrixXd> out) const {
  evaluator_(u, omega, out);
}

// ---------------------------------------------------------------------------

RandomFourierMap::RandomFourierMap(int input_dim, double lengthscale)
    : input_dim_(input_dim), lengthscale_(lengthscale) {
  if (input_dim < 1) throw ConstructionError("input dimension must be positive");
  if (!(lengthscale > 0.0)) throw ConstructionError("lengthscale must be positive");
}

double RandomFourierMap::kappa() const { return std::numbers::sqrt2; }

Omega RandomFourierMap::sample(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0 / lengthscale_);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Omega omega(input_dim_ + 1);
  for (int k = 0; k < input_dim_; ++k) omega[k] = normal(rng);
  omega[input_dim_] = phase(rng);
  return omega;
}

void RandomFourierMap::evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, const Omega& omega,
                                Eigen::Ref<Eigen::MatrixXd> out) const {
  if (u.size() != input_dim_) throw DomainError("input dimension mismatch");
  const double arg = omega.head(input_dim_).dot(u) + omega[input_dim_];
  out(0, 0) = std::numbers::sqrt2 * std::cos(arg);
}

double RandomFourierMap::limit_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  return std::exp(-(u - v).squaredNorm() / (2.0 * lengthscale_ * lengthscale_));
}

// ---------------------------------------------------------------------------

namespace {
double tanh_value(double x) { return std::tanh(x); }
double tanh_derivative(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}
double identity_value(double x) { return x; }
double identity_derivative(double) { return 1.0; }
double sigmoid_value(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double sigmoid_derivative(double x) {
  const double s = sigmoid_value(x);
  return s * (1.0 - s);
}
double softplus_value(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
}  // namespace

Activation::Activation(std::string name, Fn value, Fn derivative, double value_bound,
                       double derivative_bound)
    : name_(std::move(name)),
      value_(value),
      derivative_(derivative),
      value_bound_(value_bound),
      derivative_bound_(derivative_bound) {
  if (value_ == nullptr || derivative_ == nullptr)
    throw ConstructionError("activation '" + name_ + "' lacks a derivative");
}

Activation Activation::tanh() { return {"tanh", tanh_value, tanh_derivative, 1.0, 1.0}; }

Activation Activation::identity() {
  return {"identity", identity_value, identity_derivative, std::numeric_limits<double>::infinity(), 1.0};
}

Activation Activation::sigmoid() { return {"sigmoid", sigmoid_value, sigmoid_derivative, 1.0, 0.25}; }

Activation Activation::softplus() {
  return {"softplus", softplus_value, sigmoid_value, std::numeric_limits<double>::infinity(), 1.0};
}

Activation Activation::from_name(const std::string& name) {
  if (name == "tanh") return tanh();
  if (name == "identity" || name == "linear") return identity();
  if (name == "sigmoid") return sigmoid();
  if (name == "softplus") return softplus();
  if (name == "relu")
    throw ConstructionError("activation 'relu' is not continuously differentiable");
  throw ConstructionError("unknown activation '" + name + "'");
}

int Lift::output_channels(int input_channels) const {
  switch (kind) {
    case Kind::none:
      return 0;
    case Kind::identity:
      return input_channels;
    case Kind::custom:
      return channels;
  }
  return 0;
}

Eigen::MatrixXd Lift::apply(const Eigen::MatrixXd& grid_values) const {
  switch (kind) {
    case Kind::none:
      return Eigen::MatrixXd(grid_values.rows(), 0);
    case Kind::identity:
      return grid_values;
    case Kind::custom: {
      Eigen::MatrixXd lifted = custom(grid_values);
      if (lifted.rows() != grid_values.rows() || lifted.cols() != channels)
        throw ConsistencyError("custom lift returned the wrong shape");
      return lifted;
    }
  }
  return {};
}

std::string Lift::name() const {
  switch (kind) {
    case Kind::none:
      return "none";
    case Kind::identity:
      return "identity";
    case Kind::custom:
      return "custom";
  }
  return "custom";
}

std::string to_string(ParameterSet set) {
  switch (set) {
    case ParameterSet::all:
      return "all";
    case ParameterSet::output_layer:
      return "output";
    case ParameterSet::hidden_layer:
      return "hidden";
  }
  return "all";
}

ParameterSet parameter_set_from_string(const std::string& name) {
  if (name == "all") return ParameterSet::all;
  if (name == "output") return ParameterSet::output_layer;
  if (name == "hidden") return ParameterSet::hidden_layer;
  throw ConfigError("unknown parameter set '" + name + "' (expected all, output or hidden)");
}

int NtkMapConfig::bias_channels() const { return bias.size() == 0 ? 1 : static_cast<int>(bias.cols()); }

Eigen::MatrixXd NtkMapConfig::bias_matrix() const {
  if (bias.size() == 0) return Eigen::MatrixXd::Ones(grid_points, 1);
  return bias;
}

Eigen::MatrixXd NtkMapConfig::lifted_input(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (u.size() != static_cast<Eigen::Index>(grid_points) * input_channels) {
    std::ostringstream os;
    os << "input has " << u.size() << " values, grid expects " << grid_points << " x " << input_channels;
    throw DomainError(os.str());
  }
  Eigen::MatrixXd values(grid_points, input_channels);
  for (int k = 0; k < grid_points; ++k)
    for (int c = 0; c < input_channels; ++c) values(k, c) = u[k * input_channels + c];
  const Eigen::MatrixXd lifted = lift.apply(values);
  const Eigen::MatrixXd c = bias_matrix();
  Eigen::MatrixXd J(grid_points, lifted.cols() + input_channels + c.cols());
  J << lifted, values, c;
  return J;
}

NtkFeatureMap::NtkFeatureMap(NtkMapConfig config) : config_(std::move(config)) {
  if (config_.grid_points < 1 || config_.input_channels < 1)
    throw ConstructionError("grid and channel counts must be positive");
  if (config_.bias.size() != 0 && config_.bias.rows() != config_.grid_points)
    throw ConstructionError("bias channel must have one row per grid point");
  if (config_.lift.kind == Lift::Kind::custom && !config_.lift.custom)
    throw ConstructionError("custom lift without a function");
  with_output_ = config_.trainable != ParameterSet::hidden_layer;
  with_hidden_ = config_.trainable != ParameterSet::output_layer;
}

int NtkFeatureMap::summands() const {
  return (with_output_ ? 1 : 0) + (with_hidden_ ? config_.feature_dim() : 0);
}

double NtkFeatureMap::kappa() const {
  const Activation& act = config_.activation;
  double bound = 0.0;
  if (with_output_) bound += act.value_bound() * act.value_bound();
  if (with_hidden_) {
    double lifted = std::numeric_limits<double>::infinity();
    if (config_.lift.kind != Lift::Kind::custom) {
      const double b2 = config_.input_bound * config_.input_bound;
      const double bias = config_.bias_matrix().rowwise().squaredNorm().maxCoeff();
      lifted = (config_.lift_channels() + config_.input_channels) * b2 + bias;
    }
    bound += config_.tau * config_.tau * act.derivative_bound() * act.derivative_bound() * lifted;
  }
  return std::sqrt(bound);
}

Omega NtkFeatureMap::sample(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Omega b(config_.feature_dim());
  for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = normal(rng);
  return b;
}

void NtkFeatureMap::fill(const Eigen::MatrixXd& lifted, const Eigen::VectorXd& preactivation,
                         Eigen::Ref<Eigen::MatrixXd> out) const {
  const Activation& act = config_.activation;
  Eigen::Index col = 0;
  if (with_output_) {
    for (Eigen::Index k = 0; k < preactivation.size(); ++k) out(k, col) = act(preactivation[k]);
    ++col;
  }
  if (with_hidden_) {
    for (Eigen::Index k = 0; k < preactivation.size(); ++k) {
      const double slope = config_.tau * act.derivative(preactivation[k]);
      for (Eigen::Index j = 0; j < lifted.cols(); ++j) out(k, col + j) = slope * lifted(k, j);
    }
  }
}

void NtkFeatureMap::evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, const Omega& omega,
                             Eigen::Ref<Eigen::MatrixXd> out) const {
  const Eigen::MatrixXd J = config_.lifted_input(u);
  if (omega.size() != J.cols()) throw ConsistencyError("weight vector does not match lifted input");
  fill(J, J * omega, out);
}

void NtkFeatureMap::evaluate_block(const Eigen::Ref<const Eigen::VectorXd>& u,
                                   const std::vector<Omega>& samples,
                                   Eigen::Ref<Eigen::MatrixXd> out) const {
  const Eigen::MatrixXd J = config_.lifted_input(u);
  Eigen::MatrixXd B(J.cols(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t m = 0; m < samples.size(); ++m) {
    if (samples[m].size() != J.cols()) throw ConsistencyError("weight vector does not match lifted input");
    B.col(static_cast<Eigen::Index>(m)) = samples[m];
  }
  const Eigen::MatrixXd pre = J * B;
  const int p = summands();
  for (Eigen::Index m = 0; m < pre.cols(); ++m) fill(J, pre.col(m), out.middleCols(m * p, p));
}

std::shared_ptr<const NtkFeatureMap> ntk_feature_map(const NtkMapConfig& config) {
  return std::make_shared<const NtkFeatureMap>(config);
}

// ---------------------------------------------------------------------------

FeatureSet::FeatureSet(FeatureMapPtr map, std::vector<Omega> samples, std::uint64_t seed)
    : map_(std::move(map)), samples_(std::move(samples)), seed_(seed) {
  if (!map_) throw DomainError("feature set without a feature map");
  if (samples_.empty()) throw DomainError("feature set needs at least one sample");
}

FeatureSet sample_features(const FeatureMapPtr& map, int count, std::uint64_t seed) {
  if (count < 1) throw DomainError("number of random features must be at least 1");
  Rng rng = make_rng(seed);
  std::vector<Omega> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) samples.push_back(map->sample(rng));
  return FeatureSet(map, std::move(samples), seed);
}

namespace {

Eigen::MatrixXd unscaled_block(const FeatureSet& features, const Eigen::Ref<const Eigen::VectorXd>& u) {
  const FeatureMap& map = features.map();
  if (u.size() != map.input_dim()) {
    std::ostringstream os;
    os << "input of dimension " << u.size() << " given to a map expecting " << map.input_dim();
    throw DomainError(os.str());
  }
  Eigen::MatrixXd block(map.output_dim(), features.width());
  map.evaluate_block(u, features.samples(), block);
  return block;
}

}  // namespace

Eigen::MatrixXd feature_block(const FeatureSet& features, const Eigen::Ref<const Eigen::VectorXd>& u) {
  return unscaled_block(features, u) / std::sqrt(static_cast<double>(features.size()));
}

Eigen::MatrixXd kernel_approx(const FeatureSet& features, const Eigen::Ref<const Eigen::VectorXd>& u,
                              const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::MatrixXd a = unscaled_block(features, u);
  const Eigen::MatrixXd b = unscaled_block(features, v);
  const Eigen::Index dv = a.rows();
  // Explicit loops keep the summation order identical for (u, v) and (v, u).
  Eigen::MatrixXd K(dv, dv);
  for (Eigen::Index r = 0; r < dv; ++r)
    for (Eigen::Index c = 0; c < dv; ++c) {
      double sum = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) sum += a(r, k) * b(c, k);
      K(r, c) = sum;
    }
  return K / static_cast<double>(features.size());
}

Eigen::MatrixXd kernel_exact(const FeatureMap& map, const Eigen::Ref<const Eigen::VectorXd>& u,
                             const Eigen::Ref<const Eigen::VectorXd>& v) {
  const FiniteSupport* support = map.finite_support();
  if (support == nullptr)
    throw UnsupportedError("exact kernel needs a feature map with finite parameter space");
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(map.output_dim(), map.output_dim());
  Eigen::MatrixXd a(map.output_dim(), map.summands());
  Eigen::MatrixXd b(map.output_dim(), map.summands());
  for (std::size_t k = 0; k < support->atoms.size(); ++k) {
    map.evaluate(u, support->atoms[k], a);
    map.evaluate(v, support->atoms[k], b);
    K.noalias() += support->probabilities[k] * a * b.transpose();
  }
  return K;
}

// ---------------------------------------------------------------------------

DesignMatrix::DesignMatrix(FeatureSetPtr features, Eigen::MatrixXd Z, int n, double kappa_scale)
    : features_(std::move(features)), Z_(std::move(Z)), n_(n), kappa_scale_(kappa_scale) {
  output_dim_ = features_->map().output_dim();
  if (n_ < 1) throw DomainError("design needs at least one input");
  if (Z_.rows() != static_cast<Eigen::Index>(n_) * output_dim_ || Z_.cols() != features_->width())
    throw ConsistencyError("design matrix shape does not match its feature set");
}

Eigen::MatrixXd DesignMatrix::cov() const {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(Z_.cols(), Z_.cols());
  S.selfadjointView<Eigen::Lower>().rankUpdate(Z_.transpose(), 1.0 / n_);
  S.triangularView<Eigen::StrictlyUpper>() = S.transpose();
  return S;
}

Eigen::VectorXd DesignMatrix::embed_adjoint(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (v.size() != Z_.rows()) throw DomainError("output vector length does not match the design");
  return Z_.transpose() * v / static_cast<double>(n_);
}

Eigen::VectorXd DesignMatrix::stack_outputs(const Eigen::Ref<const Eigen::MatrixXd>& outputs) const {
  if (outputs.rows() != n_ || outputs.cols() != output_dim_)
    throw DomainError("outputs must be an n x d_v matrix");
  Eigen::VectorXd stacked(Z_.rows());
  const double root = std::sqrt(output_weight());
  for (int j = 0; j < n_; ++j)
    for (int k = 0; k < output_dim_; ++k) stacked[j * output_dim_ + k] = root * outputs(j, k);
  return stacked;
}

Eigen::VectorXd DesignMatrix::predict(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                      const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (theta.size() != Z_.cols()) throw DomainError("coefficient vector does not match the design");
  return feature_block(*features_, u) * theta / kappa_scale_;
}

DesignMatrix build_design(const FeatureSetPtr& features, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                          std::optional<double> kappa_scale) {
  if (!features) throw DomainError("design needs a feature set");
  const int n = static_cast<int>(inputs.rows());
  if (n < 1) throw DomainError("design needs at least one input");
  const FeatureMap& map = features->map();
  const int dv = map.output_dim();
  const double M = static_cast<double>(features->size());
  const double weight = map.output_weight();

  Eigen::MatrixXd Z(static_cast<Eigen::Index>(n) * dv, features->width());
  double data_bound = 0.0;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd u = inputs.row(j).transpose();
    auto rows = Z.middleRows(static_cast<Eigen::Index>(j) * dv, dv);
    rows = unscaled_block(*features, u);
    data_bound = std::max(data_bound, weight * rows.squaredNorm() / M);
  }
  data_bound = std::sqrt(data_bound);

  double scale;
  if (kappa_scale) {
    if (!(*kappa_scale > 0.0) || *kappa_scale < data_bound * (1.0 - 1e-12))
      throw DomainError("kappa_scale is below the feature norm of the data");
    scale = *kappa_scale;
  } else if (std::isfinite(map.kappa())) {
    if (data_bound > map.kappa() * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "inputs violate the feature bound: sqrt(tr K_M(u,u)) = " << data_bound
         << " > kappa = " << map.kappa();
      throw DomainError(os.str());
    }
    scale = map.kappa();
  } else {
    scale = data_bound > 0.0 ? data_bound : 1.0;
  }
  Z *= std::sqrt(weight) / (std::sqrt(M) * scale);
  return DesignMatrix(features, std::move(Z), n, scale);
}

}  // namespace specrf::features
