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
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specrf/rng.hpp"

namespace specrf::features {

/// One random-feature parameter draw.
using Omega = Eigen::VectorXd;

/// Explicit finite parameter space with probabilities, used by exact kernels.
struct FiniteSupport {
  std::vector<Omega> atoms;
  std::vector<double> probabilities;
};

/**
 * A random feature map (u, omega) -> (phi_1(u, omega), ..., phi_p(u, omega)),
 * each phi_i taking values in the output space R^{d_v}.
 *
 * The output space carries the inner product <f, g> = w * sum_k f_k g_k with
 * w = output_weight(); grid-valued outputs use w = 1 / n_X. kappa() bounds
 * sum_i ||phi_i(u, omega)||^2 in that inner product and may be +infinity when
 * no almost-sure bound exists.
 */
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;

  virtual std::string name() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual int summands() const = 0;
  virtual double kappa() const = 0;
  virtual double output_weight() const { return 1.0; }

  virtual Omega sample(Rng& rng) const = 0;

  /// Writes phi_i(u, omega) into column i of `out` (d_v x p).
  virtual void evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, const Omega& omega,
                        Eigen::Ref<Eigen::MatrixXd> out) const = 0;

  /// Unscaled features for every sample: column m*p + i of `out`
  /// (d_v x M*p) holds phi_i(u, omega_m).
  virtual void evaluate_block(const Eigen::Ref<const Eigen::VectorXd>& u,
                              const std::vector<Omega>& samples,
                              Eigen::Ref<Eigen::MatrixXd> out) const;

  virtual const FiniteSupport* finite_support() const { return nullptr; }

  Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, const Omega& omega) const;
};

using FeatureMapPtr = std::shared_ptr<const FeatureMap>;

/// Feature map over a finite parameter space.
class DiscreteFeatureMap final : public FeatureMap {
 public:
  using FeatureMap::evaluate;

  using Evaluator = std::function<void(const Eigen::Ref<const Eigen::VectorXd>& u, const Omega& omega,
                                       Eigen::Ref<Eigen::MatrixXd> out)>;

  DiscreteFeatureMap(std::string name, int input_dim, int output_dim, int summands, double kappa,
                     FiniteSupport support, Evaluator evaluator);

  std::string name() const override { return name_; }
  int input_dim() const override { return input_dim_; }
  int output_dim() const override { return output_dim_; }
  int summands() const override { return summands_; }
  double kappa() const override { return kappa_; }
  Omega sample(Rng& rng) const override;
  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, const Omega& omega,
                Eigen::Ref<Eigen::MatrixXd> out) const override;
  const FiniteSupport* finite_support() const override { return &support_; }

 private:
  std::string name_;
  int input_dim_;
  int output_dim_;
  int summands_;
  double kappa_;
  FiniteSupport support_;
  std::vector<double> cumulative_;
  Evaluator evaluator_;
};

/// phi(u, (w, b)) = sqrt(2) cos(w.u + b), w ~ N(0, I / l^2), b ~ U[0, 2 pi].
/// Its limit kernel is exp(-|u - u'|^2 / (2 l^2)).
class RandomFourierMap final : public FeatureMap {
 public:
  using FeatureMap::evaluate;

  RandomFourierMap(int input_dim, double lengthscale);

  std::string name() const override { return "random_fourier"; }
  int input_dim() const override { return input_dim_; }
  int output_dim() const override { return 1; }
  int summands() const override { return 1; }
  double kappa() const override;
  Omega sample(Rng& rng) const override;
  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, const Omega& omega,
                Eigen::Ref<Eigen::MatrixXd> out) const override;

  double lengthscale() const { return lengthscale_; }
  double limit_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

 private:
  int input_dim_;
  double lengthscale_;
};

// ---------------------------------------------------------------------------
// Neural tangent feature maps

/// A pointwise activation together with its derivative.
class Activation {
 public:
  using Fn = double (*)(double);

  static Activation tanh();
  static Activation identity();
  static Activation sigmoid();
  static Activation softplus();
  /// Throws ConstructionError for unknown or non-differentiable activations.
  static Activation from_name(const std::string& name);

  const std::string& name() const { return name_; }
  double operator()(double x) const { return value_(x); }
  double derivative(double x) const { return derivative_(x); }
  /// sup |sigma| and sup |sigma'|; +infinity when unbounded.
  double value_bound() const { return value_bound_; }
  double derivative_bound() const { return derivative_bound_; }

 private:
  Activation(std::string name, Fn value, Fn derivative, double value_bound, double derivative_bound);

  std::string name_;
  Fn value_;
  Fn derivative_;
  double value_bound_;
  double derivative_bound_;
};

/// Lift A(u) on the grid: n_X x d_y grid values -> n_X x d_k channels.
struct Lift {
  enum class Kind { none, identity, custom };
  Kind kind = Kind::identity;
  int channels = 0;  // d_k for custom lifts
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> custom;

  static Lift none() { return {Kind::none, 0, {}}; }
  static Lift identity() { return {Kind::identity, 0, {}}; }

  int output_channels(int input_channels) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& grid_values) const;
  std::string name() const;
};

/// Which parameters of a shallow operator network are trained.
enum class ParameterSet { all, output_layer, hidden_layer };

std::string to_string(ParameterSet set);
ParameterSet parameter_set_from_string(const std::string& name);

/// Shape of the lifted input J(u)(x) = (A(u)(x), u(x), c(x)) on a grid.
struct NtkMapConfig {
  int grid_points = 1;    // n_X
  int input_channels = 1; // d_y
  Lift lift = Lift::identity();
  Eigen::MatrixXd bias;   // n_X x d_b; empty means a constant-one channel
  Activation activation = Activation::tanh();
  double tau = 1.0;
  ParameterSet trainable = ParameterSet::all;
  /// sup |u(x)| over admissible inputs; only used to report kappa.
  double input_bound = std::numeric_limits<double>::infinity();

  int lift_channels() const { return lift.output_channels(input_channels); }
  int bias_channels() const;
  int feature_dim() const { return lift_channels() + input_channels + bias_channels(); }
  Eigen::MatrixXd bias_matrix() const;
  /// J(u): n_X x d~. `u` holds grid values point-major, u[k*d_y + c].
  Eigen::MatrixXd lifted_input(const Eigen::Ref<const Eigen::VectorXd>& u) const;
};

/**
 * NTK feature map of a shallow operator network at initialization.
 * omega = b ~ N(0, I_{d~}); summands are psi(u) = sigma(<b, J(u)>) (output layer)
 * and psi'_j(u) = tau * sigma'(<b, J(u)>) J(u)^(j) (hidden layer), evaluated
 * pointwise on the grid.
 */
class NtkFeatureMap final : public FeatureMap {
 public:
  using FeatureMap::evaluate;

  explicit NtkFeatureMap(NtkMapConfig config);

  std::string name() const override { return "ntk"; }
  int input_dim() const override { return config_.grid_points * config_.input_channels; }
  int output_dim() const override { return config_.grid_points; }
  int summands() const override;
  double kappa() const override;
  double output_weight() const override { return 1.0 / config_.grid_points; }
  Omega sample(Rng& rng) const override;
  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, const Omega& omega,
                Eigen::Ref<Eigen::MatrixXd> out) const override;
  void evaluate_block(const Eigen::Ref<const Eigen::VectorXd>& u, const std::vector<Omega>& samples,
                      Eigen::Ref<Eigen::MatrixXd> out) const override;

  const NtkMapConfig& config() const { return config_; }

 private:
  void fill(const Eigen::MatrixXd& lifted, const Eigen::VectorXd& preactivation,
            Eigen::Ref<Eigen::MatrixXd> out) const;

  NtkMapConfig config_;
  bool with_output_;
  bool with_hidden_;
};

std::shared_ptr<const NtkFeatureMap> ntk_feature_map(const NtkMapConfig& config);

// ---------------------------------------------------------------------------

/// M i.i.d. draws from a feature map's parameter distribution.
class FeatureSet {
 public:
  FeatureSet(FeatureMapPtr map, std::vector<Omega> samples, std::uint64_t seed = 0);

  const FeatureMap& map() const { return *map_; }
  const FeatureMapPtr& map_ptr() const { return map_; }
  const std::vector<Omega>& samples() const { return samples_; }
  int size() const { return static_cast<int>(samples_.size()); }
  std::uint64_t seed() const { return seed_; }
  /// Number of columns M * p of a design built from this set.
  int width() const { return size() * map_->summands(); }

 private:
  FeatureMapPtr map_;
  std::vector<Omega> samples_;
  std::uint64_t seed_;
};

using FeatureSetPtr = std::shared_ptr<const FeatureSet>;

FeatureSet sample_features(const FeatureMapPtr& map, int count, std::uint64_t seed);

/// d_v x M*p block of features at u, scaled by 1/sqrt(M).
Eigen::MatrixXd feature_block(const FeatureSet& features, const Eigen::Ref<const Eigen::VectorXd>& u);

/// (1/M) sum_m sum_i phi_i(u, omega_m) phi_i(v, omega_m)^T. The operator on the
/// output space is output_weight() times this matrix.
Eigen::MatrixXd kernel_approx(const FeatureSet& features, const Eigen::Ref<const Eigen::VectorXd>& u,
                              const Eigen::Ref<const Eigen::VectorXd>& v);

/// sum_omega pi(omega) sum_i phi_i(u, omega) phi_i(v, omega)^T; requires a finite support.
Eigen::MatrixXd kernel_exact(const FeatureMap& map, const Eigen::Ref<const Eigen::VectorXd>& u,
                             const Eigen::Ref<const Eigen::VectorXd>& v);

/**
 * Finite-dimensional carrier of the empirical operators for one dataset.
 *
 * Z has n*d_v rows and M*p columns. Row block j holds sqrt(w) / (sqrt(M) kappa_scale)
 * times the features at input u_j, so that (1/n) Z^T Z is the empirical
 * covariance in coordinates where the output inner product is Euclidean.
 */
class DesignMatrix {
 public:
  DesignMatrix(FeatureSetPtr features, Eigen::MatrixXd Z, int n, double kappa_scale);

  const Eigen::MatrixXd& Z() const { return Z_; }
  int n() const { return n_; }
  int output_dim() const { return output_dim_; }
  int feature_count() const { return features_->size(); }
  int summands() const { return features_->map().summands(); }
  int width() const { return static_cast<int>(Z_.cols()); }
  double kappa_scale() const { return kappa_scale_; }
  double output_weight() const { return features_->map().output_weight(); }
  const FeatureSet& features() const { return *features_; }
  const FeatureSetPtr& features_ptr() const { return features_; }

  /// (1/n) Z^T Z.
  Eigen::MatrixXd cov() const;
  /// (1/n) Z^T v for v in stacked, weighted coordinates (see stack_outputs).
  Eigen::VectorXd embed_adjoint(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  /// Flattens an n x d_v output matrix into sqrt(w)-weighted stacked coordinates.
  Eigen::VectorXd stack_outputs(const Eigen::Ref<const Eigen::MatrixXd>& outputs) const;
  /// Prediction in R^{d_v} (unweighted) for coefficients theta.
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::VectorXd>& theta,
                          const Eigen::Ref<const Eigen::VectorXd>& u) const;

 private:
  FeatureSetPtr features_;
  Eigen::MatrixXd Z_;
  int n_;
  int output_dim_;
  double kappa_scale_;
};

/// Builds Z for the rows of `inputs` (n x input_dim). The normalization divisor
/// defaults to the map's kappa, or to the data-dependent bound
/// max_j sqrt(tr_w K_M(u_j, u_j)) when kappa is infinite.
DesignMatrix build_design(const FeatureSetPtr& features, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                          std::optional<double> kappa_scale = std::nullopt);

}  // namespace specrf::features
