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

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "specrf/features.hpp"
#include "specrf/spectral.hpp"

namespace specrf::estimator {

using features::DesignMatrix;
using spectral::SpectralFilter;

/// Which side of the design is factorized: the M*p square covariance
/// (primal) or the n*d_v square Gram matrix (dual). Both give the same estimator.
enum class Route { automatic, primal, dual };

/**
 * Cached eigendecomposition of a design, reused across regularization
 * parameters and filters.
 */
class DesignSpectrum {
 public:
  /// Keeps a reference to `design`, which must outlive the spectrum.
  explicit DesignSpectrum(const DesignMatrix& design, Route route = Route::automatic);

  Route route() const { return route_; }
  const DesignMatrix& design() const { return *design_; }
  /// Eigenvalues of the factorized side, descending; the nonzero ones are
  /// shared by (1/n) Z^T Z and (1/n) Z Z^T.
  const Eigen::VectorXd& eigenvalues() const { return system_.eigenvalues(); }

  /// phi_lambda(cov) (1/n) Z^T v for each column of v (stacked weighted outputs).
  Eigen::MatrixXd solve(const SpectralFilter& filter, double lambda,
                        const Eigen::Ref<const Eigen::MatrixXd>& v) const;

 private:
  const DesignMatrix* design_;
  Route route_;
  spectral::EigenSystem system_;
};

struct RFModel {
  features::FeatureSetPtr features;
  double kappa_scale = 1.0;
  int output_dim = 1;
  double output_weight = 1.0;
  Eigen::VectorXd theta;  // length M*p
  SpectralFilter filter = SpectralFilter::tikhonov();
  double lambda = 1.0;
  long steps = 0;  // gradient steps, 0 for closed-form fits

  int width() const { return static_cast<int>(theta.size()); }
};

struct RiskReport {
  double empirical_risk = 0.0;
  std::optional<double> excess_l2;
  int n_test = 0;
};

/// phi_lambda(cov) (1/n) Z^T v. Throws DomainError for lambda outside (0, 1],
/// a length mismatch or an all-zero design.
RFModel fit_closed(const DesignMatrix& design, const Eigen::Ref<const Eigen::VectorXd>& v,
                   const SpectralFilter& filter, double lambda, Route route = Route::automatic);
RFModel fit_closed(const DesignSpectrum& spectrum, const Eigen::Ref<const Eigen::VectorXd>& v,
                   const SpectralFilter& filter, double lambda);

/// T steps of theta <- theta - alpha (cov theta - (1/n) Z^T v) from zero.
RFModel fit_gd(const DesignMatrix& design, const Eigen::Ref<const Eigen::VectorXd>& v, double step_size,
               long steps, Route route = Route::automatic);

/// The same iteration, returning the iterate after each listed step count
/// (strictly increasing, all >= 1).
std::vector<RFModel> fit_gd_path(const DesignMatrix& design, const Eigen::Ref<const Eigen::VectorXd>& v,
                                 double step_size, const std::vector<long>& checkpoints,
                                 Route route = Route::automatic);

/// Prediction in unweighted output coordinates.
Eigen::VectorXd predict(const RFModel& model, const Eigen::Ref<const Eigen::VectorXd>& u);
/// One prediction per input row; returns n x d_v.
Eigen::MatrixXd predict_batch(const RFModel& model, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

/// Empirical risk (1/n) sum 1/2 ||prediction - v||^2 in the output inner
/// product; excess_l2 is the root mean squared distance to the oracle values
/// when given.
RiskReport evaluate(const RFModel& model, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                    const Eigen::Ref<const Eigen::MatrixXd>& outputs,
                    const std::optional<Eigen::MatrixXd>& oracle = std::nullopt);

/// Risk from precomputed predictions (n x d_v), same conventions as evaluate.
RiskReport risk_from_predictions(const Eigen::Ref<const Eigen::MatrixXd>& predictions,
                                 const Eigen::Ref<const Eigen::MatrixXd>& outputs, double output_weight,
                                 const std::optional<Eigen::MatrixXd>& oracle = std::nullopt);

}  // namespace specrf::estimator
