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

#include "specrf/estimator.hpp"

#include <cmath>

#include "specrf/errors.hpp"

namespace specrf::estimator {

namespace {

Route resolve(Route route, const DesignMatrix& design) {
  if (route != Route::automatic) return route;
  return design.Z().rows() < design.Z().cols() ? Route::dual : Route::primal;
}

Eigen::MatrixXd gram(const DesignMatrix& design) {
  const Eigen::MatrixXd& Z = design.Z();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(Z.rows(), Z.rows());
  G.selfadjointView<Eigen::Lower>().rankUpdate(Z, 1.0 / design.n());
  G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
  return G;
}

void check_design(const DesignMatrix& design, Eigen::Index v_length) {
  if (v_length != design.Z().rows())
    throw DomainError("output vector has length " + std::to_string(v_length) + ", design expects " +
                      std::to_string(design.Z().rows()));
  if (design.Z().squaredNorm() == 0.0) throw DomainError("design matrix is identically zero");
}

RFModel make_model(const DesignMatrix& design, Eigen::VectorXd theta, const SpectralFilter& filter,
                   double lambda, long steps) {
  RFModel model;
  model.features = design.features_ptr();
  model.kappa_scale = design.kappa_scale();
  model.output_dim = design.output_dim();
  model.output_weight = design.output_weight();
  model.theta = std::move(theta);
  model.filter = filter;
  model.lambda = lambda;
  model.steps = steps;
  return model;
}

void check_step(double step_size, long steps) {
  if (!(step_size > 0.0 && step_size <= 1.0)) throw DomainError("step size must lie in (0, 1]");
  if (steps < 1) throw DomainError("number of gradient steps must be at least 1");
}

}  // namespace

DesignSpectrum::DesignSpectrum(const DesignMatrix& design, Route route)
    : design_(&design), route_(resolve(route, design)) {
  system_ = spectral::EigenSystem(route_ == Route::primal ? design.cov() : gram(design));
}

Eigen::MatrixXd DesignSpectrum::solve(const SpectralFilter& filter, double lambda,
                                      const Eigen::Ref<const Eigen::MatrixXd>& v) const {
  const DesignMatrix& design = *design_;
  check_design(design, v.rows());
  filter.check_lambda(lambda);
  if (route_ == Route::primal) {
    const Eigen::MatrixXd rhs = design.Z().transpose() * v / static_cast<double>(design.n());
    return spectral::apply_filter(filter, lambda, system_, rhs);
  }
  // phi(Z^T Z / n) Z^T = Z^T phi(Z Z^T / n)
  const Eigen::MatrixXd dual = spectral::apply_filter(filter, lambda, system_, v);
  return design.Z().transpose() * dual / static_cast<double>(design.n());
}

RFModel fit_closed(const DesignSpectrum& spectrum, const Eigen::Ref<const Eigen::VectorXd>& v,
                   const SpectralFilter& filter, double lambda) {
  Eigen::VectorXd theta = spectrum.solve(filter, lambda, v).col(0);
  const long steps = filter.kind() == spectral::FilterKind::landweber ? filter.landweber_steps(lambda) : 0;
  return make_model(spectrum.design(), std::move(theta), filter, lambda, steps);
}

RFModel fit_closed(const DesignMatrix& design, const Eigen::Ref<const Eigen::VectorXd>& v,
                   const SpectralFilter& filter, double lambda, Route route) {
  check_design(design, v.size());
  filter.check_lambda(lambda);
  const DesignSpectrum spectrum(design, route);
  return fit_closed(spectrum, v, filter, lambda);
}

std::vector<RFModel> fit_gd_path(const DesignMatrix& design, const Eigen::Ref<const Eigen::VectorXd>& v,
                                 double step_size, const std::vector<long>& checkpoints, Route route) {
  check_design(design, v.size());
  if (checkpoints.empty()) throw DomainError("no gradient-descent checkpoints requested");
  long previous = 0;
  for (long t : checkpoints) {
    check_step(step_size, t);
    if (t <= previous) throw DomainError("checkpoints must be strictly increasing");
    previous = t;
  }
  const SpectralFilter filter = SpectralFilter::landweber(step_size);
  const double n = design.n();
  const Eigen::MatrixXd& Z = design.Z();
  std::vector<RFModel> out;
  out.reserve(checkpoints.size());

  auto record = [&](const Eigen::VectorXd& theta, long t) {
    out.push_back(make_model(design, theta, filter, spectral::landweber_lambda(step_size, t), t));
  };

  if (resolve(route, design) == Route::primal) {
    const Eigen::MatrixXd S = design.cov();
    const Eigen::VectorXd b = Z.transpose() * v / n;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(Z.cols());
    Eigen::VectorXd grad(Z.cols());
    long t = 0;
    for (long target : checkpoints) {
      for (; t < target; ++t) {
        grad.noalias() = S * theta;
        grad -= b;
        theta -= step_size * grad;
      }
      record(theta, t);
    }
  } else {
    // theta_t = Z^T c_t / n with c <- c - alpha (G c - v), G = Z Z^T / n.
    const Eigen::MatrixXd G = gram(design);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(Z.rows());
    Eigen::VectorXd grad(Z.rows());
    long t = 0;
    for (long target : checkpoints) {
      for (; t < target; ++t) {
        grad.noalias() = G * c;
        grad -= v;
        c -= step_size * grad;
      }
      record(Z.transpose() * c / n, t);
    }
  }
  return out;
}

RFModel fit_gd(const DesignMatrix& design, const Eigen::Ref<const Eigen::VectorXd>& v, double step_size,
               long steps, Route route) {
  check_step(step_size, steps);
  return fit_gd_path(design, v, step_size, {steps}, route).front();
}

Eigen::VectorXd predict(const RFModel& model, const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (!model.features) throw DomainError("model has no feature set");
  if (model.theta.size() != model.features->width())
    throw ConsistencyError("coefficient vector does not match the feature set");
  return features::feature_block(*model.features, u) * model.theta / model.kappa_scale;
}

Eigen::MatrixXd predict_batch(const RFModel& model, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  Eigen::MatrixXd out(inputs.rows(), model.output_dim);
  for (Eigen::Index j = 0; j < inputs.rows(); ++j) {
    const Eigen::VectorXd u = inputs.row(j).transpose();
    out.row(j) = predict(model, u).transpose();
  }
  return out;
}

RiskReport risk_from_predictions(const Eigen::Ref<const Eigen::MatrixXd>& predictions,
                                 const Eigen::Ref<const Eigen::MatrixXd>& outputs, double output_weight,
                                 const std::optional<Eigen::MatrixXd>& oracle) {
  const Eigen::Index n = predictions.rows();
  if (n == 0) throw DomainError("empty test set");
  if (outputs.rows() != n || outputs.cols() != predictions.cols())
    throw DomainError("test outputs do not match the predictions");
  RiskReport report;
  report.n_test = static_cast<int>(n);
  report.empirical_risk = 0.5 * output_weight * (predictions - outputs).squaredNorm() / static_cast<double>(n);
  if (oracle) {
    if (oracle->rows() != n || oracle->cols() != predictions.cols())
      throw DomainError("oracle values do not match the predictions");
    report.excess_l2 = std::sqrt(output_weight * (predictions - *oracle).squaredNorm() / static_cast<double>(n));
  }
  if (!std::isfinite(report.empirical_risk) || (report.excess_l2 && !std::isfinite(*report.excess_l2)))
    throw InternalError("non-finite risk");
  return report;
}

RiskReport evaluate(const RFModel& model, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                    const Eigen::Ref<const Eigen::MatrixXd>& outputs, const std::optional<Eigen::MatrixXd>& oracle) {
  if (inputs.rows() == 0) throw DomainError("empty test set");
  return risk_from_predictions(predict_batch(model, inputs), outputs, model.output_weight, oracle);
}

}  // namespace specrf::estimator
