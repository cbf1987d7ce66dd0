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

#include "specrf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "specrf/errors.hpp"

namespace specrf::spectral {
namespace {

constexpr double kSymmetryTolerance = 1e-10;
constexpr double kSpectrumLow = -1e-10;
constexpr double kSpectrumHigh = 1.0 + 1e-9;
constexpr double kFlagSlack = 1e-12;

void check_unit_interval(double t, const char* what) {
  if (!(t > 0.0 && t <= 1.0)) {
    std::ostringstream os;
    os << what << " must lie in (0, 1], got " << t;
    throw DomainError(os.str());
  }
}

}  // namespace

SpectralFilter SpectralFilter::tikhonov() {
  SpectralFilter f;
  f.kind_ = FilterKind::tikhonov;
  f.name_ = "tikhonov";
  f.constants_ = {1.0, 1.0, 1.0, 1.0};
  return f;
}

SpectralFilter SpectralFilter::landweber(double step_size) {
  if (!(step_size > 0.0 && step_size <= 1.0))
    throw DomainError("landweber step size must lie in (0, 1]");
  SpectralFilter f;
  f.kind_ = FilterKind::landweber;
  f.name_ = "landweber";
  f.step_size_ = step_size;
  f.constants_ = {1.0, 1.0, 1.0, std::numeric_limits<double>::infinity()};
  return f;
}

SpectralFilter SpectralFilter::cutoff() {
  SpectralFilter f;
  f.kind_ = FilterKind::cutoff;
  f.name_ = "cutoff";
  f.constants_ = {1.0, 1.0, 1.0, std::numeric_limits<double>::infinity()};
  return f;
}

SpectralFilter SpectralFilter::custom(std::string name, Function phi, FilterConstants constants,
                                      QualificationConstant c_q) {
  if (!phi || !c_q) throw DomainError("custom filter needs a function and a c_q provider");
  SpectralFilter f;
  f.kind_ = FilterKind::custom;
  f.name_ = std::move(name);
  f.constants_ = constants;
  f.custom_ = std::move(phi);
  f.custom_cq_ = std::move(c_q);
  return f;
}

double SpectralFilter::c_q(double q) const {
  if (q < 0.0 || q > constants_.qualification)
    throw DomainError("q outside [0, qualification]");
  switch (kind_) {
    case FilterKind::tikhonov:
    case FilterKind::cutoff:
      return 1.0;
    case FilterKind::landweber:
      // t^q (1 - alpha t)^T <= t^q exp(-alpha T t) <= (q / (e alpha T))^q.
      return q == 0.0 ? 1.0 : std::pow(q / std::numbers::e, q);
    case FilterKind::custom:
      return custom_cq_(q);
  }
  return 1.0;
}

long SpectralFilter::landweber_steps(double lambda) const {
  if (kind_ != FilterKind::landweber) throw DomainError("not a landweber filter");
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  const double steps = 1.0 / (step_size_ * lambda);
  const double rounded = std::round(steps);
  if (rounded < 1.0 || std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
    std::ostringstream os;
    os << "lambda = " << lambda << " is not 1/(alpha T) for an integer T >= 1 (alpha = "
       << step_size_ << ")";
    throw ScheduleError(os.str());
  }
  return static_cast<long>(rounded);
}

void SpectralFilter::check_lambda(double lambda) const {
  check_unit_interval(lambda, "lambda");
  if (kind_ == FilterKind::landweber) landweber_steps(lambda);
}

double SpectralFilter::evaluate(double lambda, double t) const {
  switch (kind_) {
    case FilterKind::tikhonov:
      return 1.0 / (t + lambda);
    case FilterKind::landweber: {
      const double steps = static_cast<double>(landweber_steps(lambda));
      if (t == 0.0) return step_size_ * steps;
      // alpha * sum_{i<T} (1 - alpha t)^i = (1 - (1 - alpha t)^T) / t
      return -std::expm1(steps * std::log1p(-step_size_ * t)) / t;
    }
    case FilterKind::cutoff:
      return t >= lambda && t > 0.0 ? 1.0 / t : 0.0;
    case FilterKind::custom:
      return custom_(lambda, t);
  }
  return 0.0;
}

double SpectralFilter::evaluate_residual(double lambda, double t) const {
  switch (kind_) {
    case FilterKind::tikhonov:
      return lambda / (t + lambda);
    case FilterKind::landweber: {
      const double steps = static_cast<double>(landweber_steps(lambda));
      return std::exp(steps * std::log1p(-step_size_ * t));
    }
    case FilterKind::cutoff:
      return t >= lambda && t > 0.0 ? 0.0 : 1.0;
    case FilterKind::custom:
      return 1.0 - t * custom_(lambda, t);
  }
  return 1.0;
}

double landweber_lambda(double step_size, long steps) {
  if (steps < 1) throw DomainError("landweber needs at least one step");
  return 1.0 / (step_size * static_cast<double>(steps));
}

double filter_value(const SpectralFilter& filter, double lambda, double t) {
  filter.check_lambda(lambda);
  check_unit_interval(t, "t");
  return filter.evaluate(lambda, t);
}

double residual_value(const SpectralFilter& filter, double lambda, double t) {
  filter.check_lambda(lambda);
  check_unit_interval(t, "t");
  return filter.evaluate_residual(lambda, t);
}

EigenSystem::EigenSystem(const Eigen::Ref<const Eigen::MatrixXd>& symmetric) {
  if (symmetric.rows() != symmetric.cols()) throw DomainError("matrix is not square");
  const Eigen::Index n = symmetric.rows();
  if (n > 0) {
    const double asym = (symmetric - symmetric.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, symmetric.cwiseAbs().maxCoeff());
    if (asym > kSymmetryTolerance * scale) {
      std::ostringstream os;
      os << "matrix is not symmetric (max |A - A^T| = " << asym << ")";
      throw DomainError(os.str());
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
  if (solver.info() != Eigen::Success) throw InternalError("symmetric eigensolver did not converge");
  values_ = solver.eigenvalues().reverse();
  vectors_ = solver.eigenvectors().rowwise().reverse();
}

Eigen::MatrixXd EigenSystem::reconstruct() const {
  return vectors_ * values_.asDiagonal() * vectors_.transpose();
}

Eigen::MatrixXd EigenSystem::function(const std::function<double(double)>& f) const {
  Eigen::VectorXd mapped = values_.unaryExpr(f);
  return vectors_ * mapped.asDiagonal() * vectors_.transpose();
}

Eigen::VectorXd filtered_spectrum(const SpectralFilter& filter, double lambda,
                                  const Eigen::VectorXd& eigenvalues) {
  filter.check_lambda(lambda);
  Eigen::VectorXd out(eigenvalues.size());
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    double mu = eigenvalues[i];
    if (mu < kSpectrumLow || mu > kSpectrumHigh) {
      std::ostringstream os;
      os << "eigenvalue " << mu << " outside [0, 1]; rescale the operator first";
      throw DomainError(os.str());
    }
    mu = std::clamp(mu, 0.0, 1.0);
    out[i] = filter.evaluate(lambda, mu);
  }
  return out;
}

Eigen::MatrixXd apply_filter(const SpectralFilter& filter, double lambda, const EigenSystem& system,
                             const Eigen::Ref<const Eigen::MatrixXd>& rhs) {
  if (rhs.rows() != system.size()) throw DomainError("dimension mismatch between operator and rhs");
  const Eigen::VectorXd phi = filtered_spectrum(filter, lambda, system.eigenvalues());
  const Eigen::MatrixXd& V = system.eigenvectors();
  Eigen::MatrixXd coefficients = V.transpose() * rhs;
  coefficients = phi.asDiagonal() * coefficients;
  return V * coefficients;
}

Eigen::VectorXd apply_filter(const SpectralFilter& filter, double lambda,
                             const Eigen::Ref<const Eigen::MatrixXd>& A,
                             const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (A.rows() != b.size()) throw DomainError("dimension mismatch between operator and rhs");
  EigenSystem system(A);
  return apply_filter(filter, lambda, system, b);
}

bool FilterReport::flagged() const {
  return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.flagged(); });
}
bool FilterReport::flag_D() const {
  return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.flag_D; });
}
bool FilterReport::flag_E() const {
  return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.flag_E; });
}
bool FilterReport::flag_c0() const {
  return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.flag_c0; });
}
bool FilterReport::flag_cq() const {
  return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.flag_cq; });
}

FilterReport verify_filter_constants(const SpectralFilter& filter, const std::vector<double>& t_grid,
                                     const std::vector<double>& lambda_grid,
                                     const std::vector<double>& q_grid) {
  if (t_grid.empty() || lambda_grid.empty() || q_grid.empty())
    throw DomainError("verification grids must be nonempty");
  for (double t : t_grid) check_unit_interval(t, "t grid element");
  for (double l : lambda_grid) check_unit_interval(l, "lambda grid element");
  for (double q : q_grid)
    if (q < 0.0 || q > filter.constants().qualification)
      throw DomainError("q grid element outside [0, qualification]");

  const FilterConstants& c = filter.constants();
  FilterReport report;
  report.filter = filter.name();
  report.rows.reserve(lambda_grid.size());
  for (double lambda : lambda_grid) {
    filter.check_lambda(lambda);
    FilterCheckRow row;
    row.lambda = lambda;
    std::vector<double> residuals(t_grid.size());
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      const double t = t_grid[k];
      const double phi = filter.evaluate(lambda, t);
      const double r = filter.evaluate_residual(lambda, t);
      residuals[k] = std::abs(r);
      row.sup_t_phi = std::max(row.sup_t_phi, std::abs(t * phi));
      row.sup_phi_scaled = std::max(row.sup_phi_scaled, std::abs(phi) * lambda);
      row.sup_residual = std::max(row.sup_residual, std::abs(r));
    }
    for (double q : q_grid) {
      double sup = 0.0;
      for (std::size_t k = 0; k < t_grid.size(); ++k)
        sup = std::max(sup, residuals[k] * std::pow(t_grid[k], q));
      const double scaled = sup / std::pow(lambda, q);
      row.sup_qualification = std::max(row.sup_qualification, scaled);
      row.qualification_ratio = std::max(row.qualification_ratio, scaled / filter.c_q(q));
    }
    row.flag_D = row.sup_t_phi > c.D * (1.0 + kFlagSlack);
    row.flag_E = row.sup_phi_scaled > c.E * (1.0 + kFlagSlack);
    row.flag_c0 = row.sup_residual > c.c0 * (1.0 + kFlagSlack);
    row.flag_cq = row.qualification_ratio > 1.0 + kFlagSlack;
    report.rows.push_back(row);
  }
  return report;
}

std::vector<double> unit_grid(int n) {
  if (n < 1) throw DomainError("grid size must be positive");
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) grid[static_cast<std::size_t>(k - 1)] = static_cast<double>(k) / n;
  return grid;
}

}  // namespace specrf::spectral
