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
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace specrf::spectral {

enum class FilterKind { tikhonov, landweber, cutoff, custom };

/// Declared constants of a regularization family. A qualification of
/// +infinity means every q >= 0 is admissible.
struct FilterConstants {
  double D = 1.0;
  double E = 1.0;
  double c0 = 1.0;
  double qualification = std::numeric_limits<double>::infinity();
};

/**
 * A family of spectral regularization functions phi_lambda on (0, 1].
 *
 * Tikhonov:  phi(t) = 1 / (t + lambda)
 * Landweber: phi(t) = alpha * sum_{i<T} (1 - alpha t)^i with lambda = 1/(alpha T),
 *            i.e. T steps of gradient descent with step alpha started at zero.
 * Cutoff:    phi(t) = 1/t for t >= lambda, 0 otherwise.
 *
 * Custom filters carry a user function and user-declared constants; they exist
 * so that constant verification can be exercised on families that violate it.
 */
class SpectralFilter {
 public:
  using Function = std::function<double(double lambda, double t)>;
  using QualificationConstant = std::function<double(double q)>;

  static SpectralFilter tikhonov();
  static SpectralFilter landweber(double step_size);
  static SpectralFilter cutoff();
  static SpectralFilter custom(std::string name, Function phi, FilterConstants constants,
                               QualificationConstant c_q);

  FilterKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double step_size() const { return step_size_; }
  const FilterConstants& constants() const { return constants_; }

  /// c_q from the qualification inequality sup_t |r(t)| t^q <= c_q lambda^q.
  double c_q(double q) const;

  /// Number of gradient steps encoded by lambda (landweber only).
  long landweber_steps(double lambda) const;

  /// phi_lambda(t) for t in [0, 1]; t = 0 gives the right limit. No argument checks.
  double evaluate(double lambda, double t) const;
  /// r_lambda(t) = 1 - t phi_lambda(t), computed in closed form where available.
  double evaluate_residual(double lambda, double t) const;

  /// Throws DomainError / ScheduleError if lambda is not admissible for this family.
  void check_lambda(double lambda) const;

 private:
  SpectralFilter() = default;

  FilterKind kind_ = FilterKind::tikhonov;
  std::string name_;
  double step_size_ = 0.0;
  FilterConstants constants_;
  Function custom_;
  QualificationConstant custom_cq_;
};

/// lambda = 1 / (alpha T).
double landweber_lambda(double step_size, long steps);

double filter_value(const SpectralFilter& filter, double lambda, double t);
double residual_value(const SpectralFilter& filter, double lambda, double t);

/// Eigendecomposition of a symmetric matrix, eigenvalues in descending order.
class EigenSystem {
 public:
  EigenSystem() = default;
  /// Throws DomainError if the matrix is not square or not symmetric to 1e-10.
  explicit EigenSystem(const Eigen::Ref<const Eigen::MatrixXd>& symmetric);

  const Eigen::VectorXd& eigenvalues() const { return values_; }
  const Eigen::MatrixXd& eigenvectors() const { return vectors_; }
  Eigen::Index size() const { return values_.size(); }

  Eigen::MatrixXd reconstruct() const;
  /// V diag(f(mu)) V^T.
  Eigen::MatrixXd function(const std::function<double(double)>& f) const;

 private:
  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
};

/// phi_lambda applied to a spectrum assumed to lie in [0, 1]. Round-off outside
/// [-1e-10, 1 + 1e-9] is clamped, anything further out is a DomainError.
Eigen::VectorXd filtered_spectrum(const SpectralFilter& filter, double lambda,
                                  const Eigen::VectorXd& eigenvalues);

/// V diag(phi_lambda(mu)) V^T rhs, column by column.
Eigen::MatrixXd apply_filter(const SpectralFilter& filter, double lambda, const EigenSystem& system,
                             const Eigen::Ref<const Eigen::MatrixXd>& rhs);

Eigen::VectorXd apply_filter(const SpectralFilter& filter, double lambda,
                             const Eigen::Ref<const Eigen::MatrixXd>& A,
                             const Eigen::Ref<const Eigen::VectorXd>& b);

struct FilterCheckRow {
  double lambda = 0.0;
  double sup_t_phi = 0.0;        // sup_t |t phi(t)|
  double sup_phi_scaled = 0.0;   // sup_t |phi(t)| * lambda
  double sup_residual = 0.0;     // sup_t |r(t)|
  double sup_qualification = 0.0;  // max_q sup_t |r(t)| t^q / lambda^q
  double qualification_ratio = 0.0;  // max_q sup_t |r(t)| t^q / (c_q lambda^q)
  bool flag_D = false;
  bool flag_E = false;
  bool flag_c0 = false;
  bool flag_cq = false;

  bool flagged() const { return flag_D || flag_E || flag_c0 || flag_cq; }
};

struct FilterReport {
  std::string filter;
  std::vector<FilterCheckRow> rows;

  bool flagged() const;
  bool flag_D() const;
  bool flag_E() const;
  bool flag_c0() const;
  bool flag_cq() const;
};

/// Empirical suprema of the regularization-function axioms over finite grids.
FilterReport verify_filter_constants(const SpectralFilter& filter, const std::vector<double>& t_grid,
                                     const std::vector<double>& lambda_grid,
                                     const std::vector<double>& q_grid);

/// n points k/n, k = 1..n: a uniform grid of (0, 1] ending at 1.
std::vector<double> unit_grid(int n);

}  // namespace specrf::spectral
