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
#include <random>

#include <Eigen/Dense>

#include "specrf/rng.hpp"

namespace specrf::testing {

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd A(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) A(i, j) = normal(rng);
  return A;
}

inline Eigen::VectorXd gaussian_vector(Eigen::Index n, std::uint64_t seed) {
  return gaussian_matrix(n, 1, seed).col(0);
}

/// Symmetric PSD matrix with spectrum in [0, 1] and at least one eigenvalue at `top`.
inline Eigen::MatrixXd unit_psd(Eigen::Index n, std::uint64_t seed, double top = 1.0) {
  const Eigen::MatrixXd G = gaussian_matrix(n, n, seed);
  Eigen::MatrixXd A = G * G.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
  A /= solver.eigenvalues().maxCoeff();
  A *= top;
  return 0.5 * (A + A.transpose());
}

inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

}  // namespace specrf::testing
