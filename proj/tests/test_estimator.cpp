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

#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "specrf/errors.hpp"
#include "specrf/estimator.hpp"
#include "specrf/synthetic.hpp"
#include "test_support.hpp"

namespace specrf::estimator {
namespace {

using features::DesignMatrix;
using features::FeatureSet;
using features::Omega;

std::shared_ptr<const features::DiscreteFeatureMap> unit_map() {
  features::FiniteSupport support{{Omega::Constant(1, 0.0)}, {1.0}};
  return std::make_shared<const features::DiscreteFeatureMap>(
      "one", 1, 1, 1, 1.0, support,
      [](const Eigen::Ref<const Eigen::VectorXd>&, const Omega&, Eigen::Ref<Eigen::MatrixXd> out) { out(0, 0) = 1.0; });
}

/// A design with the given Z over `cols` copies of the constant feature.
DesignMatrix explicit_design(const Eigen::MatrixXd& Z, double kappa_scale = 1.0) {
  std::vector<Omega> samples(static_cast<std::size_t>(Z.cols()), Omega::Constant(1, 0.0));
  auto fs = std::make_shared<const FeatureSet>(unit_map(), samples);
  return DesignMatrix(fs, Z, static_cast<int>(Z.rows()), kappa_scale);
}

/// Random n x m design with ||Z^T Z / n|| = top.
DesignMatrix random_design(int n, int m, std::uint64_t seed, double top = 0.95) {
  Eigen::MatrixXd Z = specrf::testing::gaussian_matrix(n, m, seed);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z);
  const double s = svd.singularValues()[0];
  Z *= std::sqrt(top * n) / s;
  return explicit_design(Z);
}

TEST(FitClosed, ScalarTikhonov) {
  const auto design = explicit_design(Eigen::MatrixXd::Constant(1, 1, 1.0));
  const auto model = fit_closed(design, Eigen::VectorXd::Constant(1, 2.0), SpectralFilter::tikhonov(), 1.0);
  EXPECT_DOUBLE_EQ(model.theta[0], 1.0);
}

TEST(FitClosed, ZeroOutputsGiveZeroCoefficients) {
  const auto design = random_design(12, 5, 1);
  for (const auto& f : {SpectralFilter::tikhonov(), SpectralFilter::cutoff(), SpectralFilter::landweber(0.5)}) {
    const double lambda = f.kind() == spectral::FilterKind::landweber ? spectral::landweber_lambda(0.5, 8) : 0.1;
    EXPECT_EQ(fit_closed(design, Eigen::VectorXd::Zero(12), f, lambda).theta.norm(), 0.0);
  }
}

TEST(FitClosed, RejectsBadArguments) {
  const auto design = random_design(6, 3, 2);
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(6);
  EXPECT_THROW(fit_closed(design, v, SpectralFilter::tikhonov(), 0.0), DomainError);
  EXPECT_THROW(fit_closed(design, v, SpectralFilter::tikhonov(), 1.5), DomainError);
  EXPECT_THROW(fit_closed(design, Eigen::VectorXd::Ones(5), SpectralFilter::tikhonov(), 0.5), DomainError);
  EXPECT_THROW(fit_closed(explicit_design(Eigen::MatrixXd::Zero(4, 2)), Eigen::VectorXd::Ones(4),
                          SpectralFilter::tikhonov(), 0.5),
               DomainError);
}

TEST(FitClosed, LandweberMatchesGradientDescent) {
  const auto design = random_design(20, 8, 3);
  const Eigen::VectorXd v = specrf::testing::gaussian_vector(20, 4);
  const auto closed = fit_closed(design, v, SpectralFilter::landweber(0.5), spectral::landweber_lambda(0.5, 50));
  const auto gd = fit_gd(design, v, 0.5, 50);
  EXPECT_LE(specrf::testing::relative_error(closed.theta, gd.theta), 1e-9);
  EXPECT_DOUBLE_EQ(gd.lambda, 1.0 / 25.0);
  EXPECT_EQ(gd.steps, 50);
}

TEST(FitClosed, PrimalAndDualRoutesAgree) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 4 + static_cast<int>(seed * 3 % 17);
    const int m = 4 + static_cast<int>(seed * 5 % 13);
    const auto design = random_design(n, m, 50 + seed);
    const Eigen::VectorXd v = specrf::testing::gaussian_vector(n, 60 + seed);
    for (const auto& f : {SpectralFilter::tikhonov(), SpectralFilter::landweber(0.7)}) {
      const double lambda = f.kind() == spectral::FilterKind::landweber ? spectral::landweber_lambda(0.7, 30) : 0.05;
      const auto primal = fit_closed(design, v, f, lambda, Route::primal);
      const auto dual = fit_closed(design, v, f, lambda, Route::dual);
      EXPECT_LE(specrf::testing::relative_error(dual.theta, primal.theta), 1e-9) << f.name();
    }
    const auto gp = fit_gd(design, v, 0.9, 40, Route::primal);
    const auto gq = fit_gd(design, v, 0.9, 40, Route::dual);
    EXPECT_LE(specrf::testing::relative_error(gq.theta, gp.theta), 1e-10);
  }
}

TEST(FitGd, OneStepFromZero) {
  const auto design = random_design(9, 4, 7);
  const Eigen::VectorXd v = specrf::testing::gaussian_vector(9, 8);
  const auto model = fit_gd(design, v, 0.3, 1);
  EXPECT_LE((model.theta - 0.3 * design.embed_adjoint(v)).norm(), 1e-14);
  EXPECT_THROW(fit_gd(design, v, 0.3, 0), DomainError);
  EXPECT_THROW(fit_gd(design, v, 0.0, 5), DomainError);
  EXPECT_THROW(fit_gd(design, v, 1.1, 5), DomainError);
}

TEST(FitGd, EquivalentToClosedFormOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int n = 5 + static_cast<int>(seed % 96);
    const int m = 2 + static_cast<int>((seed * 7) % 49);
    const auto design = random_design(n, m, 1000 + seed, 1.0);
    const Eigen::VectorXd v = specrf::testing::gaussian_vector(n, 2000 + seed);
    const double alpha = 0.05 + 0.95 * static_cast<double>(seed % 7) / 6.0;
    const long T = static_cast<long>(std::ceil(1.0 / alpha)) + static_cast<long>((seed * 37) % 400);
    const auto gd = fit_gd(design, v, alpha, T);
    const auto closed = fit_closed(design, v, SpectralFilter::landweber(alpha), spectral::landweber_lambda(alpha, T));
    EXPECT_LE(specrf::testing::relative_error(closed.theta, gd.theta), 1e-9) << "seed " << seed;
  }
}

TEST(FitGd, TrainingRiskIsMonotone) {
  const auto design = random_design(30, 12, 9, 1.0);
  const Eigen::VectorXd v = specrf::testing::gaussian_vector(30, 10);
  std::vector<long> checkpoints;
  for (long t = 1; t <= 60; ++t) checkpoints.push_back(t);
  const auto path = fit_gd_path(design, v, 1.0, checkpoints);
  double previous = 0.5 * v.squaredNorm() / 30.0;
  for (const auto& model : path) {
    const double risk = 0.5 * (design.Z() * model.theta - v).squaredNorm() / 30.0;
    EXPECT_LE(risk, previous + 1e-14);
    previous = risk;
  }
}

TEST(FitGd, PathMatchesIndividualFits) {
  const auto design = random_design(15, 6, 21);
  const Eigen::VectorXd v = specrf::testing::gaussian_vector(15, 22);
  const auto path = fit_gd_path(design, v, 0.5, {3, 10, 40});
  EXPECT_LE((path[1].theta - fit_gd(design, v, 0.5, 10).theta).norm(), 1e-13);
  EXPECT_THROW(fit_gd_path(design, v, 0.5, {3, 3}), DomainError);
}

TEST(Tikhonov, CoefficientNormDecreasesWithLambda) {
  const auto design = random_design(25, 10, 31);
  const Eigen::VectorXd v = specrf::testing::gaussian_vector(25, 32);
  const DesignSpectrum spectrum(design);
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : spectral::unit_grid(50)) {
    const double norm = fit_closed(spectrum, v, SpectralFilter::tikhonov(), lambda).theta.norm();
    EXPECT_LE(norm, previous + 1e-12);
    previous = norm;
  }
}

TEST(Cutoff, InterpolatesBelowTheSmallestEigenvalue) {
  const auto design = random_design(10, 20, 41);
  const Eigen::VectorXd v = design.Z() * specrf::testing::gaussian_vector(20, 42);
  const DesignSpectrum spectrum(design, Route::dual);
  const double smallest = spectrum.eigenvalues().minCoeff();
  ASSERT_GT(smallest, 0.0);
  const auto model = fit_closed(spectrum, v, SpectralFilter::cutoff(), 0.5 * smallest);
  EXPECT_LE((design.Z() * model.theta - v).norm() / v.norm(), 1e-6);
}

TEST(Predict, ZeroCoefficientsGiveZero) {
  const auto map = std::make_shared<features::RandomFourierMap>(2, 1.0);
  auto fs = std::make_shared<const FeatureSet>(features::sample_features(map, 10, 1));
  RFModel model;
  model.features = fs;
  model.theta = Eigen::VectorXd::Zero(10);
  EXPECT_EQ(predict(model, Eigen::Vector2d(0.3, 0.1)).norm(), 0.0);
}

TEST(Predict, TrainingPredictionsEqualDesignRows) {
  const auto map = std::make_shared<features::RandomFourierMap>(2, 1.0);
  auto fs = std::make_shared<const FeatureSet>(features::sample_features(map, 10, 1));
  const Eigen::MatrixXd inputs = specrf::testing::gaussian_matrix(8, 2, 3);
  const auto design = features::build_design(fs, inputs);
  const Eigen::VectorXd v = specrf::testing::gaussian_vector(8, 4);
  const auto model = fit_closed(design, v, SpectralFilter::tikhonov(), 0.01);
  const Eigen::MatrixXd p = predict_batch(model, inputs);
  EXPECT_LE((p.col(0) - design.Z() * model.theta).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Predict, ConstantFeatureByHand) {
  // phi = 1, M = 4, kappa_scale = 2: Z = 1 / (sqrt(4) * 2) in every entry, prediction = sum(theta) / 4.
  std::vector<Omega> samples(4, Omega::Constant(1, 0.0));
  auto fs = std::make_shared<const FeatureSet>(unit_map(), samples);
  const auto design = features::build_design(fs, Eigen::MatrixXd::Constant(3, 1, 0.2), 2.0);
  EXPECT_LE((design.Z().array() - 0.25).abs().maxCoeff(), 1e-15);
  RFModel model;
  model.features = fs;
  model.kappa_scale = 2.0;
  model.theta = Eigen::Vector4d(1.0, 2.0, 3.0, 4.0);
  EXPECT_NEAR(predict(model, Eigen::VectorXd::Constant(1, 0.9))[0], 10.0 / 4.0, 1e-15);
  EXPECT_NEAR((design.Z() * model.theta)[0], 2.5, 1e-15);
}

TEST(Evaluate, RiskConventions) {
  const Eigen::MatrixXd p = specrf::testing::gaussian_matrix(6, 1, 1);
  EXPECT_EQ(risk_from_predictions(p, p, 1.0).empirical_risk, 0.0);
  Eigen::MatrixXd unit = Eigen::MatrixXd::Ones(6, 1);
  unit(2, 0) = -1.0;
  EXPECT_DOUBLE_EQ(risk_from_predictions(Eigen::MatrixXd::Zero(6, 1), unit, 1.0).empirical_risk, 0.5);
  EXPECT_THROW(risk_from_predictions(Eigen::MatrixXd(0, 1), Eigen::MatrixXd(0, 1), 1.0), DomainError);
}

TEST(Evaluate, ZeroModelExcessEqualsTargetNorm) {
  const auto problem = synthetic::make_problem(synthetic::SpectrumSpec::power_law(1.0, 32), 0.5, 1.0, 3);
  const auto data = synthetic::sample_dataset(problem, 4000, synthetic::NoiseModel::bounded_uniform(0.0, 1.0), 9);
  auto fs = std::make_shared<const FeatureSet>(features::sample_features(problem.feature_map(), 5, 1));
  RFModel model;
  model.features = fs;
  model.kappa_scale = problem.kappa();
  model.theta = Eigen::VectorXd::Zero(5);
  const Eigen::MatrixXd oracle = problem.target_values(data.inputs.col(0));
  const auto report = evaluate(model, data.inputs, data.outputs, oracle);
  EXPECT_NEAR(*report.excess_l2, problem.target().l2_norm(), 3.0 / std::sqrt(4000.0));
}

TEST(Determinism, SameSeedsGiveIdenticalCoefficients) {
  const auto problem = synthetic::make_problem(synthetic::SpectrumSpec::power_law(1.0, 32), 0.5, 1.0, 3);
  auto run = [&] {
    const auto data = synthetic::sample_dataset(problem, 200, synthetic::NoiseModel::bounded_uniform(0.2, 1.0), 5);
    auto fs = std::make_shared<const FeatureSet>(features::sample_features(problem.feature_map(), 40, 6));
    const auto design = features::build_design(fs, data.inputs);
    return fit_gd(design, design.stack_outputs(data.outputs), 0.5, 64).theta;
  };
  const Eigen::VectorXd a = run();
  const Eigen::VectorXd b = run();
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace specrf::estimator
