#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "gna/fixedpoint.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd gauss_vector(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = g(rng);
  return v;
}

}  // namespace

TEST(LinearMapApply, FixedPointPreserved) {
  gna::LinearFixedPoint p = gna::make_random_spd_problem(8, 0.2, 1);
  EXPECT_LT((gna::linear_map_apply(p, *p.x_star) - *p.x_star).norm(), 1e-12);
}

TEST(LinearMapApply, ScalarCase) {
  MatrixXd G(1, 1);
  G << 0.5;
  gna::LinearFixedPoint p = gna::make_dense_problem(G, VectorXd::Zero(1));
  VectorXd y(1);
  y << 2.0;
  EXPECT_DOUBLE_EQ(gna::linear_map_apply(p, y)(0), 1.0);
}

TEST(LinearMapApply, DimensionMismatchThrows) {
  gna::LinearFixedPoint p = gna::make_random_spd_problem(4, 0.5, 0);
  EXPECT_THROW(gna::linear_map_apply(p, VectorXd::Zero(5)), gna::InputError);
}

TEST(LinearMapApply, Contraction) {
  const double kappa = 0.1;
  gna::LinearFixedPoint p = gna::make_random_spd_problem(10, kappa, 7);
  std::mt19937_64 rng(99);
  for (int t = 0; t < 100; ++t) {
    VectorXd y = gauss_vector(10, rng);
    const double before = (y - *p.x_star).norm();
    const double after = (p.apply_g(y) - *p.x_star).norm();
    EXPECT_LE(after, (1.0 - kappa) * before * (1.0 + 1e-12));
  }
}

TEST(Residual, ZeroAtFixedPoint) {
  gna::LinearFixedPoint p = gna::make_random_spd_problem(6, 0.3, 2);
  EXPECT_LT(gna::residual(p, *p.x_star).norm(), 1e-12);
}

TEST(Residual, ScalarCase) {
  MatrixXd G(1, 1);
  G << 0.5;
  gna::LinearFixedPoint p = gna::make_dense_problem(G, VectorXd::Zero(1));
  VectorXd y(1);
  y << 2.0;
  EXPECT_DOUBLE_EQ(gna::residual(p, y)(0), -1.0);
}

TEST(Residual, MatchesShiftedOperator) {
  gna::LinearFixedPoint p = gna::make_random_spd_problem(12, 0.2, 3);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    VectorXd y = gauss_vector(12, rng);
    const VectorXd r = gna::residual(p, y);
    EXPECT_LT((r - p.apply_g_minus_i(y - *p.x_star)).norm(),
              1e-12 * (1.0 + r.norm()));
    // Same floating-point expression as apply_g(y) - y.
    EXPECT_EQ((r - (p.apply_g(y) - y)).norm(), 0.0);
  }
}

TEST(RandomSpdProblem, OneDimensionalSpectrum) {
  gna::LinearFixedPoint p = gna::make_random_spd_problem(1, 0.25, 11);
  EXPECT_NEAR((*p.dense_g)(0, 0), 0.75, 1e-15);
}

TEST(RandomSpdProblem, Deterministic) {
  gna::LinearFixedPoint a = gna::make_random_spd_problem(9, 0.1, 42);
  gna::LinearFixedPoint b = gna::make_random_spd_problem(9, 0.1, 42);
  EXPECT_EQ((*a.dense_g - *b.dense_g).norm(), 0.0);
  EXPECT_EQ((*a.x_star - *b.x_star).norm(), 0.0);
}

TEST(RandomSpdProblem, SpectrumEndpoints) {
  const double kappa = 1e-6;
  gna::LinearFixedPoint p = gna::make_random_spd_problem(25, kappa, 0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(*p.dense_g);
  EXPECT_NEAR(es.eigenvalues().maxCoeff(), 1.0 - kappa, 1e-12);
  EXPECT_NEAR(es.eigenvalues().minCoeff(), 0.0, 1e-12);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
}

TEST(RandomSpdProblem, BadInputsThrow) {
  EXPECT_THROW(gna::make_random_spd_problem(0, 0.5, 0), gna::InputError);
  EXPECT_THROW(gna::make_random_spd_problem(4, 0.0, 0), gna::InputError);
  EXPECT_THROW(gna::make_random_spd_problem(4, 1.0, 0), gna::InputError);
}

TEST(RidgeProblem, IdentityDesign) {
  gna::LinearFixedPoint p = gna::make_ridge_problem(
      MatrixXd::Identity(4, 4), VectorXd::Zero(4), 0.0, 1.0);
  EXPECT_LT(p.dense_g->norm(), 1e-14);
  EXPECT_LT(p.x_star->norm(), 1e-14);
}

TEST(RidgeProblem, SolutionMatchesNormalEquations) {
  std::mt19937_64 rng(17);
  MatrixXd A(50, 25);
  for (Eigen::Index j = 0; j < 25; ++j) A.col(j) = gauss_vector(50, rng);
  const VectorXd b = VectorXd::Ones(50);
  const double lambda = 0.3;
  gna::LinearFixedPoint p = gna::make_ridge_problem(A, b, lambda);
  const MatrixXd M =
      A.transpose() * A + lambda * MatrixXd::Identity(25, 25);
  const VectorXd x_direct = M.ldlt().solve(A.transpose() * b);
  EXPECT_LT((*p.x_star - x_direct).norm(), 1e-10 * (1.0 + x_direct.norm()));
}

TEST(RidgeProblem, GradientMapConsistency) {
  std::mt19937_64 rng(23);
  MatrixXd A(12, 6);
  for (Eigen::Index j = 0; j < 6; ++j) A.col(j) = gauss_vector(12, rng);
  const VectorXd b = gauss_vector(12, rng);
  const double lambda = 0.1, h = 0.01;
  gna::LinearFixedPoint p = gna::make_ridge_problem(A, b, lambda, h);
  const double eps = 1e-5;
  for (int t = 0; t < 5; ++t) {
    VectorXd y = gauss_vector(6, rng);
    const VectorXd step = p.apply_g(y) - y;  // -h grad f(y)
    for (Eigen::Index i = 0; i < 6; ++i) {
      VectorXd yp = y, ym = y;
      yp(i) += eps;
      ym(i) -= eps;
      const double gi = (p.objective(yp) - p.objective(ym)) / (2.0 * eps);
      EXPECT_NEAR(step(i), -h * gi, 1e-6 * (1.0 + std::abs(h * gi)));
    }
  }
}

TEST(RidgeProblem, KappaMatchesSpectrum) {
  std::mt19937_64 rng(31);
  MatrixXd A(20, 8);
  for (Eigen::Index j = 0; j < 8; ++j) A.col(j) = gauss_vector(20, rng);
  const double lambda = 0.5;
  gna::LinearFixedPoint p = gna::make_ridge_problem(A, VectorXd::Ones(20),
                                                    lambda);
  const MatrixXd M = A.transpose() * A + lambda * MatrixXd::Identity(8, 8);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
  const double L = es.eigenvalues().maxCoeff();
  const double mu = es.eigenvalues().minCoeff();
  EXPECT_NEAR(*p.kappa, 2.0 * mu / (L + mu), 1e-8);
}

TEST(RidgeProblem, OversizedStepThrows) {
  std::mt19937_64 rng(37);
  MatrixXd A(10, 5);
  for (Eigen::Index j = 0; j < 5; ++j) A.col(j) = gauss_vector(10, rng);
  EXPECT_THROW(gna::make_ridge_problem(A, VectorXd::Ones(10), 0.0, 1e6),
               gna::ConfigError);
}
