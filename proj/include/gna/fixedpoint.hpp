#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>

#include "gna/errors.hpp"

namespace gna {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Affine fixed-point problem g(x) = G(x - x*) + x* with G symmetric,
// 0 <= G <= (1-kappa) I. Exposed through matrix-vector products; the optional
// fields (x_star, kappa, objective, dense_g) are instrumentation for tests and
// trace output, never consumed by the acceleration step itself.
struct LinearFixedPoint {
  Index d = 0;
  std::function<VectorXd(const VectorXd&)> apply_g;
  std::function<VectorXd(const VectorXd&)> apply_g_minus_i;
  std::optional<VectorXd> x_star;
  std::optional<double> kappa;
  std::function<double(const VectorXd&)> objective;  // may be empty
  std::optional<MatrixXd> dense_g;                   // small problems only
};

inline void check_dim(const LinearFixedPoint& problem, const VectorXd& y,
                      const char* what) {
  if (y.size() != problem.d)
    throw InputError(std::string(what) + ": expected dimension " +
                     std::to_string(problem.d) + ", got " +
                     std::to_string(y.size()));
}

inline VectorXd linear_map_apply(const LinearFixedPoint& problem,
                                 const VectorXd& y) {
  check_dim(problem, y, "linear_map_apply");
  return problem.apply_g(y);
}

inline VectorXd residual(const LinearFixedPoint& problem, const VectorXd& y) {
  check_dim(problem, y, "residual");
  return problem.apply_g(y) - y;
}

// Wraps an explicit G and x*; the building block for the generators below.
inline LinearFixedPoint make_dense_problem(MatrixXd G, VectorXd x_star,
                                           std::optional<double> kappa = {}) {
  if (G.rows() != G.cols() || G.rows() != x_star.size())
    throw InputError("make_dense_problem: G must be square and match x*");
  auto Gp = std::make_shared<MatrixXd>(std::move(G));
  auto xp = std::make_shared<VectorXd>(std::move(x_star));
  LinearFixedPoint p;
  p.d = Gp->rows();
  p.apply_g = [Gp, xp](const VectorXd& y) -> VectorXd {
    return (*Gp) * (y - *xp) + *xp;
  };
  p.apply_g_minus_i = [Gp](const VectorXd& v) -> VectorXd {
    return (*Gp) * v - v;
  };
  p.x_star = *xp;
  p.kappa = kappa;
  // g is the unit-step gradient map of the quadratic below.
  p.objective = [Gp, xp](const VectorXd& y) -> double {
    VectorXd e = y - *xp;
    return 0.5 * e.dot(e - (*Gp) * e);
  };
  p.dense_g = *Gp;
  return p;
}

// G = Q diag(lambda) Q^T with spectrum in [0, 1-kappa], both endpoints
// included (d=1 keeps the top endpoint so that kappa stays meaningful).
inline LinearFixedPoint make_random_spd_problem(Index d, double kappa,
                                                std::uint64_t seed) {
  if (d < 1) throw InputError("make_random_spd_problem: d must be >= 1");
  if (!(kappa > 0.0 && kappa < 1.0))
    throw InputError("make_random_spd_problem: kappa must be in (0,1)");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd Z(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) Z(i, j) = gauss(rng);
  Eigen::HouseholderQR<MatrixXd> qr(Z);
  MatrixXd Q = qr.householderQ();
  MatrixXd Rfac = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (Rfac(j, j) < 0) Q.col(j) = -Q.col(j);

  VectorXd lambda(d);
  const double top = 1.0 - kappa;
  std::uniform_real_distribution<double> unif(0.0, top);
  if (d == 1) {
    lambda(0) = top;
  } else {
    lambda(0) = 0.0;
    lambda(d - 1) = top;
    for (Index i = 1; i + 1 < d; ++i) lambda(i) = unif(rng);
  }
  MatrixXd G = Q * lambda.asDiagonal() * Q.transpose();
  G = 0.5 * (G + G.transpose());

  VectorXd x_star(d);
  for (Index i = 0; i < d; ++i) x_star(i) = gauss(rng);
  return make_dense_problem(std::move(G), std::move(x_star), kappa);
}

namespace detail {

// Largest eigenvalue of an SPD/PSD operator by power iteration.
inline double power_iteration(const std::function<VectorXd(const VectorXd&)>& op,
                              Index d, std::uint64_t seed = 12345,
                              double tol = 1e-13, int max_iters = 100000) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd v(d);
  for (Index i = 0; i < d; ++i) v(i) = gauss(rng);
  v.normalize();
  double ray = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    VectorXd w = op(v);
    double nw = w.norm();
    if (nw == 0.0) return 0.0;
    double next = v.dot(w);
    w /= nw;
    if (std::abs(next - ray) <= tol * std::max(1.0, std::abs(next)) && it > 2) {
      return next;
    }
    ray = next;
    v = w;
  }
  return ray;
}

}  // namespace detail

// Ridge regression f(x) = 0.5 (||Ax-b||^2 + lambda ||x||^2) accelerated as the
// fixed-step gradient map g(x) = x - h grad f(x). Default h = 2/(L+mu) with
// L, mu the extreme eigenvalues of A^T A + lambda I (power iteration).
inline LinearFixedPoint make_ridge_problem(const MatrixXd& A, const VectorXd& b,
                                           double lambda,
                                           std::optional<double> step = {}) {
  if (A.rows() != b.size())
    throw InputError("make_ridge_problem: A and b row counts differ");
  if (lambda < 0.0) throw InputError("make_ridge_problem: lambda must be >= 0");
  const Index d = A.cols();
  auto M = std::make_shared<MatrixXd>(A.transpose() * A +
                                      lambda * MatrixXd::Identity(d, d));
  auto Atb = std::make_shared<VectorXd>(A.transpose() * b);

  const double L =
      detail::power_iteration([&](const VectorXd& v) { return (*M) * v; }, d);
  const double shifted = detail::power_iteration(
      [&](const VectorXd& v) { return L * v - (*M) * v; }, d, 54321);
  const double mu = std::max(L - shifted, 0.0);

  const double h = step ? *step : 2.0 / (L + mu);
  if (h <= 0.0) throw ConfigError("make_ridge_problem: step must be positive");
  if (h * (L + mu) > 2.0 + 1e-10)
    throw ConfigError("make_ridge_problem: step too large, G = I - h(A^T A + "
                      "lambda I) is not a contraction");

  auto Ap = std::make_shared<MatrixXd>(A);
  auto bp = std::make_shared<VectorXd>(b);

  LinearFixedPoint p;
  p.d = d;
  p.apply_g = [M, Atb, h](const VectorXd& y) -> VectorXd {
    return y - h * ((*M) * y - *Atb);
  };
  p.apply_g_minus_i = [M, h](const VectorXd& v) -> VectorXd {
    return -h * ((*M) * v);
  };
  p.x_star = M->ldlt().solve(*Atb);
  p.kappa = h * mu;
  p.objective = [Ap, bp, lambda](const VectorXd& y) -> double {
    return 0.5 * ((*Ap) * y - *bp).squaredNorm() +
           0.5 * lambda * y.squaredNorm();
  };
  p.dense_g = MatrixXd::Identity(d, d) - h * (*M);
  return p;
}

}  // namespace gna
