#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "gna/errors.hpp"
#include "gna/fixedpoint.hpp"
#include "gna/methods.hpp"

namespace gna {

// xi^{N-1} / (1 + xi^{2(N-1)}) with xi = (1 - sqrt(kappa)) / (1 + sqrt(kappa)).
// Reported verbatim; note the N=1 value is 1/2, so bound assertions exclude
// N=1 (see the acceptance harness).
inline double chebyshev_factor(double kappa, int N) {
  if (!(kappa > 0.0 && kappa < 1.0))
    throw InputError("chebyshev_factor: kappa must be in (0,1)");
  if (N < 1) throw InputError("chebyshev_factor: N must be >= 1");
  const double xi = (1.0 - std::sqrt(kappa)) / (1.0 + std::sqrt(kappa));
  const double p = std::pow(xi, N - 1);
  return p / (1.0 + p * p);
}

// PSD square root via symmetric eigendecomposition (negative eigenvalues from
// roundoff are clamped to zero).
inline Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& W) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (W + W.transpose()));
  Eigen::VectorXd ew = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ew.asDiagonal() * es.eigenvectors().transpose();
}

// Dense PSD matrix realizing the spec's norm. Weights built from (G-I)^{-1}
// are negative (semi)definite as written; gamma is invariant under W -> -W,
// so the sign-flipped positive version is returned for norm evaluation.
inline Eigen::MatrixXd weight_matrix_dense(const LinearFixedPoint& problem,
                                           const WeightSpec& spec) {
  if (!problem.dense_g)
    throw InputError("weight_matrix_dense: problem has no dense G");
  const Eigen::MatrixXd& G = *problem.dense_g;
  const Eigen::Index d = G.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  switch (spec.kind) {
    case WeightSpec::Kind::Identity:
      return I;
    case WeightSpec::Kind::InverseOfGminusI:
      return (I - G).ldlt().solve(I);  // -(G-I)^{-1}
    case WeightSpec::Kind::ShiftedInverse: {
      // -( (G-I)^{-1} - beta I ) = (I-G)^{-1} + beta I
      Eigen::MatrixXd E = (I - G).ldlt().solve(I) + spec.beta * I;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          0.5 * (E + E.transpose()));
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      const double tol = 1e-10 * std::max(std::abs(lo), std::abs(hi));
      if (lo >= -tol) return E;
      if (hi <= tol) return -E;
      throw InputError("weight_matrix_dense: shifted-inverse weight is "
                       "indefinite for this beta");
    }
    case WeightSpec::Kind::Mixed:
      throw InputError("weight_matrix_dense: Mixed weights have no dense "
                       "realization here");
  }
  throw InputError("weight_matrix_dense: unknown spec");
}

struct PolynomialResidual {
  double value = 0.0;
  bool degenerate = false;  // Krylov breakdown: exact termination
};

// min over polynomials p with deg <= N-1, p(1) = 1 of ||p(G) r1||_W.
// Writes p = 1 + (x-1) q and solves the least-squares problem over an
// orthonormalized Krylov basis of span{r1, G r1, ...}; a raw monomial basis
// would lose all accuracy beyond N ~ 10 on small-kappa spectra.
inline PolynomialResidual optimal_polynomial_residual(const Eigen::MatrixXd& G,
                                                      const Eigen::VectorXd& r1,
                                                      int N,
                                                      const Eigen::MatrixXd& W) {
  const Eigen::Index d = G.rows();
  if (d > kDenseCap)
    throw InputError("optimal_polynomial_residual: d exceeds the dense cap");
  if (N < 1) throw InputError("optimal_polynomial_residual: N must be >= 1");
  const Eigen::MatrixXd Wh = matrix_sqrt_psd(W);
  if (N == 1 || r1.norm() == 0.0)
    return {(Wh * r1).norm(), r1.norm() == 0.0};

  const int m = N - 1;
  Eigen::MatrixXd Q(d, m);
  Eigen::VectorXd v = r1 / r1.norm();
  int cols = 0;
  bool degenerate = false;
  for (int j = 0; j < m; ++j) {
    Q.col(j) = v;
    ++cols;
    Eigen::VectorXd w = G * v;
    for (int pass = 0; pass < 2; ++pass)
      for (int k = 0; k <= j; ++k) w -= Q.col(k).dot(w) * Q.col(k);
    const double nw = w.norm();
    if (nw < 1e-14) {
      degenerate = true;
      break;
    }
    v = w / nw;
  }
  Q.conservativeResize(Eigen::NoChange, cols);

  const Eigen::MatrixXd A = Wh * ((G * Q) - Q);  // Wh (G-I) Q
  const Eigen::VectorXd b = -(Wh * r1);
  const Eigen::VectorXd t = A.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
                                .solve(b);
  const double value = (Wh * r1 + A * t).norm();
  if (degenerate) {
    // The Krylov subspace is G-invariant: a polynomial annihilates r1 exactly.
    return {0.0, true};
  }
  return {value, false};
}

// Spectral norm of I - (G-I)P.
inline double amplification_factor(const Eigen::MatrixXd& G,
                                   const Eigen::MatrixXd& P) {
  const Eigen::Index d = G.rows();
  if (d > kDenseCap)
    throw InputError("amplification_factor: d exceeds the dense cap");
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd A = I - (G - I) * P;
  return A.bdcSvd().singularValues()(0);
}

// The config's preconditioner materialized densely, for verification only.
// CG and the C-based kinds need the history; beta-scaled kinds do not.
inline Eigen::MatrixXd dense_preconditioner(const MethodConfig& config,
                                            const LinearFixedPoint& problem,
                                            const IterateHistory* h = nullptr) {
  const Eigen::Index d = problem.d;
  if (d > kDenseCap)
    throw InputError("dense_preconditioner: d exceeds the dense cap");
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  const bool needs_history =
      config.kind == MethodKind::DFP || config.kind == MethodKind::BFGS ||
      config.kind == MethodKind::CG;
  if (needs_history && (h == nullptr || h->size() < 2)) {
    if (config.kind == MethodKind::CG)
      throw InputError("dense_preconditioner: CG needs a history");
    return config.beta * I;  // N=1 fallback of the C-based kinds
  }
  switch (config.kind) {
    case MethodKind::Anderson:
    case MethodKind::BroydenII:
    case MethodKind::GoodAndersonBroydenI:
    case MethodKind::SRk:
      return config.beta * I;
    case MethodKind::GMRES:
      return Eigen::MatrixXd::Zero(d, d);
    case MethodKind::DFP: {
      const Eigen::MatrixXd C = difference_matrix(static_cast<int>(h->size()));
      const Eigen::MatrixXd YC = h->Y() * C;
      const Eigen::MatrixXd RC = h->R() * C;
      const Eigen::MatrixXd S = YC.transpose() * RC;
      return config.beta * I +
             YC * Eigen::PartialPivLU<Eigen::MatrixXd>(S).solve(
                      YC.transpose());
    }
    case MethodKind::BFGS: {
      const Eigen::MatrixXd C = difference_matrix(static_cast<int>(h->size()));
      const Eigen::MatrixXd YC = h->Y() * C;
      const Eigen::MatrixXd RC = h->R() * C;
      const Eigen::MatrixXd S = YC.transpose() * RC;
      return config.beta *
             (I - YC * Eigen::PartialPivLU<Eigen::MatrixXd>(S).solve(
                           RC.transpose()));
    }
    case MethodKind::CG: {
      const Eigen::MatrixXd R = h->R();
      const Eigen::MatrixXd Z = detail::g_minus_i_r(*h, problem);
      const Eigen::MatrixXd S = R.transpose() * Z;
      return R *
             Eigen::PartialPivLU<Eigen::MatrixXd>(S).solve(R.transpose());
    }
  }
  throw InputError("dense_preconditioner: unknown kind");
}

// Textbook Arnoldi-GMRES on A = I - G: minimizes the fixed-point residual
// over x0 + K_{N-1}(A, r0). N = 1 returns x0 (empty correction space).
inline Eigen::VectorXd reference_gmres(const LinearFixedPoint& problem,
                                       const Eigen::VectorXd& x0, int N) {
  check_dim(problem, x0, "reference_gmres");
  if (N < 1) throw InputError("reference_gmres: N must be >= 1");
  if (N == 1) return x0;
  const Eigen::Index d = problem.d;
  const Eigen::VectorXd r0 = problem.apply_g(x0) - x0;
  const double beta0 = r0.norm();
  if (beta0 == 0.0) return x0;

  const int m = std::min<int>(N - 1, static_cast<int>(d));
  Eigen::MatrixXd Q(d, m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  Q.col(0) = r0 / beta0;
  int k = m;
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd w = -problem.apply_g_minus_i(Q.col(j));  // A q_j
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        const double c = Q.col(i).dot(w);
        H(i, j) += c;
        w -= c * Q.col(i);
      }
    H(j + 1, j) = w.norm();
    if (H(j + 1, j) < 1e-14 * beta0) {
      k = j + 1;  // lucky breakdown: exact solution inside the subspace
      break;
    }
    if (j + 1 < m + 1) Q.col(j + 1) = w / H(j + 1, j);
  }
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(k + 1);
  e1(0) = beta0;
  const Eigen::VectorXd t =
      H.topLeftCorner(k + 1, k)
          .bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
          .solve(e1);
  return x0 + Q.leftCols(k) * t;
}

// Textbook CG on the SPD system (I-G)(x - x*) = 0, driven purely by residual
// recurrences (r = (G-I)(x - x*) is the fixed-point residual, no x* needed).
inline Eigen::VectorXd reference_cg(const LinearFixedPoint& problem,
                                    const Eigen::VectorXd& x0, int iters) {
  check_dim(problem, x0, "reference_cg");
  if (iters < 0) throw InputError("reference_cg: iters must be >= 0");
  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = problem.apply_g(x0) - x0;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  const double floor = 1e-28 * rr;
  for (int i = 0; i < iters; ++i) {
    if (rr <= floor || rr == 0.0) break;
    const Eigen::VectorXd Ap = -problem.apply_g_minus_i(p);
    const double pAp = p.dot(Ap);
    if (pAp <= 0.0) break;
    const double alpha = rr / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return x;
}

struct BoundReport {
  int N = 0;
  double xi = 0.0;
  double chebyshev = 0.0;
  double amplification = 0.0;
  double bound = 0.0;     // amplification * chebyshev * ||r1||_W
  double observed = 0.0;  // ||r_extr||_W
};

inline BoundReport make_bound_report(int N, double kappa, double amplification,
                                     double r1_w_norm, double observed) {
  BoundReport rep;
  rep.N = N;
  rep.xi = (1.0 - std::sqrt(kappa)) / (1.0 + std::sqrt(kappa));
  rep.chebyshev = chebyshev_factor(kappa, N);
  rep.amplification = amplification;
  rep.bound = amplification * rep.chebyshev * r1_w_norm;
  rep.observed = observed;
  return rep;
}

}  // namespace gna
