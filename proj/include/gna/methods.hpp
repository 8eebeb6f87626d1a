#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "gna/errors.hpp"
#include "gna/fixedpoint.hpp"
#include "gna/gamma.hpp"
#include "gna/history.hpp"

namespace gna {

enum class MethodKind {
  Anderson,
  GoodAndersonBroydenI,
  BroydenII,
  DFP,
  BFGS,
  SRk,
  GMRES,
  CG,
};

inline const char* method_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::Anderson: return "anderson";
    case MethodKind::GoodAndersonBroydenI: return "broyden1";
    case MethodKind::BroydenII: return "broyden2";
    case MethodKind::DFP: return "dfp";
    case MethodKind::BFGS: return "bfgs";
    case MethodKind::SRk: return "srk";
    case MethodKind::GMRES: return "gmres";
    case MethodKind::CG: return "cg";
  }
  return "?";
}

struct MethodConfig {
  MethodKind kind = MethodKind::Anderson;
  double beta = -1.0;       // mixing scale, doubles as H0 = beta*I
  bool line_search = false;  // exact quadratic search along the beta direction

  void validate() const {
    if (kind != MethodKind::GMRES && beta == 0.0)
      throw ConfigError(std::string("MethodConfig: beta must be nonzero for ") +
                        method_name(kind));
  }
};

inline WeightSpec weight_spec_for(const MethodConfig& config) {
  switch (config.kind) {
    case MethodKind::Anderson:
    case MethodKind::BroydenII:
    case MethodKind::DFP:
    case MethodKind::GMRES:
    case MethodKind::CG:
      return WeightSpec::identity();
    case MethodKind::GoodAndersonBroydenI:
    case MethodKind::BFGS:
      return WeightSpec::inverse_of_g_minus_i();
    case MethodKind::SRk:
      return WeightSpec::shifted_inverse(config.beta);
  }
  return WeightSpec::identity();
}

namespace detail {

// (G-I)R columns: cached by the history when available, otherwise one
// operator application per column.
inline Eigen::MatrixXd g_minus_i_r(const IterateHistory& h,
                                   const LinearFixedPoint& problem) {
  if (h.has_z()) return h.Z();
  const Eigen::Index N = static_cast<Eigen::Index>(h.size());
  Eigen::MatrixXd Z(h.dimension(), N);
  for (Eigen::Index j = 0; j < N; ++j)
    Z.col(j) = problem.apply_g_minus_i(h.r_col(static_cast<std::size_t>(j)));
  return Z;
}

inline Eigen::MatrixXd solve_inner(const Eigen::MatrixXd& S,
                                   const Eigen::MatrixXd& rhs,
                                   const char* method) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(S);
  Eigen::MatrixXd sol = lu.solve(rhs);
  if (!sol.allFinite())
    throw PreconditionerError(std::string("gna_step: singular inner system (") +
                              method + ")");
  return sol;
}

// Step for a given kind with frozen gamma, as an affine function of beta:
// step(beta) = base + beta * slope. Exposing the decomposition keeps the
// line search a two-evaluation affair.
struct AffineStep {
  Eigen::VectorXd base, slope;
  Eigen::VectorXd at(double beta) const { return base + beta * slope; }
};

inline AffineStep assemble_step(const IterateHistory& h,
                                const MethodConfig& config,
                                const LinearFixedPoint& problem,
                                const Eigen::VectorXd& gamma) {
  const Eigen::Index N = static_cast<Eigen::Index>(h.size());
  const Eigen::MatrixXd Y = h.Y();
  const Eigen::MatrixXd R = h.R();
  const Eigen::VectorXd yg = Y * gamma;
  const Eigen::VectorXd rg = R * gamma;
  AffineStep step;
  step.base = yg;
  step.slope = Eigen::VectorXd::Zero(h.dimension());

  const bool needs_c = config.kind == MethodKind::DFP ||
                       config.kind == MethodKind::BFGS;
  if (N < 2 && needs_c) {
    // C is undefined at N=1; every kind degenerates to (Y - beta R) gamma.
    step.slope = -rg;
    return step;
  }

  switch (config.kind) {
    case MethodKind::Anderson:
    case MethodKind::BroydenII:
    case MethodKind::GoodAndersonBroydenI:
    case MethodKind::SRk:
      step.slope = -rg;
      return step;
    case MethodKind::GMRES:
      return step;  // P = 0
    case MethodKind::DFP: {
      const Eigen::MatrixXd C = difference_matrix(static_cast<int>(N));
      const Eigen::MatrixXd YC = Y * C;
      const Eigen::MatrixXd RC = R * C;
      const Eigen::MatrixXd S = YC.transpose() * RC;
      step.base = yg - YC * solve_inner(S, YC.transpose() * rg, "dfp");
      step.slope = -rg;
      return step;
    }
    case MethodKind::BFGS: {
      const Eigen::MatrixXd C = difference_matrix(static_cast<int>(N));
      const Eigen::MatrixXd YC = Y * C;
      const Eigen::MatrixXd RC = R * C;
      const Eigen::MatrixXd S = YC.transpose() * RC;
      step.slope = -rg + YC * solve_inner(S, RC.transpose() * rg, "bfgs");
      return step;
    }
    case MethodKind::CG: {
      const Eigen::MatrixXd Z = g_minus_i_r(h, problem);
      const Eigen::MatrixXd S = R.transpose() * Z;  // R'(G-I)R
      step.base = yg - R * solve_inner(S, R.transpose() * rg, "cg");
      return step;  // beta plays no role
    }
  }
  throw InputError("assemble_step: unknown method kind");
}

// Exact minimizer of the quadratic objective along base + t * slope,
// using only operator applications: f'(t)=0 at
// t* = r(base)'slope / (slope'(I-G)slope).
inline double exact_line_search(const LinearFixedPoint& problem,
                                const AffineStep& step, double fallback) {
  if (step.slope.norm() == 0.0) return fallback;
  const Eigen::VectorXd r_base = problem.apply_g(step.base) - step.base;
  const double den = -step.slope.dot(problem.apply_g_minus_i(step.slope));
  if (den <= 0.0 || !std::isfinite(den)) return fallback;
  const double t = r_base.dot(step.slope) / den;
  return std::isfinite(t) ? t : fallback;
}

}  // namespace detail

// Extrapolation y = (Y - PR) gamma_W with the config's (W, P); P is applied
// in factored form, never materialized at d x d.
inline Eigen::VectorXd gna_step_with_gamma(const IterateHistory& h,
                                           const MethodConfig& config,
                                           const LinearFixedPoint& problem,
                                           const Eigen::VectorXd& gamma) {
  config.validate();
  if (h.empty()) throw InsufficientHistoryError("gna_step: empty history");
  if (gamma.size() != static_cast<Eigen::Index>(h.size()))
    throw InputError("gna_step: gamma length mismatch");
  detail::AffineStep step = detail::assemble_step(h, config, problem, gamma);
  const bool searchable = config.line_search &&
                          config.kind != MethodKind::GMRES &&
                          config.kind != MethodKind::CG && problem.apply_g &&
                          problem.apply_g_minus_i;
  const double beta =
      searchable ? detail::exact_line_search(problem, step, config.beta)
                 : config.beta;
  return step.at(beta);
}

inline Eigen::VectorXd gna_step(const IterateHistory& h,
                                const MethodConfig& config,
                                const LinearFixedPoint& problem,
                                double lambda_reg = 0.0) {
  config.validate();
  if (h.empty()) throw InsufficientHistoryError("gna_step: empty history");
  const GammaCoefficients g =
      solve_gamma(h, weight_spec_for(config), lambda_reg);
  return gna_step_with_gamma(h, config, problem, g.gamma);
}

// --- Dense multi-secant constructors (verification only, d <= cap) ---------

enum class SecantKind { BroydenTypeI, BroydenTypeII, DFP, BFGS, SRk };

inline const char* secant_name(SecantKind kind) {
  switch (kind) {
    case SecantKind::BroydenTypeI: return "broyden-type1";
    case SecantKind::BroydenTypeII: return "broyden-type2";
    case SecantKind::DFP: return "dfp";
    case SecantKind::BFGS: return "bfgs";
    case SecantKind::SRk: return "srk";
  }
  return "?";
}

struct QNMatrix {
  Eigen::MatrixXd H;  // approximation of (G-I)^{-1}
  SecantKind kind;
};

// Initialization: H0 (or J0^{-1}) = beta * I, or an explicit dense matrix.
struct QNInit {
  double beta = -1.0;
  std::optional<Eigen::MatrixXd> dense;

  Eigen::MatrixXd matrix(Eigen::Index d) const {
    if (dense) {
      if (dense->rows() != d || dense->cols() != d)
        throw InputError("QNInit: dense initialization has wrong size");
      return *dense;
    }
    return beta * Eigen::MatrixXd::Identity(d, d);
  }
};

inline constexpr Eigen::Index kDenseCap = 200;

// Closed-form multi-secant matrices. M is the weight of the minimized
// Frobenius norm (generalized variants of the Broyden updates; identity when
// empty). All returned matrices satisfy H (RC) = YC.
inline QNMatrix build_multisecant_matrix(SecantKind kind,
                                         const IterateHistory& h,
                                         const Eigen::MatrixXd& M = {},
                                         const QNInit& init = {}) {
  const Eigen::Index d = h.dimension();
  const Eigen::Index N = static_cast<Eigen::Index>(h.size());
  if (d > kDenseCap)
    throw InputError("build_multisecant_matrix: d exceeds the dense cap");
  if (N < 2)
    throw InsufficientHistoryError(
        "build_multisecant_matrix: needs at least 2 history columns");
  const bool weighted = M.size() != 0;
  if (weighted && (M.rows() != d || M.cols() != d))
    throw InputError("build_multisecant_matrix: M has wrong size");

  const Eigen::MatrixXd C = difference_matrix(static_cast<int>(N));
  const Eigen::MatrixXd YC = h.Y() * C;
  const Eigen::MatrixXd RC = h.R() * C;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);

  auto inner_solve = [&](const Eigen::MatrixXd& S, const Eigen::MatrixXd& rhs) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(S);
    Eigen::MatrixXd sol = lu.solve(rhs);
    if (!sol.allFinite())
      throw UpdateUndefinedError(
          std::string("build_multisecant_matrix: singular inner system (") +
          secant_name(kind) + ")");
    return sol;
  };

  switch (kind) {
    case SecantKind::BroydenTypeI: {
      // J^{-1} = J0^{-1} + (YC - J0^{-1}RC) K^{-1} (YC)' M^{-1} J0^{-1},
      // K = (YC)' M^{-1} J0^{-1} RC.
      const Eigen::MatrixXd J0inv = init.matrix(d);
      Eigen::MatrixXd MinvJ0inv = J0inv;
      if (weighted) MinvJ0inv = M.ldlt().solve(J0inv);
      const Eigen::MatrixXd K = YC.transpose() * MinvJ0inv * RC;
      const Eigen::MatrixXd H =
          J0inv + (YC - J0inv * RC) *
                      inner_solve(K, YC.transpose() * MinvJ0inv);
      return {H, kind};
    }
    case SecantKind::BroydenTypeII: {
      // H = H0 + (YC - H0 RC) ((RC)' M RC)^{-1} (RC)' M.
      const Eigen::MatrixXd H0 = init.matrix(d);
      const Eigen::MatrixXd MRC = weighted ? (M * RC).eval() : RC;
      const Eigen::MatrixXd K = RC.transpose() * MRC;
      const Eigen::MatrixXd H =
          H0 + (YC - H0 * RC) * inner_solve(K, MRC.transpose());
      return {H, kind};
    }
    case SecantKind::DFP: {
      // J^{-1} = beta (I - RC ((RC)'RC)^{-1} (RC)') + YC ((YC)'RC)^{-1} (YC)'.
      if (init.dense)
        throw InputError("build_multisecant_matrix: DFP takes beta*I only");
      const Eigen::MatrixXd Pi =
          RC * inner_solve(RC.transpose() * RC, RC.transpose());
      const Eigen::MatrixXd H =
          init.beta * (I - Pi) +
          YC * inner_solve(YC.transpose() * RC, YC.transpose());
      return {H, kind};
    }
    case SecantKind::BFGS: {
      // H = YC S^{-1} (YC)' + beta (I - RC S^{-1} (YC)')' (I - RC S^{-1}(YC)'),
      // S = (YC)'RC: symmetric, satisfies H RC = YC, and is the minimal
      // weighted-Frobenius solution for M = (G-I)^{-1}, J0 = beta I.
      if (init.dense)
        throw InputError("build_multisecant_matrix: BFGS takes beta*I only");
      const Eigen::MatrixXd S = YC.transpose() * RC;
      const Eigen::MatrixXd T = RC * inner_solve(S, YC.transpose());
      const Eigen::MatrixXd H =
          YC * inner_solve(S, YC.transpose()) +
          init.beta * (I - T).transpose() * (I - T);
      return {H, kind};
    }
    case SecantKind::SRk: {
      // H = H0 + D (D'RC)^{-1} D', D = YC - H0 RC. An exact initialization
      // (H0 RC = YC) leaves nothing to update; inverting the vanishing inner
      // matrix would amplify roundoff, so H0 is returned as is.
      const Eigen::MatrixXd H0 = init.matrix(d);
      const Eigen::MatrixXd D = YC - H0 * RC;
      const double scale = YC.norm() + (H0 * RC).norm();
      if (D.norm() <= 1e-12 * scale) return {H0, kind};
      const Eigen::MatrixXd H =
          H0 + D * inner_solve(D.transpose() * RC, D.transpose());
      return {H, kind};
    }
  }
  throw InputError("build_multisecant_matrix: unknown kind");
}

// (Y - HR) gamma; invariant in gamma as long as H satisfies the secant
// equations.
inline Eigen::VectorXd generalized_qn_step(const QNMatrix& qn,
                                           const IterateHistory& h,
                                           const Eigen::VectorXd& gamma) {
  if (gamma.size() != static_cast<Eigen::Index>(h.size()))
    throw InputError("generalized_qn_step: gamma length mismatch");
  if (std::abs(gamma.sum() - 1.0) > 1e-10)
    throw InputError("generalized_qn_step: gamma must sum to one");
  const Eigen::MatrixXd R = h.R();
  return h.Y() * gamma - qn.H * (R * gamma);
}

// Conjugate-Broyden scalar and the assembled CG step. The returned beta_star
// follows the closed form (1'(R'(G-I)R)^{-1}1)/(1'(R'R)^{-1}1); the exact
// line-search optimum of f along Y gamma_I + beta R gamma_{G-I} is -beta_star,
// and the assembled step (identical to the CG-config gna_step) uses it.
struct CgStep {
  double beta_star = 0.0;
  Eigen::VectorXd step;
};

inline CgStep cg_beta_star(const IterateHistory& h,
                           const LinearFixedPoint& problem) {
  if (h.empty()) throw InsufficientHistoryError("cg_beta_star: empty history");
  const Eigen::Index N = static_cast<Eigen::Index>(h.size());
  const Eigen::MatrixXd R = h.R();
  const Eigen::MatrixXd Z = detail::g_minus_i_r(h, problem);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(N);

  Eigen::PartialPivLU<Eigen::MatrixXd> lu_g(R.transpose() * Z);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_i(R.transpose() * R);
  const Eigen::VectorXd sg = lu_g.solve(ones);
  const Eigen::VectorXd si = lu_i.solve(ones);
  if (!sg.allFinite() || !si.allFinite() || si.sum() == 0.0)
    throw PreconditionerError("cg_beta_star: singular Gram matrix");

  CgStep out;
  out.beta_star = sg.sum() / si.sum();
  MethodConfig cg{MethodKind::CG, -1.0, false};
  out.step = gna_step_with_gamma(h, cg, problem, si / si.sum());
  return out;
}

}  // namespace gna
