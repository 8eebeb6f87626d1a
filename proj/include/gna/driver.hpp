#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <optional>
#include <vector>

#include "gna/analysis.hpp"
#include "gna/errors.hpp"
#include "gna/fixedpoint.hpp"
#include "gna/gamma.hpp"
#include "gna/history.hpp"
#include "gna/methods.hpp"

namespace gna {

struct RunRow {
  int iter = 0;
  double res_l2 = 0.0;
  std::optional<double> res_w;   // needs dense W
  std::optional<double> err_l2;  // needs x*
  std::optional<double> bound;   // needs dense G, kappa, full-memory regime
  long ops = 0;                  // cumulative operator applications
  double seconds = 0.0;
};

struct RunRecord {
  std::vector<RunRow> rows;
  int restarts = 0;
  long refactorizations = 0;
};

struct BaselineResult {
  RunRecord record;
  IterateHistory history;
};

namespace detail {

class StopWatch {
 public:
  StopWatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Dense instrumentation shared by the loops: W^{1/2} for the weighted
// residual column, eigenvalues of G for beta*I amplification factors.
struct DenseInstruments {
  bool active = false;
  Eigen::MatrixXd w_sqrt;
  double amp_beta_scaled = 0.0;  // ||I - (G-I) beta I||_2, fixed per run

  static DenseInstruments make(const LinearFixedPoint& problem,
                               const MethodConfig& config) {
    DenseInstruments inst;
    if (!problem.dense_g || problem.d > kDenseCap) return inst;
    try {
      inst.w_sqrt =
          matrix_sqrt_psd(weight_matrix_dense(problem, weight_spec_for(config)));
    } catch (const Error&) {
      return inst;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*problem.dense_g);
    double amp = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      amp = std::max(amp,
                     std::abs(1.0 - config.beta * (es.eigenvalues()(i) - 1.0)));
    inst.amp_beta_scaled = amp;
    inst.active = true;
    return inst;
  }

  double w_norm(const Eigen::VectorXd& v) const { return (w_sqrt * v).norm(); }
};

inline bool beta_scaled_preconditioner(MethodKind kind) {
  return kind == MethodKind::Anderson || kind == MethodKind::BroydenII ||
         kind == MethodKind::GoodAndersonBroydenI || kind == MethodKind::SRk;
}

}  // namespace detail

// Plain fixed-point iteration x_i = g(y_{i-1}), y_i = x_i; fills an unbounded
// history for offline extrapolation.
inline BaselineResult run_baseline(const LinearFixedPoint& problem,
                                   const Eigen::VectorXd& y0, int iters) {
  check_dim(problem, y0, "run_baseline");
  if (iters < 1) throw InputError("run_baseline: iters must be >= 1");
  detail::StopWatch watch;
  BaselineResult out{RunRecord{}, IterateHistory(problem.d)};
  Eigen::VectorXd y = y0;
  long ops = 0;
  for (int i = 1; i <= iters; ++i) {
    Eigen::VectorXd x = problem.apply_g(y);
    ++ops;
    out.history.push(y, x);
    RunRow row;
    row.iter = i;
    row.res_l2 = (x - y).norm();
    if (problem.x_star) row.err_l2 = (y - *problem.x_star).norm();
    row.ops = ops;
    row.seconds = watch.seconds();
    out.record.rows.push_back(row);
    y = x;
  }
  return out;
}

struct OfflineResult {
  Eigen::VectorXd y_extr;
  double residual_norm = 0.0;
};

// Extrapolates from the first N baseline pairs, recomputing gamma from
// scratch (offline mode is instrumentation; the online loop is the
// incremental path).
inline OfflineResult offline_extrapolate(const LinearFixedPoint& problem,
                                         const IterateHistory& baseline,
                                         std::size_t N,
                                         const MethodConfig& config,
                                         double lambda_reg = 0.0) {
  if (N < 1 || N > baseline.size())
    throw InputError("offline_extrapolate: bad prefix length");
  const IterateHistory h = baseline.prefix(N);
  OfflineResult out;
  out.y_extr = gna_step(h, config, problem, lambda_reg);
  out.residual_norm = (problem.apply_g(out.y_extr) - out.y_extr).norm();
  return out;
}

// Online loop: x_i = g(y_{i-1}), push, extrapolate, repeat. Window capacity
// n_max (0 = full memory). Breakdowns restart from the current iterate and
// the run continues. The bound column carries the Theorem-style value
// amplification * chebyshev(i-1) * ||r1||_W while the window has not slid
// (it is not valid once columns are dropped) and dense instrumentation is
// available.
inline RunRecord online_accelerate(const LinearFixedPoint& problem,
                                   const Eigen::VectorXd& y0,
                                   const MethodConfig& config,
                                   std::size_t n_max, int iters,
                                   double lambda_reg = 0.0) {
  check_dim(problem, y0, "online_accelerate");
  config.validate();
  if (config.kind == MethodKind::GMRES)
    throw UnsupportedOnlineError(
        "online_accelerate: GMRES is offline-only (P = 0 discards the "
        "contraction step)");
  if (iters < 1) throw InputError("online_accelerate: iters must be >= 1");

  detail::StopWatch watch;
  RunRecord record;
  const auto inst = detail::DenseInstruments::make(problem, config);
  const bool cache_z = config.kind == MethodKind::CG;

  IterateHistory history(problem.d, n_max);
  IncrementalGammaSolver solver(weight_spec_for(config), lambda_reg);
  Eigen::VectorXd y = y0;
  long ops = 0;
  double r1_w = 0.0;
  bool window_full = false;
  // Snapshot of the history that produced the current iterate, kept only for
  // the per-step amplification of the history-dependent preconditioners.
  std::optional<IterateHistory> prev_hist;
  const bool track_prev =
      inst.active && !detail::beta_scaled_preconditioner(config.kind) &&
      config.kind != MethodKind::GMRES;

  for (int i = 1; i <= iters; ++i) {
    Eigen::VectorXd x = problem.apply_g(y);
    ++ops;
    Eigen::VectorXd r = x - y;
    if (cache_z) {
      history.push(y, x, problem.apply_g_minus_i(r));
      ++ops;
    } else {
      history.push(y, x);
    }
    solver.push(history);
    if (history.total_evictions() > 0) window_full = true;

    RunRow row;
    row.iter = i;
    row.res_l2 = r.norm();
    if (inst.active) row.res_w = inst.w_norm(r);
    if (problem.x_star) row.err_l2 = (y - *problem.x_star).norm();
    // Bound rows start at i = 3: row i reflects N = i-1 history pairs, and
    // the N = 1 endpoint of the Chebyshev factor is excluded.
    if (inst.active && problem.kappa && i >= 3 && !window_full &&
        record.restarts == 0) {
      // y was produced from i-1 pairs; amplification is per-step for the
      // history-dependent preconditioners.
      double amp = inst.amp_beta_scaled;
      if (track_prev) {
        amp = -1.0;
        if (prev_hist) {
          try {
            amp = amplification_factor(
                *problem.dense_g,
                dense_preconditioner(config, problem, &*prev_hist));
          } catch (const Error&) {
            amp = -1.0;
          }
        }
      }
      if (amp >= 0.0)
        row.bound = amp * chebyshev_factor(*problem.kappa, i - 1) * r1_w;
    }
    row.ops = ops;
    if (i == 1 && inst.active) r1_w = *row.res_w;
    row.seconds = watch.seconds();
    record.rows.push_back(row);

    if (i == iters) break;
    if (track_prev) prev_hist = history;
    try {
      const GammaCoefficients g = solver.solve(history);
      Eigen::VectorXd y_next =
          gna_step_with_gamma(history, config, problem, g.gamma);
      if (config.line_search) ops += 2;
      if (!y_next.allFinite()) throw SingularGramError("non-finite step");
      y = std::move(y_next);
    } catch (const Error&) {
      ++record.restarts;
      history.clear();
      solver.reset();
      y = std::move(x);
    }
  }
  record.refactorizations = solver.refactorizations();
  return record;
}

}  // namespace gna
