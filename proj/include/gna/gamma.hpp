#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <string>

#include "gna/errors.hpp"
#include "gna/history.hpp"

namespace gna {

// Selects the quadratic form behind ||.||_W, and with it the Gram matrix the
// gamma solver inverts:
//   Identity          -> R'R
//   InverseOfGminusI  -> Y'R          (no inversion of G-I needed)
//   Mixed(W1, W2)     -> Y'W1R + R'W2R   for W = (G-I)^{-1} W1 + W2
//   ShiftedInverse(b) -> Y'R - b R'R     for W = (G-I)^{-1} - b I
struct WeightSpec {
  enum class Kind { Identity, InverseOfGminusI, Mixed, ShiftedInverse };
  Kind kind = Kind::Identity;
  double beta = 0.0;  // ShiftedInverse scale
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> w1, w2;  // Mixed

  static WeightSpec identity() { return {}; }
  static WeightSpec inverse_of_g_minus_i() {
    WeightSpec s;
    s.kind = Kind::InverseOfGminusI;
    return s;
  }
  static WeightSpec shifted_inverse(double beta) {
    WeightSpec s;
    s.kind = Kind::ShiftedInverse;
    s.beta = beta;
    return s;
  }
  static WeightSpec mixed(std::function<Eigen::VectorXd(const Eigen::VectorXd&)> w1,
                          std::function<Eigen::VectorXd(const Eigen::VectorXd&)> w2) {
    WeightSpec s;
    s.kind = Kind::Mixed;
    s.w1 = std::move(w1);
    s.w2 = std::move(w2);
    return s;
  }

  std::string name() const {
    switch (kind) {
      case Kind::Identity: return "Identity";
      case Kind::InverseOfGminusI: return "InverseOfGminusI";
      case Kind::Mixed: return "Mixed";
      case Kind::ShiftedInverse:
        return "ShiftedInverse(" + std::to_string(beta) + ")";
    }
    return "?";
  }
};

struct GammaCoefficients {
  Eigen::VectorXd gamma;
  double gram_condition_estimate = 0.0;
};

inline Eigen::MatrixXd gram_matrix(const IterateHistory& h,
                                   const WeightSpec& spec) {
  if (h.empty()) throw InsufficientHistoryError("gram_matrix: empty history");
  const Eigen::MatrixXd R = h.R();
  switch (spec.kind) {
    case WeightSpec::Kind::Identity:
      return R.transpose() * R;
    case WeightSpec::Kind::InverseOfGminusI:
      return h.Y().transpose() * R;
    case WeightSpec::Kind::ShiftedInverse:
      return h.Y().transpose() * R - spec.beta * (R.transpose() * R);
    case WeightSpec::Kind::Mixed: {
      if (!spec.w1 || !spec.w2)
        throw InputError("gram_matrix: Mixed spec missing W1/W2 operators");
      const Eigen::Index N = R.cols();
      Eigen::MatrixXd W1R(R.rows(), N), W2R(R.rows(), N);
      for (Eigen::Index j = 0; j < N; ++j) {
        W1R.col(j) = spec.w1(R.col(j));
        W2R.col(j) = spec.w2(R.col(j));
      }
      return h.Y().transpose() * W1R + R.transpose() * W2R;
    }
  }
  throw InputError("gram_matrix: unknown spec");
}

namespace detail {

// Relative backward error of M s = 1; near machine epsilon for any
// backward-stable solve, O(1) only on genuine breakdowns.
inline double solve_backward_error(const Eigen::MatrixXd& M,
                                   const Eigen::VectorXd& s) {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(M.rows());
  double num = (M * s - ones).lpNorm<Eigen::Infinity>();
  double den = 1.0 + M.cwiseAbs().rowwise().sum().maxCoeff() *
                         s.lpNorm<Eigen::Infinity>();
  return num / den;
}

inline double one_norm(const Eigen::MatrixXd& M) {
  return M.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace detail

// gamma = M^{-1}1 / (1'M^{-1}1) with M = Gram + lambda_reg ||Gram||_F I.
inline GammaCoefficients solve_gamma_from_gram(const Eigen::MatrixXd& gram,
                                               double lambda_reg,
                                               const std::string& spec_name) {
  const Eigen::Index N = gram.rows();
  if (N == 0) throw InsufficientHistoryError("solve_gamma: empty history");
  if (N == 1) {
    // The normalization constraint forces gamma = [1] whatever the Gram is.
    return {Eigen::VectorXd::Ones(1), 1.0};
  }
  Eigen::MatrixXd M = gram;
  if (lambda_reg > 0.0)
    M += lambda_reg * gram.norm() * Eigen::MatrixXd::Identity(N, N);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(N);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  Eigen::VectorXd sol = lu.solve(ones);
  // A zero pivot means M is exactly rank-deficient; near-singular Grams (the
  // full-memory regime) keep tiny nonzero pivots and are left to the backward
  // error check, which tolerates them as long as the solve is consistent.
  const bool rank_deficient =
      lu.matrixLU().diagonal().cwiseAbs().minCoeff() == 0.0;
  const bool bad = rank_deficient || !sol.allFinite() ||
                   detail::solve_backward_error(M, sol) > 1e-6;
  if (bad) {
    if (lambda_reg <= 0.0)
      throw SingularGramError("solve_gamma: singular Gram matrix for weight " +
                              spec_name);
    sol = M.completeOrthogonalDecomposition().solve(ones);
    if (!sol.allFinite())
      throw SingularGramError("solve_gamma: singular Gram matrix for weight " +
                              spec_name + " (pseudo-solve failed)");
  }

  const double sum = sol.sum();
  if (sum == 0.0 || std::abs(sum) <= 1e-14 * sol.cwiseAbs().sum())
    throw DegenerateNormalizationError(
        "solve_gamma: 1'M^{-1}1 vanished for weight " + spec_name);

  double cond = std::numeric_limits<double>::infinity();
  if (!bad) {
    Eigen::MatrixXd Minv = lu.solve(Eigen::MatrixXd::Identity(N, N));
    if (Minv.allFinite())
      cond = detail::one_norm(M) * detail::one_norm(Minv);
  }
  return {sol / sum, cond};
}

inline GammaCoefficients solve_gamma(const IterateHistory& h,
                                     const WeightSpec& spec,
                                     double lambda_reg = 0.0) {
  return solve_gamma_from_gram(gram_matrix(h, spec), lambda_reg, spec.name());
}

// Maintains the Gram matrix and its explicit inverse across pushes and window
// slides: a push borders M by one row/column (block-inverse update via the
// Schur complement, O(N^2)), an eviction removes the leading row/column
// (complementary downdate). New Gram entries cost O(Nd) inner products.
// Inconsistent updates (backward error > 1e-6) trigger a rebuild, recorded as
// a refactorization; a periodic refresh bounds roundoff drift.
class IncrementalGammaSolver {
 public:
  explicit IncrementalGammaSolver(WeightSpec spec, double lambda_reg = 0.0,
                                  int refresh_interval = 64)
      : spec_(std::move(spec)), reg_(lambda_reg), refresh_(refresh_interval) {}

  // Absorb everything that happened to the history since the last call.
  void push(const IterateHistory& h) {
    const long np = h.total_pushes() - seen_pushes_;
    const long ne = h.total_evictions() - seen_evictions_;
    const bool in_step = np >= 0 && ne >= 0 && np <= 1 && ne <= 1 &&
                         static_cast<long>(h.size()) == gram_.rows() + np - ne;
    if (!in_step) {
      rebuild(h, false);
      return;
    }
    if (np == 0 && ne == 0) return;
    events_ += static_cast<int>(np + ne);
    if (refresh_ > 0 && events_ >= refresh_) {
      events_ = 0;
      rebuild(h, false);
      return;
    }
    if ((ne == 1 && !drop_oldest()) || (np == 1 && !append_column(h))) {
      rebuild(h, true);
      return;
    }
    seen_pushes_ = h.total_pushes();
    seen_evictions_ = h.total_evictions();
  }

  GammaCoefficients solve(const IterateHistory& h) {
    if (gram_.rows() != static_cast<Eigen::Index>(h.size())) rebuild(h, false);
    const Eigen::Index N = gram_.rows();
    if (N == 0) throw InsufficientHistoryError("IncrementalGammaSolver: empty");
    if (N == 1) return {Eigen::VectorXd::Ones(1), 1.0};
    if (reg_ > 0.0) return solve_gamma_from_gram(gram_, reg_, spec_.name());

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(N);
    Eigen::VectorXd sol = inv_ * ones;
    // One sweep of iterative refinement against the exact Gram entries wipes
    // out the drift the updated inverse accumulates across events; O(N^2),
    // same complexity as the solve itself.
    if (sol.allFinite()) sol += inv_ * (ones - gram_ * sol);
    if (!sol.allFinite() || detail::solve_backward_error(gram_, sol) > 1e-6) {
      rebuild(h, true);
      sol = inv_ * Eigen::VectorXd::Ones(N);
      if (!sol.allFinite() || detail::solve_backward_error(gram_, sol) > 1e-6)
        throw SingularGramError(
            "IncrementalGammaSolver: singular Gram matrix for weight " +
            spec_.name());
    }
    const double sum = sol.sum();
    if (sum == 0.0 || std::abs(sum) <= 1e-14 * sol.cwiseAbs().sum())
      throw DegenerateNormalizationError(
          "IncrementalGammaSolver: 1'M^{-1}1 vanished for weight " +
          spec_.name());
    return {sol / sum, detail::one_norm(gram_) * detail::one_norm(inv_)};
  }

  void reset() {
    gram_.resize(0, 0);
    inv_.resize(0, 0);
    w1r_.clear();
    w2r_.clear();
    seen_pushes_ = seen_evictions_ = 0;
    events_ = 0;
  }

  long refactorizations() const { return refactor_; }
  const Eigen::MatrixXd& gram() const { return gram_; }

 private:
  void rebuild(const IterateHistory& h, bool count_refactorization) {
    if (count_refactorization) ++refactor_;
    gram_ = h.empty() ? Eigen::MatrixXd() : gram_matrix(h, spec_);
    const Eigen::Index N = gram_.rows();
    if (N > 0) {
      inv_ = Eigen::PartialPivLU<Eigen::MatrixXd>(gram_).solve(
          Eigen::MatrixXd::Identity(N, N));
      if (!inv_.allFinite()) inv_.setZero();
    } else {
      inv_.resize(0, 0);
    }
    if (spec_.kind == WeightSpec::Kind::Mixed && spec_.w1 && spec_.w2) {
      w1r_.clear();
      w2r_.clear();
      for (std::size_t i = 0; i < h.size(); ++i) {
        w1r_.push_back(spec_.w1(h.r_col(i)));
        w2r_.push_back(spec_.w2(h.r_col(i)));
      }
    }
    seen_pushes_ = h.total_pushes();
    seen_evictions_ = h.total_evictions();
  }

  bool drop_oldest() {
    const Eigen::Index N = gram_.rows();
    if (N < 1) return false;
    if (!w1r_.empty()) {
      w1r_.pop_front();
      w2r_.pop_front();
    }
    if (N == 1) {
      gram_.resize(0, 0);
      inv_.resize(0, 0);
      return true;
    }
    const double phi = inv_(0, 0);
    if (!(std::abs(phi) > 1e-300) || !std::isfinite(phi)) return false;
    Eigen::MatrixXd E = inv_.bottomRightCorner(N - 1, N - 1);
    Eigen::VectorXd g = inv_.col(0).tail(N - 1);
    Eigen::RowVectorXd f = inv_.row(0).tail(N - 1);
    inv_ = E - g * f / phi;
    gram_ = gram_.bottomRightCorner(N - 1, N - 1).eval();
    return true;
  }

  // Border the Gram with the products of the newest history column; the new
  // inverse follows from the block-inverse formula with Schur complement S.
  bool append_column(const IterateHistory& h) {
    const Eigen::Index N = gram_.rows();
    if (static_cast<Eigen::Index>(h.size()) != N + 1) return false;
    Eigen::VectorXd col(N + 1);
    Eigen::RowVectorXd row(N + 1);
    if (!new_products(h, col, row)) return false;
    if (N == 0) {
      gram_.resize(1, 1);
      gram_(0, 0) = col(0);
      inv_.resize(1, 1);
      inv_(0, 0) = col(0) != 0.0 ? 1.0 / col(0) : 0.0;
      return true;
    }
    Eigen::VectorXd b = col.head(N);
    Eigen::RowVectorXd c = row.head(N);
    const double delta = col(N);
    Eigen::VectorXd u = inv_ * b;
    Eigen::RowVectorXd v = c * inv_;
    const double S = delta - c.dot(u);
    if (!(std::abs(S) > 1e-300) || !std::isfinite(S)) return false;

    Eigen::MatrixXd gram_new(N + 1, N + 1);
    gram_new.topLeftCorner(N, N) = gram_;
    gram_new.col(N).head(N) = b;
    gram_new.row(N).head(N) = c;
    gram_new(N, N) = delta;

    Eigen::MatrixXd inv_new(N + 1, N + 1);
    inv_new.topLeftCorner(N, N) = inv_ + u * v / S;
    inv_new.col(N).head(N) = -u / S;
    inv_new.row(N).head(N) = -v / S;
    inv_new(N, N) = 1.0 / S;
    gram_ = std::move(gram_new);
    inv_ = std::move(inv_new);
    return inv_.allFinite();
  }

  // Gram entries involving the newest column, per the spec recipe:
  // col(i) = M(i, N), row(i) = M(N, i); col(N) = M(N, N).
  bool new_products(const IterateHistory& h, Eigen::VectorXd& col,
                    Eigen::RowVectorXd& row) {
    const std::size_t n = h.size();
    const Eigen::VectorXd& rn = h.r_col(n - 1);
    const Eigen::VectorXd& yn = h.y_col(n - 1);
    switch (spec_.kind) {
      case WeightSpec::Kind::Identity:
        for (std::size_t i = 0; i < n; ++i) {
          col(i) = h.r_col(i).dot(rn);
          row(i) = col(i);
        }
        return true;
      case WeightSpec::Kind::InverseOfGminusI:
        for (std::size_t i = 0; i < n; ++i) {
          col(i) = h.y_col(i).dot(rn);
          row(i) = yn.dot(h.r_col(i));
        }
        return true;
      case WeightSpec::Kind::ShiftedInverse:
        for (std::size_t i = 0; i < n; ++i) {
          col(i) = h.y_col(i).dot(rn) - spec_.beta * h.r_col(i).dot(rn);
          row(i) = yn.dot(h.r_col(i)) - spec_.beta * rn.dot(h.r_col(i));
        }
        return true;
      case WeightSpec::Kind::Mixed: {
        if (!spec_.w1 || !spec_.w2) return false;
        if (w1r_.size() != n - 1) return false;
        w1r_.push_back(spec_.w1(rn));
        w2r_.push_back(spec_.w2(rn));
        for (std::size_t i = 0; i < n; ++i) {
          col(i) = h.y_col(i).dot(w1r_.back()) + h.r_col(i).dot(w2r_.back());
          row(i) = yn.dot(w1r_[i]) + rn.dot(w2r_[i]);
        }
        return true;
      }
    }
    return false;
  }

  WeightSpec spec_;
  double reg_;
  int refresh_;
  Eigen::MatrixXd gram_, inv_;
  std::deque<Eigen::VectorXd> w1r_, w2r_;  // Mixed weighted residual cache
  long seen_pushes_ = 0, seen_evictions_ = 0;
  long refactor_ = 0;
  int events_ = 0;
};

}  // namespace gna
