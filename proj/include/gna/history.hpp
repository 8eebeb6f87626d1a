#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <deque>

#include "gna/errors.hpp"

namespace gna {

// Windowed iterate history: columns y_0..y_{N-1}, x_1..x_N and residuals
// r_i = x_i - y_{i-1}, capacity N_max (0 = unbounded), oldest evicted first.
// An optional third column stream z_i caches (G-I) r_i for CG runs.
// Push/eviction counters let incremental Gram state resynchronize.
class IterateHistory {
 public:
  explicit IterateHistory(Eigen::Index d, std::size_t capacity = 0)
      : d_(d), capacity_(capacity) {
    if (d < 1) throw InputError("IterateHistory: dimension must be >= 1");
  }

  void push(const Eigen::VectorXd& y, const Eigen::VectorXd& x) {
    if (has_z_ && !y_.empty())
      throw InputError("IterateHistory::push: history caches z columns, use "
                       "the three-argument push");
    push_impl(y, x);
  }

  void push(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
            const Eigen::VectorXd& z) {
    if (!has_z_ && !y_.empty())
      throw InputError("IterateHistory::push: history has no z columns, use "
                       "the two-argument push");
    if (z.size() != d_) throw InputError("IterateHistory::push: bad z size");
    has_z_ = true;
    push_impl(y, x);
    z_.push_back(z);
    if (z_.size() > y_.size()) z_.pop_front();
  }

  std::size_t size() const { return y_.size(); }
  bool empty() const { return y_.empty(); }
  Eigen::Index dimension() const { return d_; }
  std::size_t capacity() const { return capacity_; }
  bool has_z() const { return has_z_; }

  long total_pushes() const { return pushes_; }
  long total_evictions() const { return evictions_; }

  const Eigen::VectorXd& y_col(std::size_t i) const { return y_.at(i); }
  const Eigen::VectorXd& x_col(std::size_t i) const { return x_.at(i); }
  const Eigen::VectorXd& r_col(std::size_t i) const { return r_.at(i); }
  const Eigen::VectorXd& z_col(std::size_t i) const { return z_.at(i); }

  Eigen::MatrixXd Y() const { return assemble(y_); }
  Eigen::MatrixXd X() const { return assemble(x_); }
  Eigen::MatrixXd R() const { return assemble(r_); }
  Eigen::MatrixXd Z() const { return assemble(z_); }

  void clear() {
    y_.clear();
    x_.clear();
    r_.clear();
    z_.clear();
    has_z_ = false;
  }

  // First n columns as a fresh unbounded history (offline prefixes).
  IterateHistory prefix(std::size_t n) const {
    if (n > size()) throw InputError("IterateHistory::prefix: n > size");
    IterateHistory h(d_);
    for (std::size_t i = 0; i < n; ++i) {
      if (has_z_)
        h.push(y_[i], x_[i], z_[i]);
      else
        h.push(y_[i], x_[i]);
    }
    return h;
  }

  double smallest_singular_value_r() const {
    if (empty()) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R());
    return svd.singularValues().tail(1)(0);
  }

 private:
  void push_impl(const Eigen::VectorXd& y, const Eigen::VectorXd& x) {
    if (y.size() != d_ || x.size() != d_)
      throw InputError("IterateHistory::push: dimension mismatch");
    y_.push_back(y);
    x_.push_back(x);
    r_.push_back(x - y);
    ++pushes_;
    if (capacity_ != 0 && y_.size() > capacity_) {
      y_.pop_front();
      x_.pop_front();
      r_.pop_front();
      if (has_z_ && z_.size() >= y_.size()) z_.pop_front();
      ++evictions_;
    }
  }

  Eigen::MatrixXd assemble(const std::deque<Eigen::VectorXd>& cols) const {
    Eigen::MatrixXd out(d_, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i)
      out.col(static_cast<Eigen::Index>(i)) = cols[i];
    return out;
  }

  Eigen::Index d_;
  std::size_t capacity_;
  std::deque<Eigen::VectorXd> y_, x_, r_, z_;
  bool has_z_ = false;
  long pushes_ = 0;
  long evictions_ = 0;
};

// C is N x (N-1): column j has +1 in row j and -1 in row j+1, so 1'C = 0 and
// RC holds consecutive residual differences.
inline Eigen::MatrixXd difference_matrix(int N) {
  if (N < 2)
    throw InsufficientHistoryError(
        "difference_matrix: needs at least 2 history columns");
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(N, N - 1);
  for (int j = 0; j + 1 < N; ++j) {
    C(j, j) = 1.0;
    C(j + 1, j) = -1.0;
  }
  return C;
}

}  // namespace gna
