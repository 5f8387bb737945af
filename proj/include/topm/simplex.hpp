#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "topm/errors.hpp"
#include "topm/linalg.hpp"

namespace topm {

/// Optimal basic solution of min c^T x s.t. A x = b, x >= 0.
struct LpSolution {
  Vector x;
  double objective = 0.0;
  std::vector<int> basis;  // columns of A that are basic in the final tableau
};

namespace simplex_detail {

class Tableau {
 public:
  Tableau(const Matrix& a, const Vector& b) : rows_(a.rows()), cols_(a.cols()) {
    // Columns: structural [0, n), artificial [n, n + m), rhs last.
    t_ = Matrix::Zero(rows_, cols_ + rows_ + 1);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      const double sign = b[i] < 0 ? -1.0 : 1.0;
      t_.row(i).head(cols_) = sign * a.row(i);
      t_(i, cols_ + i) = 1.0;
      t_(i, rhs()) = sign * b[i];
      basis_.push_back(static_cast<int>(cols_ + i));
    }
    double scale = 1.0;
    if (t_.size() > 0) scale = std::max(1.0, t_.cwiseAbs().maxCoeff());
    tol_ = 1e-11 * scale;
    original_ = t_;
    row_of_original_.resize(static_cast<std::size_t>(rows_));
    for (Eigen::Index i = 0; i < rows_; ++i) row_of_original_[static_cast<std::size_t>(i)] = i;
  }

  Eigen::Index rhs() const { return t_.cols() - 1; }
  bool is_artificial(int col) const { return col >= cols_; }
  const std::vector<int>& basis() const { return basis_; }
  double tol() const { return tol_; }

  /// Runs the simplex method on `cost` restricted to columns [0, active).
  /// Dantzig pricing; Bland's rule while a degenerate run lasts.
  void optimize(const Vector& cost, Eigen::Index active) {
    long degenerate_streak = 0;
    const long bland_after = 2 * static_cast<long>(t_.rows()) + 10;
    const long limit = 200 * (t_.rows() + t_.cols()) + 10000;
    for (long iter = 0;; ++iter) {
      if (iter > limit) throw std::runtime_error("simplex: iteration limit exceeded");
      const bool bland = degenerate_streak > bland_after;
      Vector reduced = cost.head(active);
      for (std::size_t i = 0; i < basis_.size(); ++i) {
        const double cb = basis_[i] < cost.size() ? cost[basis_[i]] : 0.0;
        if (cb != 0.0) reduced -= cb * t_.row(static_cast<Eigen::Index>(i)).head(active).transpose();
      }
      const double cost_scale = std::max(1.0, cost.head(active).cwiseAbs().maxCoeff());
      int enter = -1;
      double best = -1e-9 * cost_scale;
      for (Eigen::Index j = 0; j < active; ++j) {
        if (reduced[j] < best) {
          enter = static_cast<int>(j);
          if (bland) break;
          best = reduced[j];
        }
      }
      if (enter < 0) return;

      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < t_.rows(); ++i) {
        const double p = t_(i, enter);
        if (p <= tol_) continue;
        const double r = t_(i, rhs()) / p;
        const double slack = 1e-12 * std::max(1.0, std::abs(ratio));
        if (leave < 0 || r < ratio - slack ||
            (r <= ratio + slack && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          ratio = std::min(ratio, r);
          leave = static_cast<int>(i);
        }
      }
      if (leave < 0) throw std::runtime_error("simplex: unbounded objective");
      degenerate_streak = ratio <= tol_ ? degenerate_streak + 1 : 0;
      pivot(leave, enter);
      if (++pivots_ % kRefactorPeriod == 0) refactor();
    }
  }

  void pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    t_.col(col).setZero();
    t_(row, col) = 1.0;
    basis_[static_cast<std::size_t>(row)] = col;
    snap();
  }

  double phase_one_residual() const {
    double s = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i)
      if (is_artificial(basis_[i])) s += t_(static_cast<Eigen::Index>(i), rhs());
    return s;
  }

  /// Pivots zero-level artificials out of the basis; rows that cannot be
  /// cleared are linearly dependent and are dropped.
  void purge_artificials() {
    for (Eigen::Index i = 0; i < t_.rows();) {
      if (!is_artificial(basis_[static_cast<std::size_t>(i)])) {
        ++i;
        continue;
      }
      Eigen::Index j = 0;
      t_.row(i).head(cols_).cwiseAbs().maxCoeff(&j);
      if (std::abs(t_(i, j)) > 1e-9) {
        pivot(static_cast<int>(i), static_cast<int>(j));
        ++i;
      } else {
        drop_row(i);
      }
    }
  }

  Vector solution() const {
    Vector x = Vector::Zero(cols_);
    for (std::size_t i = 0; i < basis_.size(); ++i)
      if (!is_artificial(basis_[i])) x[basis_[i]] = t_(static_cast<Eigen::Index>(i), rhs());
    return x;
  }

 private:
  static constexpr long kRefactorPeriod = 32;

  /// Zeroes entries that are noise relative to the tolerance, so that
  /// degenerate ties stay exact ties.
  void snap() {
    t_ = t_.unaryExpr([this](double v) { return std::abs(v) < 1e-3 * tol_ ? 0.0 : v; });
    for (Eigen::Index i = 0; i < t_.rows(); ++i)
      if (std::abs(t_(i, rhs())) < tol_) t_(i, rhs()) = 0.0;
  }

  /// Rebuilds the tableau as B^{-1} [A | I | b] from the original rows.
  void refactor() {
    const Eigen::Index r = t_.rows();
    Matrix orig(r, original_.cols());
    for (Eigen::Index i = 0; i < r; ++i) orig.row(i) = original_.row(row_of_original_[static_cast<std::size_t>(i)]);
    Matrix basic(r, r);
    for (Eigen::Index k = 0; k < r; ++k) basic.col(k) = orig.col(basis_[static_cast<std::size_t>(k)]);
    Eigen::PartialPivLU<Matrix> lu(basic);
    Matrix rebuilt = lu.solve(orig);
    if (!rebuilt.allFinite() || (basic * rebuilt - orig).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, orig.cwiseAbs().maxCoeff()))
      return;  // ill-conditioned basis, keep the incremental tableau
    t_ = std::move(rebuilt);
    for (Eigen::Index k = 0; k < r; ++k) {
      t_.col(basis_[static_cast<std::size_t>(k)]).setZero();
      t_(k, basis_[static_cast<std::size_t>(k)]) = 1.0;
    }
    for (Eigen::Index i = 0; i < r; ++i) t_(i, rhs()) = std::max(0.0, t_(i, rhs()));
    snap();
  }

  void drop_row(Eigen::Index i) {
    const Eigen::Index last = t_.rows() - 1;
    if (i != last) {
      t_.row(i) = t_.row(last);
      basis_[static_cast<std::size_t>(i)] = basis_[static_cast<std::size_t>(last)];
      row_of_original_[static_cast<std::size_t>(i)] = row_of_original_[static_cast<std::size_t>(last)];
    }
    t_.conservativeResize(last, Eigen::NoChange);
    basis_.pop_back();
    row_of_original_.pop_back();
  }

  Eigen::Index rows_;
  Eigen::Index cols_;
  Matrix t_;
  Matrix original_;
  std::vector<Eigen::Index> row_of_original_;
  std::vector<int> basis_;
  long pivots_ = 0;
  double tol_ = 1e-11;
};

}  // namespace simplex_detail

/// Two-phase dense simplex. Throws InfeasibleDesign when {A x = b, x >= 0} is empty.
inline LpSolution solve_lp(const Matrix& a, const Vector& b, const Vector& c) {
  require(a.rows() == b.size() && a.cols() == c.size(), "solve_lp: dimension mismatch");
  const Eigen::Index n = a.cols();
  const Eigen::Index m = a.rows();
  simplex_detail::Tableau tab(a, b);

  Vector phase1 = Vector::Zero(n + m);
  phase1.tail(m).setOnes();
  tab.optimize(phase1, n + m);
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (tab.phase_one_residual() > 1e-9 * scale) throw InfeasibleDesign("solve_lp: infeasible constraints");
  tab.purge_artificials();

  Vector phase2 = Vector::Zero(n + m);
  phase2.head(n) = c;
  tab.optimize(phase2, n);

  LpSolution sol;
  sol.basis = tab.basis();
  sol.x = tab.solution();
  // Polish the basic values against the original system.
  if (!sol.basis.empty()) {
    Matrix ab(m, static_cast<Eigen::Index>(sol.basis.size()));
    for (std::size_t k = 0; k < sol.basis.size(); ++k) ab.col(static_cast<Eigen::Index>(k)) = a.col(sol.basis[k]);
    const Vector xb = ab.colPivHouseholderQr().solve(b);
    if ((ab * xb - b).cwiseAbs().maxCoeff() <= (a * sol.x - b).cwiseAbs().maxCoeff() &&
        xb.minCoeff() >= -1e-9) {
      sol.x.setZero();
      for (std::size_t k = 0; k < sol.basis.size(); ++k)
        sol.x[sol.basis[k]] = std::max(0.0, xb[static_cast<Eigen::Index>(k)]);
    }
  }
  sol.objective = c.dot(sol.x);
  return sol;
}

/// argmin ||w||_1 subject to X w = y, via the split w = u - v with u, v >= 0.
inline Vector solve_min_l1(const Matrix& x, const Vector& y) {
  require(x.rows() == y.size(), "solve_min_l1: dimension mismatch");
  const Eigen::Index k = x.cols();
  if (y.isZero(0.0)) return Vector::Zero(k);
  Matrix split(x.rows(), 2 * k);
  split << x, -x;
  const LpSolution sol = solve_lp(split, y, Vector::Ones(2 * k));
  Vector w = sol.x.head(k) - sol.x.tail(k);
  if ((x * w - y).norm() > 1e-8 * std::max(1.0, y.norm()))
    throw InfeasibleDesign("solve_min_l1: target is outside the feature span");
  return w;
}

}  // namespace topm
