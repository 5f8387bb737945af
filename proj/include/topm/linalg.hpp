#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "topm/errors.hpp"

namespace topm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Symmetric positive-definite matrix together with an explicitly maintained
/// inverse. Rank-one updates go through Sherman-Morrison; the inverse is
/// recomputed from the accumulated matrix every `refresh_period` updates.
class PosDefState {
 public:
  static constexpr std::size_t kDefaultRefreshPeriod = 1000;

  PosDefState() = default;

  /// lambda * I_n.
  static PosDefState scaled_identity(Eigen::Index n, double lambda) {
    require(n >= 1, "PosDefState: dimension must be positive");
    require(lambda > 0.0, "PosDefState: lambda must be positive");
    PosDefState s;
    s.matrix_ = lambda * Matrix::Identity(n, n);
    s.inverse_ = (1.0 / lambda) * Matrix::Identity(n, n);
    return s;
  }

  /// Takes ownership of an SPD matrix and inverts it directly.
  explicit PosDefState(Matrix matrix) : matrix_(std::move(matrix)) {
    require(matrix_.rows() == matrix_.cols() && matrix_.rows() >= 1,
            "PosDefState: matrix must be square and non-empty");
    refresh();
  }

  Eigen::Index dim() const { return matrix_.rows(); }
  const Matrix& matrix() const { return matrix_; }
  const Matrix& inverse() const { return inverse_; }
  std::size_t updates() const { return updates_; }

  void set_refresh_period(std::size_t period) { refresh_period_ = period; }
  std::size_t refresh_period() const { return refresh_period_; }

  /// A <- A + x x^T.
  void rank_one_update(const VectorRef& x) {
    check_dim(x.size(), "rank_one_update");
    matrix_.noalias() += x * x.transpose();
    const Vector ax = inverse_ * x;
    const double denom = 1.0 + x.dot(ax);
    inverse_.noalias() -= (ax * ax.transpose()) / denom;
    symmetrize(inverse_);
    ++updates_;
    if (refresh_period_ != 0 && updates_ % refresh_period_ == 0) refresh();
  }

  /// y^T A^{-1} y.
  double quad_form(const VectorRef& y) const {
    check_dim(y.size(), "quad_form");
    return std::max(0.0, y.dot(inverse_ * y));
  }

  /// y^T (A + x x^T)^{-1} y without touching the state.
  double quad_form_after_update(const VectorRef& y, const VectorRef& x) const {
    check_dim(y.size(), "quad_form_after_update");
    check_dim(x.size(), "quad_form_after_update");
    const Vector ax = inverse_ * x;
    const double cross = y.dot(ax);
    const double value = y.dot(inverse_ * y) - cross * cross / (1.0 + x.dot(ax));
    return std::max(0.0, value);
  }

  /// A^{-1} y.
  Vector solve(const VectorRef& y) const {
    check_dim(y.size(), "solve");
    return inverse_ * y;
  }

  /// Recomputes the inverse from the accumulated matrix.
  void refresh() {
    symmetrize(matrix_);
    Eigen::LLT<Matrix> llt(matrix_);
    if (llt.info() != Eigen::Success)
      throw ContractViolation("PosDefState: matrix is not positive definite");
    inverse_ = llt.solve(Matrix::Identity(dim(), dim()));
    symmetrize(inverse_);
  }

  /// max |A A^{-1} - I|.
  double inverse_residual() const {
    return (matrix_ * inverse_ - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
  }

 private:
  static void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

  void check_dim(Eigen::Index n, const char* op) const {
    if (n != dim())
      throw ContractViolation(std::string("PosDefState::") + op + ": expected length " +
                              std::to_string(dim()) + ", got " + std::to_string(n));
  }

  Matrix matrix_;
  Matrix inverse_;
  std::size_t updates_ = 0;
  std::size_t refresh_period_ = kDefaultRefreshPeriod;
};

}  // namespace topm
