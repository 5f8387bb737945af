#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "topm/errors.hpp"
#include "topm/linalg.hpp"

namespace topm {

/// Online regularized least squares over fixed arm features.
///
/// Maintains B = lambda I + sum_a N_a x_a x_a^T (with inverse), the response
/// b = sum_s r_s x_{a_s}, the counts N_a and theta_hat = B^{-1} b.
/// lambda = 0 is accepted only for canonical (identity) features; the design
/// then becomes usable once every arm has been pulled.
class Estimator {
 public:
  Estimator(Matrix features, double lambda, double sigma)
      : features_(std::move(features)),
        lambda_(lambda),
        sigma_(sigma),
        response_(Vector::Zero(features_.rows())),
        theta_hat_(Vector::Zero(features_.rows())),
        means_(Vector::Zero(features_.cols())),
        counts_(features_.cols(), 0) {
    require(features_.cols() >= 1 && features_.rows() >= 1, "Estimator: empty feature matrix");
    require(sigma_ > 0.0 && std::isfinite(sigma_), "Estimator: sigma must be positive");
    require(lambda_ >= 0.0 && std::isfinite(lambda_), "Estimator: lambda must be non-negative");
    if (lambda_ > 0.0) {
      design_ = PosDefState::scaled_identity(dim(), lambda_);
    } else {
      require(is_canonical(features_), "Estimator: lambda = 0 requires canonical features");
      pending_ = Matrix::Zero(dim(), dim());
    }
  }

  static bool is_canonical(const Matrix& x) {
    return x.rows() == x.cols() && x.isIdentity(0.0);
  }

  int arms() const { return static_cast<int>(features_.cols()); }
  int dim() const { return static_cast<int>(features_.rows()); }
  double lambda() const { return lambda_; }
  double sigma() const { return sigma_; }
  const Matrix& features() const { return features_; }
  const std::vector<long>& counts() const { return counts_; }
  long count(int arm) const { return counts_[arm]; }
  long round() const { return round_; }
  const Vector& response() const { return response_; }
  const Vector& theta_hat() const { return theta_hat_; }
  const Vector& means() const { return means_; }

  /// False only while lambda = 0 and some arm is still unpulled.
  bool ready() const { return design_.has_value(); }

  const PosDefState& design() const {
    require(ready(), "Estimator: design is singular until every arm is pulled (lambda = 0)");
    return *design_;
  }

  void set_refresh_period(std::size_t period) {
    refresh_period_ = period;
    if (design_) design_->set_refresh_period(period);
  }

  void update(int arm, double reward) {
    require(arm >= 0 && arm < arms(), "Estimator::update: arm out of range");
    const auto x = features_.col(arm);
    ++counts_[arm];
    ++round_;
    response_.noalias() += reward * x;
    if (design_) {
      design_->rank_one_update(x);
    } else {
      pending_.noalias() += x * x.transpose();
      bool all_pulled = true;
      for (long c : counts_) all_pulled = all_pulled && c > 0;
      if (!all_pulled) return;
      design_.emplace(pending_);
      design_->set_refresh_period(refresh_period_);
    }
    theta_hat_ = design_->solve(response_);
    means_.noalias() = features_.transpose() * theta_hat_;
  }

  double empirical_mean(int arm) const { return means_[arm]; }
  double empirical_gap(int i, int j) const { return means_[i] - means_[j]; }

  /// ||y|| in the covariance sigma^2 B^{-1}.
  double deviation(const VectorRef& y) const { return sigma_ * std::sqrt(design().quad_form(y)); }
  double deviation_of_arm(int arm) const { return deviation(features_.col(arm)); }

  /// Dense check of the maintained quantities against a from-scratch rebuild.
  /// Returns the largest entry error over design, inverse and theta_hat.
  double consistency_error() const {
    Matrix expected = lambda_ * Matrix::Identity(dim(), dim());
    for (int a = 0; a < arms(); ++a)
      expected.noalias() += static_cast<double>(counts_[a]) * features_.col(a) * features_.col(a).transpose();
    const Matrix& b = design().matrix();
    const Vector theta = expected.ldlt().solve(response_);
    double err = (b - expected).cwiseAbs().maxCoeff();
    err = std::max(err, (theta_hat_ - theta).cwiseAbs().maxCoeff());
    err = std::max(err, design().inverse_residual());
    return err;
  }

 private:
  Matrix features_;
  double lambda_;
  double sigma_;
  std::optional<PosDefState> design_;
  Matrix pending_;
  Vector response_;
  Vector theta_hat_;
  Vector means_;
  std::vector<long> counts_;
  long round_ = 0;
  std::size_t refresh_period_ = PosDefState::kDefaultRefreshPeriod;
};

}  // namespace topm
