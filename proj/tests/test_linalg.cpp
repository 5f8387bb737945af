#include <gtest/gtest.h>

#include "oracles.hpp"
#include "topm/linalg.hpp"
#include "topm/random.hpp"

using namespace topm;

TEST(PosDefState, ScaledIdentity) {
  const auto s = PosDefState::scaled_identity(3, 0.1);
  EXPECT_TRUE(s.matrix().isApprox(0.1 * Matrix::Identity(3, 3)));
  EXPECT_TRUE(s.inverse().isApprox(10.0 * Matrix::Identity(3, 3)));
  EXPECT_THROW(PosDefState::scaled_identity(3, 0.0), ContractViolation);
}

TEST(PosDefState, TwoByTwoAgainstClosedFormInverse) {
  auto s = PosDefState::scaled_identity(2, 0.5);
  Vector x(2);
  x << 1.0, 2.0;
  s.rank_one_update(x);
  // A = [[1.5, 2], [2, 4.5]], det = 2.75
  const double det = 1.5 * 4.5 - 4.0;
  Matrix inv(2, 2);
  inv << 4.5 / det, -2.0 / det, -2.0 / det, 1.5 / det;
  EXPECT_LT((s.inverse() - inv).cwiseAbs().maxCoeff(), 1e-14);
  Vector y(2);
  y << 1.0, -1.0;
  EXPECT_NEAR(s.quad_form(y), y.dot(inv * y), 1e-14);
}

TEST(PosDefState, WhatIfMatchesRealUpdate) {
  Rng rng = make_rng(5);
  std::normal_distribution<double> g;
  auto s = PosDefState::scaled_identity(4, 0.3);
  for (int n = 0; n < 20; ++n) {
    Vector x(4), y(4);
    for (int i = 0; i < 4; ++i) x[i] = g(rng), y[i] = g(rng);
    const double predicted = s.quad_form_after_update(y, x);
    const Matrix before = s.inverse();
    s.rank_one_update(x);
    EXPECT_NEAR(predicted, s.quad_form(y), 1e-10 * std::max(1.0, predicted));
    EXPECT_FALSE(before.isApprox(s.inverse()));
  }
}

TEST(PosDefState, DimensionMismatchThrows) {
  auto s = PosDefState::scaled_identity(3, 1.0);
  EXPECT_THROW(s.rank_one_update(Vector::Ones(2)), ContractViolation);
  EXPECT_THROW(s.quad_form(Vector::Ones(4)), ContractViolation);
  EXPECT_THROW(s.solve(Vector::Ones(1)), ContractViolation);
}

// Incremental inverse vs batch inverse over 1000 random update sequences.
TEST(PosDefState, ShermanMorrisonAgreesWithBatchProperty) {
  Rng rng = make_rng(2024);
  std::uniform_int_distribution<int> dim(1, 6), len(1, 60);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> lam(0.01, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = dim(rng);
    const int k = n + 2;
    Matrix x(n, k);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const double lambda = lam(rng);
    auto s = PosDefState::scaled_identity(n, lambda);
    s.set_refresh_period(0);  // pure Sherman-Morrison
    std::vector<int> pulls;
    std::uniform_int_distribution<int> arm(0, k - 1);
    const int steps = len(rng);
    for (int t = 0; t < steps; ++t) {
      pulls.push_back(arm(rng));
      s.rank_one_update(x.col(pulls.back()));
    }
    const Matrix batch_inv = oracle::batch_design(x, pulls, lambda).inverse();
    worst = std::max(worst, (s.inverse() - batch_inv).cwiseAbs().maxCoeff() /
                                std::max(1.0, batch_inv.cwiseAbs().maxCoeff()));
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(PosDefState, PeriodicRefreshKeepsResidualSmall) {
  auto s = PosDefState::scaled_identity(3, 0.01);
  s.set_refresh_period(7);
  Vector x(3);
  x << 1.0, 1e-3, -2.0;
  for (int t = 0; t < 5000; ++t) s.rank_one_update(x + Vector::Constant(3, (t % 3) * 0.1));
  EXPECT_EQ(s.updates(), 5000u);
  EXPECT_LT(s.inverse_residual(), 1e-8);
}

TEST(PosDefState, RejectsIndefiniteMatrix) {
  Matrix a(2, 2);
  a << 1, 2, 2, 1;
  EXPECT_THROW(PosDefState{a}, ContractViolation);
}
