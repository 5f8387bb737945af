#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "oracles.hpp"
#include "topm/complexity.hpp"

using namespace topm;

namespace {

ThresholdSpec heuristic(double delta) {
  ThresholdSpec s;
  s.kind = ThresholdKind::heuristic;
  s.delta = delta;
  return s;
}

}  // namespace

TEST(L1Design, CanonicalFeatures) {
  const Matrix x = Matrix::Identity(4, 4);
  const auto d = solve_l1_design(x, 1, 3);
  Vector expect = Vector::Zero(4);
  expect[1] = 1;
  expect[3] = -1;
  EXPECT_LT((d.weights - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(d.l1, 2.0, 1e-12);
  EXPECT_EQ(solve_l1_design(x, 2, 2).l1, 0.0);
}

TEST(L1Design, ThreeArmNearDuplicate) {
  Matrix x(2, 3);
  x << 1, 0, std::cos(0.1),
       0, 1, std::sin(0.1);
  const auto d = solve_l1_design(x, 0, 2);
  EXPECT_NEAR(d.l1, (1 - std::cos(0.1)) + std::sin(0.1), 1e-12);
  EXPECT_NEAR(d.l1, 0.10482, 1e-5);
  EXPECT_NEAR(d.weights[2], 0.0, 1e-12);
  EXPECT_NEAR(d.l1, oracle::min_l1(x, x.col(0) - x.col(2)), 1e-12);
}

TEST(L1Design, InfeasibleTargetThrows) {
  Matrix x(2, 2);
  x << 1, 2,
       0, 0;
  Vector y(2);
  y << 0, 1;
  EXPECT_THROW(solve_min_l1(x, y), InfeasibleDesign);
}

// Optimality against exhaustive support enumeration, 200 random systems
// with K <= 5 and N <= 3, including rank-deficient ones.
TEST(L1Design, MatchesEnumerationOnRandomSystems) {
  Rng rng = make_rng(1234);
  std::uniform_int_distribution<int> karms(2, 5), dims(1, 3);
  std::normal_distribution<double> g;
  std::bernoulli_distribution degenerate(0.2);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = karms(rng), n = dims(rng);
    Matrix x(n, k);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    if (degenerate(rng) && k >= 3) x.col(2) = 2.0 * x.col(1);  // duplicated direction
    const int i = trial % k, j = (trial + 1) % k;
    const auto d = solve_l1_design(x, i, j);
    const Vector y = x.col(i) - x.col(j);
    EXPECT_LE((x * d.weights - y).norm(), 1e-8);
    const double best = oracle::min_l1(x, y);
    worst = std::max(worst, std::abs(d.l1 - best) / std::max(1.0, best));
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(L1Design, SquareRandomSystemsDoNotStall) {
  for (std::uint64_t r = 0; r < 30; ++r) {
    const auto inst = make_random_unit_instance(20, 20, 0.25, derive_seed(42, r));
    for (int j = 1; j < 20; ++j) {
      const auto d = solve_l1_design(inst.features, 0, j);
      EXPECT_NEAR(d.l1, 2.0, 1e-8);
    }
  }
}

TEST(DesignCache, SymmetricAndThreadSafe) {
  const auto inst = make_random_unit_instance(8, 3, 0.25, 5);
  const DesignCache cache(inst.features);
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&] {
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) cache.get(i, j);
    });
  for (auto& th : pool) th.join();
  EXPECT_EQ(cache.size(), 28u);
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) {
      EXPECT_EQ(cache.get(i, j).weights, Vector(-cache.get(j, i).weights));
      EXPECT_LT((cache.get(i, j).weights - solve_l1_design(inst.features, i, j).weights).norm(), 1e-9);
    }
}

TEST(HConstant, ClassicInstanceValues) {
  const auto inst = make_classic_instance(4, 2, M_PI / 6);
  const auto g = gap_profile(inst, 2);
  const double d = 1 - std::cos(M_PI / 6);
  const auto lucb = h_constant(ComplexityKind::lucb, inst, 2, 0.0, 0.5);
  const auto ugape = h_constant(ComplexityKind::ugape, inst, 2, 0.0, 0.5);
  EXPECT_NEAR(lucb.H, 2 * (3 / (d * d) + 1), 1e-9);
  EXPECT_NEAR(lucb.H, 336.1, 0.5);
  EXPECT_NEAR(ugape.H, 8 * (3 / (d * d) + 1), 1e-9);
  EXPECT_NEAR(ugape.H, 1344.5, 1.0);
  EXPECT_NEAR(lucb.per_arm_terms.sum(), lucb.H, 1e-12);
  EXPECT_GT(g.min_gap, 0);
}

TEST(HConstant, MLinGapeOneClosedForm) {
  Rng rng = make_rng(6);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector gaps(5);
    for (int a = 0; a < 5; ++a) gaps[a] = u(rng);
    const double sigma = u(rng);
    double direct = 0;
    for (int a = 0; a < 5; ++a) direct += 36 * sigma * sigma / (gaps[a] * gaps[a]);
    EXPECT_NEAR(h_constant(ComplexityKind::m_lingape_1, gaps, 0.0, sigma).H, direct, 1e-9 * direct);
  }
}

TEST(HConstant, MLinGapeTwoOnCanonicalFeatures) {
  // w*(i,j) = e_i - e_j, so arm a collects max_{j != a} 9 / max(D_a, D_j)^2
  Vector mu(4);
  mu << 1.0, 0.8, 0.5, 0.1;
  const auto inst = make_canonical_instance(mu);
  const auto g = gap_profile(inst, 2);
  const DesignCache designs(inst.features);
  const auto r = h_constant(ComplexityKind::m_lingape_2, g.gaps, 0.0, 1.0, &designs);
  for (int a = 0; a < 4; ++a) {
    double best = 0;
    for (int j = 0; j < 4; ++j)
      if (j != a) best = std::max(best, 9 / std::pow(std::max(g.gaps[a], g.gaps[j]), 2));
    EXPECT_NEAR(r.per_arm_terms[a], best, 1e-9);
  }
  EXPECT_THROW(h_constant(ComplexityKind::m_lingape_2, g.gaps, 0.0, 1.0), ContractViolation);
}

TEST(HConstant, ScaleAndEpsilonLimits) {
  const auto inst = make_classic_instance(5, 2, 0.4);
  const auto g = gap_profile(inst, 2);
  const DesignCache designs(inst.features);
  for (auto kind : {ComplexityKind::lucb, ComplexityKind::ugape, ComplexityKind::m_lingape_1,
                    ComplexityKind::m_lingape_2}) {
    const double h = h_constant(kind, g.gaps, 0.0, 0.5, &designs).H;
    const double h3 = h_constant(kind, Vector(3.0 * g.gaps), 0.0, 0.5, &designs).H;
    EXPECT_NEAR(h3, h / 9.0, 1e-9 * h) << to_string(kind);
    EXPECT_LT(h_constant(kind, g.gaps, 1e8, 0.5, &designs).H, 1e-10);
  }
  Vector zero = g.gaps;
  zero[3] = 0.0;
  EXPECT_THROW(h_constant(ComplexityKind::lucb, zero, 0.0, 0.5), ContractViolation);
  EXPECT_NO_THROW(h_constant(ComplexityKind::lucb, zero, 0.1, 0.5));
}

TEST(Bound, TrivialAndScanOracle) {
  EXPECT_EQ(sample_complexity_bound(0.0, heuristic(0.05), 0.0), 2u);
  EXPECT_EQ(sample_complexity_bound(0.0, heuristic(0.05), 4.0), 6u);
  const auto spec = heuristic(0.05);
  const auto u = sample_complexity_bound(100.0, spec, 0.0);
  EXPECT_EQ(u, oracle::scan_bound(100.0, [&](double t) { return threshold(spec, t); }, 0.0));
  EXPECT_NEAR(static_cast<double>(u), 1015.0, 1.0);
}

TEST(Bound, RandomAgainstScan) {
  Rng rng = make_rng(50);
  std::uniform_real_distribution<double> hs(0.0, 2000.0), ds(0.001, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    ThresholdSpec spec;
    spec.kind = trial % 3 == 0 ? ThresholdKind::theoretical : trial % 3 == 1 ? ThresholdKind::heuristic
                                                                             : ThresholdKind::classical;
    spec.delta = ds(rng);
    spec.dim = 3;
    spec.feature_bound = 1.5;
    spec.param_bound = 1.0;
    spec.lambda = 0.025;
    spec.sigma = 0.5;
    spec.arms = 4;
    const double h = hs(rng);
    const double init = trial % 2 ? 4.0 : 0.0;
    EXPECT_EQ(sample_complexity_bound(h, spec, init),
              oracle::scan_bound(h, [&](double t) { return threshold(spec, t); }, init));
  }
}

TEST(Bound, MonotoneInDeltaAndH) {
  std::uint64_t prev = 0;
  for (double h : {1.0, 10.0, 100.0, 1000.0}) {
    const auto u = sample_complexity_bound(h, heuristic(0.05), 0);
    EXPECT_GE(u, prev);
    prev = u;
  }
  prev = ~std::uint64_t{0};
  for (double d : {0.001, 0.01, 0.1, 0.5}) {
    const auto u = sample_complexity_bound(500.0, heuristic(d), 0);
    EXPECT_LE(u, prev);
    prev = u;
  }
}

TEST(FractionExperiment, SingleRepAndFullRank) {
  const auto one = complexity_fraction_experiment(6, 3, 0.25, 1, 9);
  EXPECT_TRUE(one.fraction == 0.0 || one.fraction == 1.0);
  EXPECT_EQ(one.m, 3);
  // N >= K: w*(i,j) = e_i - e_j and the ratio is exactly 9/8 at sigma = 1
  const auto full = complexity_fraction_experiment(6, 6, 0.25, 20, 9);
  EXPECT_EQ(full.fraction, 0.0);
  EXPECT_EQ(full.evaluated, 20);
  const auto half = complexity_fraction_experiment(6, 6, 0.25, 20, 9, 0.5);
  EXPECT_EQ(half.fraction, 1.0);
}
