#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "topm/errors.hpp"
#include "topm/linalg.hpp"
#include "topm/random.hpp"
#include "topm/ranking.hpp"

namespace topm {

enum class RewardLaw { gaussian_linear, empirical_table };

inline std::string to_string(RewardLaw law) {
  return law == RewardLaw::gaussian_linear ? "gaussian-linear" : "empirical-table";
}

inline RewardLaw parse_reward_law(const std::string& s) {
  if (s == "gaussian-linear") return RewardLaw::gaussian_linear;
  if (s == "empirical-table") return RewardLaw::empirical_table;
  throw ParseError("unknown reward law '" + s + "'");
}

/// Ground truth of a bandit problem. Arm a is column a of `features`; arm
/// ids are never reordered, the sorted view lives in GapProfile.
struct Instance {
  Matrix features;                    // N x K
  Vector means;                       // K
  std::optional<Vector> theta;        // N, when the model is linear with known parameter
  double sigma = 0.5;                 // noise scale of the reward law (0 = noiseless)
  double feature_bound = 0.0;         // L = max_a ||x_a||
  std::optional<double> param_bound;  // S >= ||theta||
  RewardLaw reward_law = RewardLaw::gaussian_linear;
  std::vector<std::vector<double>> reward_table;  // per arm, empirical-table law only

  int arms() const { return static_cast<int>(features.cols()); }
  int dim() const { return static_cast<int>(features.rows()); }
  Vector feature(int arm) const { return features.col(arm); }

  void validate() const {
    require(arms() >= 2, "Instance: need at least two arms");
    require(dim() >= 1, "Instance: feature dimension must be positive");
    require(means.size() == arms(), "Instance: mean vector length differs from K");
    require(sigma >= 0.0 && std::isfinite(sigma), "Instance: sigma must be non-negative");
    for (int a = 0; a < arms(); ++a)
      require(features.col(a).norm() <= feature_bound + 1e-12,
              "Instance: feature norm exceeds feature_bound");
    if (theta) require(theta->size() == dim(), "Instance: theta length differs from N");
    if (theta && reward_law == RewardLaw::gaussian_linear) {
      require((features.transpose() * *theta - means).cwiseAbs().maxCoeff() <= 1e-12,
              "Instance: means inconsistent with theta");
    }
    if (reward_law == RewardLaw::empirical_table) {
      require(static_cast<int>(reward_table.size()) == arms(),
              "Instance: reward table must have one row set per arm");
    }
  }
};

inline double max_column_norm(const Matrix& x) {
  double l = 0.0;
  for (Eigen::Index a = 0; a < x.cols(); ++a) l = std::max(l, x.col(a).norm());
  return l;
}

/// Linear instance with known parameter: means = X^T theta.
inline Instance make_linear_instance(Matrix features, Vector theta, double sigma) {
  Instance inst;
  inst.means = features.transpose() * theta;
  inst.feature_bound = max_column_norm(features);
  inst.param_bound = theta.norm();
  inst.features = std::move(features);
  inst.theta = std::move(theta);
  inst.sigma = sigma;
  inst.validate();
  return inst;
}

/// Hard instance: a near-duplicate of the m-th best arm sits at angle omega.
/// Arm 0 is e_1 (not e_1 + e_1) so that mu_m - mu_{m+1} = 1 - cos(omega).
inline Instance make_classic_instance(int k, int m, double omega, double sigma = 0.5) {
  require(k >= 3, "classic instance: K must be >= 3");
  require(m >= 1 && m <= k - 2, "classic instance: m must be in [1, K-2]");
  require(omega > 0.0 && omega <= std::numbers::pi / 2,
          "classic instance: omega must be in (0, pi/2]");
  const int n = k - 1;
  Matrix x = Matrix::Zero(n, k);
  x(0, 0) = 1.0;
  for (int a = 1; a < m; ++a) {
    x(0, a) = 1.0;
    x(a, a) = 1.0;
  }
  x(0, m) = std::cos(omega);
  x(m, m) = std::sin(omega);
  for (int a = m + 1; a < k; ++a) x(a - 1, a) = 1.0;
  Vector theta = Vector::Unit(n, 0);
  return make_linear_instance(std::move(x), std::move(theta), sigma);
}

/// Gaussian(0, variance) features, columns normalized to unit norm, theta = e_1.
inline Instance make_random_unit_instance(int k, int n, double variance, std::uint64_t seed,
                                          double sigma = 0.5) {
  require(k >= 2 && n >= 1, "random instance: need K >= 2 and N >= 1");
  require(variance > 0.0, "random instance: variance must be positive");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(variance));
  Matrix x(n, k);
  for (int a = 0; a < k; ++a) {
    for (int i = 0; i < n; ++i) x(i, a) = gauss(rng);
    const double norm = x.col(a).norm();
    require(norm > 0.0, "random instance: zero column drawn");
    x.col(a) /= norm;
  }
  return make_linear_instance(std::move(x), Vector::Unit(n, 0), sigma);
}

/// Classical bandit embedded in the linear model: X = I_K, theta = mu.
inline Instance make_canonical_instance(const Vector& mu, double sigma = 0.5) {
  require(mu.size() >= 2, "canonical instance: need at least two arms");
  const auto k = mu.size();
  return make_linear_instance(Matrix::Identity(k, k), mu, sigma);
}

/// Table-driven instance: rewards drawn uniformly from the stored rows; the
/// declared means are the row averages.
inline Instance make_table_instance(Matrix features, std::vector<std::vector<double>> table,
                                    double sigma, std::optional<double> param_bound = {}) {
  Instance inst;
  const int k = static_cast<int>(features.cols());
  require(static_cast<int>(table.size()) == k, "table instance: one row set per arm required");
  inst.means.resize(k);
  for (int a = 0; a < k; ++a) {
    if (table[a].empty()) throw ContractViolation("table instance: empty reward table for arm " + std::to_string(a));
    double s = 0.0;
    for (double r : table[a]) s += r;
    inst.means[a] = s / static_cast<double>(table[a].size());
  }
  inst.feature_bound = max_column_norm(features);
  inst.features = std::move(features);
  inst.sigma = sigma;
  inst.param_bound = param_bound;
  inst.reward_law = RewardLaw::empirical_table;
  inst.reward_table = std::move(table);
  inst.validate();
  return inst;
}

inline double sample_reward(const Instance& inst, int arm, Rng& rng) {
  require(arm >= 0 && arm < inst.arms(), "sample_reward: arm out of range");
  if (inst.reward_law == RewardLaw::empirical_table) {
    const auto& rows = inst.reward_table[arm];
    if (rows.empty()) throw ContractViolation("sample_reward: empty reward table for arm " + std::to_string(arm));
    std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
    return rows[pick(rng)];
  }
  if (inst.sigma == 0.0) return inst.means[arm];
  std::normal_distribution<double> noise(0.0, inst.sigma);
  return inst.means[arm] + noise(rng);
}

/// Sorted view of the means for a target size m.
struct GapProfile {
  int m = 0;
  std::vector<int> true_top_m;  // sorted arm ids
  Vector gaps;                  // Delta_a
  double mu_m = 0.0;            // m-th largest mean
  double mu_m1 = 0.0;           // (m+1)-th largest mean
  double min_gap = 0.0;

  /// Arms whose mean is within epsilon of the m-th best, sorted.
  std::vector<int> epsilon_optimal(const Vector& means, double epsilon) const {
    std::vector<int> out;
    for (int a = 0; a < means.size(); ++a)
      if (means[a] >= mu_m - epsilon) out.push_back(a);
    return out;
  }
};

inline GapProfile gap_profile(const Vector& means, int m) {
  const int k = static_cast<int>(means.size());
  require(m >= 1 && m < k, "gap_profile: m must be in [1, K-1]");
  std::vector<double> v(means.data(), means.data() + k);
  const TieBreaker by_index(k);
  const std::vector<int> order = sort_desc(v, all_arms(k), by_index);
  GapProfile g;
  g.m = m;
  g.mu_m = v[order[m - 1]];
  g.mu_m1 = v[order[m]];
  g.min_gap = g.mu_m - g.mu_m1;
  g.true_top_m.assign(order.begin(), order.begin() + m);
  std::sort(g.true_top_m.begin(), g.true_top_m.end());
  g.gaps.resize(k);
  for (int r = 0; r < k; ++r) {
    const int a = order[r];
    g.gaps[a] = r < m ? v[a] - g.mu_m1 : g.mu_m - v[a];
  }
  return g;
}

inline GapProfile gap_profile(const Instance& inst, int m) { return gap_profile(inst.means, m); }

}  // namespace topm
