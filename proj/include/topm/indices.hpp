#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "topm/errors.hpp"
#include "topm/estimator.hpp"
#include "topm/linalg.hpp"

namespace topm {

enum class ThresholdKind { theoretical, heuristic, classical };

inline std::string to_string(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::theoretical: return "theoretical";
    case ThresholdKind::heuristic: return "heuristic";
    case ThresholdKind::classical: return "classical";
  }
  return "?";
}

inline ThresholdKind parse_threshold_kind(const std::string& s) {
  if (s == "theoretical") return ThresholdKind::theoretical;
  if (s == "heuristic") return ThresholdKind::heuristic;
  if (s == "classical") return ThresholdKind::classical;
  throw ContractViolation("unknown threshold kind '" + s + "'");
}

/// Confidence multiplier C(delta, t). Fields beyond `kind` and `delta` are
/// read only by the kinds that need them.
struct ThresholdSpec {
  ThresholdKind kind = ThresholdKind::heuristic;
  double delta = 0.05;
  int dim = 1;                // N
  double feature_bound = 1;   // L
  double param_bound = 1;     // S
  double lambda = 1;
  double sigma = 1;
  int arms = 2;               // K, classical kind

  void validate() const {
    require(delta > 0.0 && delta <= 1.0, "ThresholdSpec: delta must be in (0, 1]");
    if (kind == ThresholdKind::theoretical) {
      require(dim >= 1 && feature_bound > 0 && param_bound >= 0 && lambda > 0 && sigma > 0,
              "ThresholdSpec: theoretical kind needs N, L, lambda, sigma > 0 and S >= 0");
    }
    if (kind == ThresholdKind::classical) require(arms >= 1, "ThresholdSpec: classical kind needs K");
  }
};

/// C(delta, t) for round t >= 1.
///   heuristic:   sqrt(2 ln((ln t + 1) / delta)), clamped at 0
///   theoretical: sqrt(2 ln(1/delta) + N ln(1 + t L^2 / (lambda N))) + sqrt(lambda) S / sigma
///   classical:   sqrt(2 beta) with beta = ln(5 K t^4 / (4 delta)), so that the
///                width C sigma / sqrt(N_a) is the LUCB1 radius for sigma = 1/2
inline double threshold(const ThresholdSpec& spec, double t) {
  if (!(t >= 1.0)) throw ContractViolation("threshold: t must be >= 1");
  switch (spec.kind) {
    case ThresholdKind::heuristic: {
      const double arg = 2.0 * std::log((std::log(t) + 1.0) / spec.delta);
      return std::sqrt(std::max(0.0, arg));
    }
    case ThresholdKind::theoretical: {
      const double n = spec.dim;
      const double l2 = spec.feature_bound * spec.feature_bound;
      const double inner = 2.0 * std::log(1.0 / spec.delta) + n * std::log1p(t * l2 / (spec.lambda * n));
      return std::sqrt(inner) + std::sqrt(spec.lambda) * spec.param_bound / spec.sigma;
    }
    case ThresholdKind::classical: {
      const double beta = std::log(5.0 * spec.arms / (4.0 * spec.delta)) + 4.0 * std::log(t);
      return std::sqrt(2.0 * std::max(0.0, beta));
    }
  }
  return 0.0;
}

enum class IndexKind { paired, individual };

inline std::string to_string(IndexKind k) { return k == IndexKind::paired ? "paired" : "individual"; }

inline IndexKind parse_index_kind(const std::string& s) {
  if (s == "paired") return IndexKind::paired;
  if (s == "individual") return IndexKind::individual;
  throw ContractViolation("unknown index kind '" + s + "'");
}

struct IndexConfig {
  IndexKind kind = IndexKind::paired;
  ThresholdSpec threshold;
};

/// B_{i,j}(t) = mu_hat_i - mu_hat_j + W_t(i,j), one entry.
inline double gap_index(const Estimator& est, int i, int j, const IndexConfig& cfg, double t) {
  const double c = threshold(cfg.threshold, t);
  double width = 0.0;
  if (cfg.kind == IndexKind::paired) {
    const Vector diff = est.features().col(i) - est.features().col(j);
    width = c * est.deviation(diff);
  } else {
    width = c * (est.deviation_of_arm(i) + est.deviation_of_arm(j));
  }
  return est.empirical_gap(i, j) + width;
}

/// All gap indices at one round. `index(i, j)` is B_{i,j}: row i is the arm
/// whose mean is bounded from above, column j the arm bounded from below.
struct IndexMatrix {
  Matrix index;         // K x K
  Matrix width;         // W_t(i, j), symmetric
  Vector arm_width;     // C * ||x_a||_{Sigma}
  double confidence = 0.0;

  int arms() const { return static_cast<int>(index.rows()); }
  double operator()(int i, int j) const { return index(i, j); }
};

inline IndexMatrix index_matrix(const Estimator& est, const IndexConfig& cfg, double t) {
  const int k = est.arms();
  const double c = threshold(cfg.threshold, t);
  const double s2 = est.sigma() * est.sigma();
  const Matrix& x = est.features();
  // Gram matrix of the features in the B^{-1} metric.
  const Matrix g = x.transpose() * (est.design().inverse() * x);
  IndexMatrix out;
  out.confidence = c;
  out.arm_width.resize(k);
  for (int a = 0; a < k; ++a) out.arm_width[a] = c * std::sqrt(s2 * std::max(0.0, g(a, a)));
  out.width.resize(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      double w = 0.0;
      if (cfg.kind == IndexKind::paired) {
        if (i != j) w = c * std::sqrt(s2 * std::max(0.0, g(i, i) + g(j, j) - 2.0 * g(i, j)));
      } else {
        w = out.arm_width[i] + out.arm_width[j];
      }
      out.width(i, j) = w;
      out.width(j, i) = w;
    }
  }
  const Vector& mu = est.means();
  out.index = out.width;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) out.index(i, j) += mu[i] - mu[j];
  return out;
}

}  // namespace topm
