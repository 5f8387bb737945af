#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "topm/errors.hpp"
#include "topm/indices.hpp"
#include "topm/instances.hpp"
#include "topm/linalg.hpp"
#include "topm/simplex.hpp"

namespace topm {

/// Minimum-L1 weights w with X w = x_i - x_j.
struct DesignWeights {
  int i = 0;
  int j = 0;
  Vector weights;
  double l1 = 0.0;
};

inline DesignWeights solve_l1_design(const Matrix& features, int i, int j) {
  const int k = static_cast<int>(features.cols());
  require(i >= 0 && i < k && j >= 0 && j < k, "solve_l1_design: arm out of range");
  DesignWeights d;
  d.i = i;
  d.j = j;
  if (i == j) {
    d.weights = Vector::Zero(k);
    return d;
  }
  d.weights = solve_min_l1(features, features.col(i) - features.col(j));
  d.l1 = d.weights.lpNorm<1>();
  return d;
}

/// Lazily filled w*(i, j) table keyed by unordered pair; w*(j, i) = -w*(i, j).
/// Concurrent readers and idempotent inserts are safe.
class DesignCache {
 public:
  explicit DesignCache(Matrix features) : features_(std::move(features)) {
    const Eigen::Index k = features_.cols();
    full_column_rank_ = k <= features_.rows() && features_.colPivHouseholderQr().rank() == k;
  }

  const Matrix& features() const { return features_; }

  DesignWeights get(int i, int j) const {
    if (i == j) return solve_l1_design(features_, i, j);
    const auto key = std::minmax(i, j);
    Vector w;
    {
      std::shared_lock lock(mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) w = it->second;
    }
    if (w.size() == 0) {
      if (full_column_rank_) {
        // X w = x_i - x_j has the single solution e_i - e_j
        w = Vector::Zero(features_.cols());
        w[key.first] = 1.0;
        w[key.second] = -1.0;
      } else {
        w = solve_l1_design(features_, key.first, key.second).weights;
      }
      std::unique_lock lock(mutex_);
      w = cache_.try_emplace(key, w).first->second;
    }
    DesignWeights d;
    d.i = i;
    d.j = j;
    d.weights = i == key.first ? w : Vector(-w);
    d.l1 = w.lpNorm<1>();
    return d;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
  }

 private:
  Matrix features_;
  bool full_column_rank_ = false;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::pair<int, int>, Vector> cache_;
};

enum class ComplexityKind { lucb, ugape, m_lingape_1, m_lingape_2 };

inline std::string to_string(ComplexityKind k) {
  switch (k) {
    case ComplexityKind::lucb: return "lucb";
    case ComplexityKind::ugape: return "ugape";
    case ComplexityKind::m_lingape_1: return "m-lingape-1";
    case ComplexityKind::m_lingape_2: return "m-lingape-2";
  }
  return "?";
}

inline ComplexityKind parse_complexity_kind(const std::string& s) {
  if (s == "lucb") return ComplexityKind::lucb;
  if (s == "ugape") return ComplexityKind::ugape;
  if (s == "m-lingape-1") return ComplexityKind::m_lingape_1;
  if (s == "m-lingape-2") return ComplexityKind::m_lingape_2;
  throw ContractViolation("unknown complexity kind '" + s + "'");
}

struct ComplexityReport {
  ComplexityKind kind = ComplexityKind::lucb;
  double H = 0.0;
  Vector per_arm_terms;
};

namespace complexity_detail {

inline double checked_inverse_square(double denom, int arm) {
  if (!(denom > 0.0))
    throw ContractViolation("h_constant: zero gap with epsilon = 0 at arm " + std::to_string(arm));
  return 1.0 / (denom * denom);
}

}  // namespace complexity_detail

/// Complexity constants of the sample-complexity upper bounds:
///   lucb:        2 sum_a max(eps/2, D_a)^-2
///   ugape:       2 sum_a max(eps, (eps + D_a)/2)^-2
///   m-lingape-1: 4 s^2 sum_a max(eps, (eps + D_a)/3)^-2
///   m-lingape-2: s^2 sum_a max_{i != j} |w*_a(i,j)| / max(eps, (eps + D_i)/3, (eps + D_j)/3)^2
/// The classical rows carry no sigma factor.
inline ComplexityReport h_constant(ComplexityKind kind, const Vector& gaps, double epsilon, double sigma,
                                   const DesignCache* designs = nullptr) {
  using complexity_detail::checked_inverse_square;
  require(epsilon >= 0.0, "h_constant: epsilon must be non-negative");
  const int k = static_cast<int>(gaps.size());
  ComplexityReport r;
  r.kind = kind;
  r.per_arm_terms = Vector::Zero(k);
  const double s2 = sigma * sigma;
  switch (kind) {
    case ComplexityKind::lucb:
      for (int a = 0; a < k; ++a)
        r.per_arm_terms[a] = 2.0 * checked_inverse_square(std::max(epsilon / 2.0, gaps[a]), a);
      break;
    case ComplexityKind::ugape:
      for (int a = 0; a < k; ++a)
        r.per_arm_terms[a] = 2.0 * checked_inverse_square(std::max(epsilon, (epsilon + gaps[a]) / 2.0), a);
      break;
    case ComplexityKind::m_lingape_1:
      for (int a = 0; a < k; ++a)
        r.per_arm_terms[a] = 4.0 * s2 * checked_inverse_square(std::max(epsilon, (epsilon + gaps[a]) / 3.0), a);
      break;
    case ComplexityKind::m_lingape_2: {
      require(designs != nullptr, "h_constant: m-lingape-2 needs the arm features");
      require(designs->features().cols() == k, "h_constant: feature matrix has wrong arm count");
      Vector inv(k);
      for (int a = 0; a < k; ++a) inv[a] = std::max(epsilon, (epsilon + gaps[a]) / 3.0);
      for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
          const double weight = checked_inverse_square(std::max(inv[i], inv[j]), inv[i] > inv[j] ? j : i);
          const Vector w = designs->get(i, j).weights;  // |w(j,i)| = |w(i,j)|
          for (int a = 0; a < k; ++a)
            r.per_arm_terms[a] = std::max(r.per_arm_terms[a], std::abs(w[a]) * weight);
        }
      }
      r.per_arm_terms *= s2;
      break;
    }
  }
  r.H = r.per_arm_terms.sum();
  return r;
}

inline ComplexityReport h_constant(ComplexityKind kind, const Instance& inst, int m, double epsilon, double sigma) {
  const GapProfile g = gap_profile(inst, m);
  if (kind == ComplexityKind::m_lingape_2) {
    const DesignCache designs(inst.features);
    return h_constant(kind, g.gaps, epsilon, sigma, &designs);
  }
  return h_constant(kind, g.gaps, epsilon, sigma);
}

/// Smallest integer u with u > 1 + H C(delta, u)^2 + init_term. The right
/// side is concave in u, so the feasible set is an up-set and
/// doubling followed by bisection finds its left end.
inline std::uint64_t sample_complexity_bound(double h, const ThresholdSpec& spec, double init_term = 0.0) {
  require(h >= 0.0 && init_term >= 0.0, "sample_complexity_bound: H and init_term must be non-negative");
  spec.validate();
  auto crosses = [&](std::uint64_t u) {
    const double c = threshold(spec, static_cast<double>(u));
    return static_cast<double>(u) > 1.0 + h * c * c + init_term;
  };
  std::uint64_t hi = 1;
  while (!crosses(hi)) {
    if (hi >= (std::uint64_t{1} << 62)) throw OverflowError("sample_complexity_bound: no crossing below 2^63");
    hi *= 2;
  }
  std::uint64_t lo = hi / 2;  // crosses(lo) is false, or lo == 0
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (crosses(mid) ? hi : lo) = mid;
  }
  return hi;
}

struct FractionResult {
  int arms = 0;
  int dim = 0;
  double variance = 0.0;
  int m = 0;
  double fraction = 0.0;  // over non-skipped instances
  int favourable = 0;
  int evaluated = 0;
  int skipped = 0;
};

/// Set size used by the random-instance comparison.
inline int comparison_set_size(int k) { return k / 3 + 1; }

/// Fraction of random unit-feature instances (theta = e_1, epsilon = 0) where
/// H[m-LinGapE(2)] <= H[UGapE]. Instance r uses seed derive_seed(seed, r).
inline FractionResult complexity_fraction_experiment(int k, int n, double variance, int reps, std::uint64_t seed,
                                                     double sigma = 1.0) {
  require(reps >= 1, "complexity_fraction_experiment: reps must be >= 1");
  FractionResult out;
  out.arms = k;
  out.dim = n;
  out.variance = variance;
  out.m = comparison_set_size(k);
  require(out.m < k, "complexity_fraction_experiment: K too small");
  for (int r = 0; r < reps; ++r) {
    const Instance inst = make_random_unit_instance(k, n, variance, derive_seed(seed, static_cast<std::uint64_t>(r)));
    try {
      const GapProfile g = gap_profile(inst, out.m);
      const DesignCache designs(inst.features);
      const double h2 = h_constant(ComplexityKind::m_lingape_2, g.gaps, 0.0, sigma, &designs).H;
      const double hu = h_constant(ComplexityKind::ugape, g.gaps, 0.0, sigma).H;
      ++out.evaluated;
      if (h2 <= hu) ++out.favourable;
    } catch (const InfeasibleDesign&) {
      ++out.skipped;
    } catch (const ContractViolation&) {
      ++out.skipped;
    }
  }
  out.fraction = out.evaluated > 0 ? static_cast<double>(out.favourable) / out.evaluated : 0.0;
  return out;
}

}  // namespace topm
