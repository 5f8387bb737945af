#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "topm/errors.hpp"
#include "topm/random.hpp"

namespace topm {

/// Arm priority used to break exact ties: among equal values the arm with
/// the lower rank wins. Ranks are a random permutation drawn once per trial.
class TieBreaker {
 public:
  TieBreaker() = default;

  /// Identity order (lowest arm index wins).
  explicit TieBreaker(int arms) : rank_(arms) { std::iota(rank_.begin(), rank_.end(), 0); }

  TieBreaker(int arms, Rng& rng) : TieBreaker(arms) {
    std::vector<int> order(rank_);
    std::shuffle(order.begin(), order.end(), rng);
    for (int r = 0; r < arms; ++r) rank_[order[r]] = r;
  }

  int arms() const { return static_cast<int>(rank_.size()); }
  int rank(int arm) const { return rank_[arm]; }

  /// True if arm `a` with value `va` sorts before `b` with value `vb` in
  /// descending order.
  bool before_desc(int a, double va, int b, double vb) const {
    if (va != vb) return va > vb;
    return rank_[a] < rank_[b];
  }
  bool before_asc(int a, double va, int b, double vb) const {
    if (va != vb) return va < vb;
    return rank_[a] < rank_[b];
  }

 private:
  std::vector<int> rank_;
};

/// Arms of `candidates` ordered by decreasing value.
inline std::vector<int> sort_desc(std::span<const double> values, std::vector<int> candidates,
                                  const TieBreaker& tb) {
  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return tb.before_desc(a, values[a], b, values[b]);
  });
  return candidates;
}

inline std::vector<int> all_arms(int k) {
  std::vector<int> arms(k);
  std::iota(arms.begin(), arms.end(), 0);
  return arms;
}

/// The m arms with the largest values, sorted by arm id.
inline std::vector<int> top_m(std::span<const double> values, int m, const TieBreaker& tb) {
  const int k = static_cast<int>(values.size());
  require(m >= 1 && m <= k, "top_m: m out of range");
  std::vector<int> order = sort_desc(values, all_arms(k), tb);
  order.resize(m);
  std::sort(order.begin(), order.end());
  return order;
}

/// The m arms with the smallest values, sorted by arm id.
inline std::vector<int> bottom_m(std::span<const double> values, int m, const TieBreaker& tb) {
  const int k = static_cast<int>(values.size());
  require(m >= 1 && m <= k, "bottom_m: m out of range");
  std::vector<int> order = all_arms(k);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return tb.before_asc(a, values[a], b, values[b]); });
  order.resize(m);
  std::sort(order.begin(), order.end());
  return order;
}

/// argmax over `candidates` (non-empty).
inline int argmax_over(std::span<const int> candidates, std::span<const double> values,
                       const TieBreaker& tb) {
  require(!candidates.empty(), "argmax_over: empty candidate set");
  int best = candidates[0];
  for (int a : candidates.subspan(1))
    if (tb.before_desc(a, values[a], best, values[best])) best = a;
  return best;
}

inline int argmin_over(std::span<const int> candidates, std::span<const double> values,
                       const TieBreaker& tb) {
  require(!candidates.empty(), "argmin_over: empty candidate set");
  int best = candidates[0];
  for (int a : candidates.subspan(1))
    if (tb.before_asc(a, values[a], best, values[best])) best = a;
  return best;
}

/// m-th largest entry of `values`, skipping index `skip` (1-based m).
inline double mth_largest_excluding(std::span<const double> values, int m, int skip) {
  std::vector<double> rest;
  rest.reserve(values.size());
  for (int i = 0; i < static_cast<int>(values.size()); ++i)
    if (i != skip) rest.push_back(values[i]);
  require(m >= 1 && m <= static_cast<int>(rest.size()), "mth_largest: m out of range");
  std::nth_element(rest.begin(), rest.begin() + (m - 1), rest.end(), std::greater<>());
  return rest[m - 1];
}

/// Complement of a sorted arm set within [0, k).
inline std::vector<int> complement(std::span<const int> set, int k) {
  std::vector<int> out;
  out.reserve(k);
  for (int a = 0; a < k; ++a)
    if (!std::binary_search(set.begin(), set.end(), a)) out.push_back(a);
  return out;
}

}  // namespace topm
