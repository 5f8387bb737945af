#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "topm/complexity.hpp"
#include "topm/errors.hpp"
#include "topm/estimator.hpp"
#include "topm/indices.hpp"
#include "topm/instances.hpp"
#include "topm/random.hpp"
#include "topm/ranking.hpp"

namespace topm {

enum class JRule { top_m_empirical, min_max_index };
enum class BRule { max_over_outside, max_over_mth };
enum class Selection { largest_variance, greedy, optimized, both_arms };
enum class StoppingRule { lucb, ugape };

/// How the algorithm sees the arms. `canonical` ignores the instance
/// features and runs on X = I_K (classical bandit algorithms).
enum class FeatureModel { linear, canonical };

inline std::string to_string(JRule r) { return r == JRule::top_m_empirical ? "top-m-empirical" : "min-max-index"; }
inline std::string to_string(BRule r) { return r == BRule::max_over_outside ? "max-over-outside" : "max-over-mth"; }
inline std::string to_string(StoppingRule r) { return r == StoppingRule::lucb ? "lucb" : "ugape"; }
inline std::string to_string(FeatureModel f) { return f == FeatureModel::linear ? "linear" : "canonical"; }
inline std::string to_string(Selection s) {
  switch (s) {
    case Selection::largest_variance: return "largest-variance";
    case Selection::greedy: return "greedy";
    case Selection::optimized: return "optimized";
    case Selection::both_arms: return "both-arms";
  }
  return "?";
}

inline JRule parse_j_rule(const std::string& s) {
  if (s == "top-m-empirical") return JRule::top_m_empirical;
  if (s == "min-max-index") return JRule::min_max_index;
  throw ContractViolation("unknown J rule '" + s + "'");
}
inline BRule parse_b_rule(const std::string& s) {
  if (s == "max-over-outside") return BRule::max_over_outside;
  if (s == "max-over-mth") return BRule::max_over_mth;
  throw ContractViolation("unknown b rule '" + s + "'");
}
inline Selection parse_selection(const std::string& s) {
  if (s == "largest-variance") return Selection::largest_variance;
  if (s == "greedy") return Selection::greedy;
  if (s == "optimized") return Selection::optimized;
  if (s == "both-arms") return Selection::both_arms;
  throw ContractViolation("unknown selection rule '" + s + "'");
}
inline StoppingRule parse_stopping(const std::string& s) {
  if (s == "lucb") return StoppingRule::lucb;
  if (s == "ugape") return StoppingRule::ugape;
  throw ContractViolation("unknown stopping rule '" + s + "'");
}
inline FeatureModel parse_feature_model(const std::string& s) {
  if (s == "linear") return FeatureModel::linear;
  if (s == "canonical") return FeatureModel::canonical;
  throw ContractViolation("unknown feature model '" + s + "'");
}

struct AlgorithmSpec {
  std::string name = "custom";
  JRule j_rule = JRule::top_m_empirical;
  BRule b_rule = BRule::max_over_outside;
  Selection selection = Selection::largest_variance;
  StoppingRule stopping = StoppingRule::lucb;
  IndexKind index = IndexKind::paired;
  FeatureModel features = FeatureModel::linear;
  bool init_pass = false;
  bool single_target = false;           // preset defined for m = 1 only
  bool optimized_argmax = false;  // argmax over w*_a > 0 instead of argmin

  std::string describe() const {
    return name + " (J=" + to_string(j_rule) + ", b=" + to_string(b_rule) + ", select=" + to_string(selection) +
           ", stop=" + to_string(stopping) + ", index=" + to_string(index) + ", features=" + to_string(features) + ")";
  }
};

inline std::vector<std::string> preset_names() { return {"lucb", "ugape", "lingape", "m-lingape", "lingifa"}; }

inline AlgorithmSpec preset(const std::string& name) {
  AlgorithmSpec s;
  s.name = name;
  if (name == "lucb") {
    s.index = IndexKind::individual;
    s.features = FeatureModel::canonical;
  } else if (name == "ugape") {
    s.j_rule = JRule::min_max_index;
    s.stopping = StoppingRule::ugape;
    s.index = IndexKind::individual;
    s.features = FeatureModel::canonical;
  } else if (name == "lingape") {
    s.selection = Selection::greedy;
    s.single_target = true;
  } else if (name == "m-lingape") {
    s.selection = Selection::greedy;
  } else if (name == "lingifa") {
    s.j_rule = JRule::min_max_index;
    s.b_rule = BRule::max_over_mth;
    s.stopping = StoppingRule::ugape;
  } else {
    throw ContractViolation("unknown algorithm '" + name + "'");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Rule slots. `b` is an index matrix with b(i, j) = B_{i,j}.

namespace engine_detail {

inline std::span<const double> column(const Matrix& b, int j) {
  return {b.data() + static_cast<Eigen::Index>(j) * b.rows(), static_cast<std::size_t>(b.rows())};
}

}  // namespace engine_detail

/// m-th largest of {B_{i,j} : i != j}.
inline double mth_index(const Matrix& b, int j, int m) {
  return mth_largest_excluding(engine_detail::column(b, j), m, j);
}

inline std::vector<int> compute_Jt(JRule rule, const Vector& means, const Matrix& b, int m, const TieBreaker& tb) {
  const int k = static_cast<int>(means.size());
  require(b.rows() == k && b.cols() == k, "compute_Jt: index matrix must be K x K");
  require(m >= 1 && m < k, "compute_Jt: m must be in [1, K-1]");
  if (rule == JRule::top_m_empirical) return top_m({means.data(), static_cast<std::size_t>(k)}, m, tb);
  std::vector<double> score(k);
  for (int j = 0; j < k; ++j) score[j] = mth_index(b, j, m);
  return bottom_m(score, m, tb);
}

inline int compute_bt(BRule rule, std::span<const int> J, const Matrix& b, int m, const TieBreaker& tb) {
  const int k = static_cast<int>(b.rows());
  const std::vector<int> outside = complement(J, k);
  require(!outside.empty() && !J.empty(), "compute_bt: J must be a proper non-empty subset");
  std::vector<double> score(k, 0.0);
  for (int j : J) {
    if (rule == BRule::max_over_outside) {
      double best = -std::numeric_limits<double>::infinity();
      for (int i : outside) best = std::max(best, b(i, j));
      score[j] = best;
    } else {
      score[j] = mth_index(b, j, m);
    }
  }
  return argmax_over(J, score, tb);
}

inline int compute_ct(std::span<const int> J, int bt, const Matrix& b, const TieBreaker& tb) {
  const int k = static_cast<int>(b.rows());
  const std::vector<int> outside = complement(J, k);
  require(!outside.empty(), "compute_ct: empty complement of J");
  std::vector<double> score(k, 0.0);
  for (int a : outside) score[a] = b(a, bt);
  return argmax_over(outside, score, tb);
}

inline double stopping_stat(StoppingRule rule, std::span<const int> J, int bt, int ct, const Matrix& b, int m) {
  if (rule == StoppingRule::lucb) return b(ct, bt);
  double worst = -std::numeric_limits<double>::infinity();
  for (int j : J) worst = std::max(worst, mth_index(b, j, m));
  return worst;
}

struct SelectionContext {
  const Estimator* estimator = nullptr;
  const DesignCache* designs = nullptr;  // optimized rule only
  const TieBreaker* tie_break = nullptr;
  bool optimized_argmax = false;
};

/// Arms to pull this round (two for both-arms). Sets `fell_back` when the
/// optimized rule had to use greedy.
inline std::vector<int> select_arm(Selection rule, int bt, int ct, const SelectionContext& ctx,
                                   bool* fell_back = nullptr) {
  require(bt != ct, "select_arm: b and c must differ");
  const Estimator& est = *ctx.estimator;
  const TieBreaker& tb = *ctx.tie_break;
  const int k = est.arms();
  const auto greedy = [&] {
    const Vector diff = est.features().col(bt) - est.features().col(ct);
    std::vector<double> after(k);
    for (int a = 0; a < k; ++a) after[a] = est.design().quad_form_after_update(diff, est.features().col(a));
    return argmin_over(all_arms(k), after, tb);
  };
  switch (rule) {
    case Selection::largest_variance: {
      std::vector<double> width(k, 0.0);
      width[bt] = est.deviation_of_arm(bt);
      width[ct] = est.deviation_of_arm(ct);
      const int pair[2] = {bt, ct};
      return {argmax_over(pair, width, tb)};
    }
    case Selection::greedy:
      return {greedy()};
    case Selection::optimized: {
      require(ctx.designs != nullptr, "select_arm: optimized rule needs a design cache");
      DesignWeights w;
      try {
        w = ctx.designs->get(bt, ct);
      } catch (const InfeasibleDesign&) {
        if (fell_back) *fell_back = true;
        return {greedy()};
      }
      std::vector<int> support;
      std::vector<double> score(k, 0.0);
      for (int a = 0; a < k; ++a) {
        const double wa = w.weights[a];
        if (ctx.optimized_argmax ? wa > 1e-12 : std::abs(wa) > 1e-12) {
          support.push_back(a);
          score[a] = static_cast<double>(est.count(a)) * w.l1 / std::abs(wa);
        }
      }
      if (support.empty()) {
        if (fell_back) *fell_back = true;
        return {greedy()};
      }
      return {ctx.optimized_argmax ? argmax_over(support, score, tb) : argmin_over(support, score, tb)};
    }
    case Selection::both_arms:
      return {bt, ct};
  }
  return {};
}

// ---------------------------------------------------------------------------

struct TrialConfig {
  int m = 1;
  double epsilon = 0.0;
  double delta = 0.05;
  std::uint64_t seed = 0;
  long max_rounds = 10'000'000;
  ThresholdKind threshold = ThresholdKind::heuristic;
  std::optional<double> lambda;  // default sigma / 20
  std::optional<double> sigma;   // algorithm noise scale, default instance sigma
  double threshold_scale = 1.0;  // multiplies C(delta, t); 1 outside of diagnostics
  bool trace = false;
  bool keep_matrices = false;
  const DesignCache* designs = nullptr;  // shared across trials; built per trial when null
};

struct RoundRecord {
  long t = 0;
  std::vector<int> J;
  int b = 0;
  int c = 0;
  std::vector<int> pulled;
  double stat = 0.0;
  std::uint64_t matrix_hash = 0;
  Matrix index;  // only with keep_matrices
};

struct RunResult {
  std::uint64_t seed = 0;
  long tau = 0;
  std::vector<int> recommendation;
  bool correct = false;
  bool truncated = false;
  std::optional<bool> event_E_held;       // all pairs, all logged rounds
  std::optional<bool> event_gifa_held;    // top-m vs rest pairs only
  long design_fallbacks = 0;
  std::vector<RoundRecord> trace;
};

inline std::uint64_t hash_matrix(const Matrix& b) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index n = 0; n < b.size(); ++n) {
    std::uint64_t bits = 0;
    const double v = b.data()[n];
    std::memcpy(&bits, &v, sizeof bits);
    h = (h ^ bits) * 0x100000001b3ULL;
  }
  return h;
}

/// Feature matrix the algorithm works with.
inline Matrix algorithm_features(const AlgorithmSpec& spec, const Instance& inst) {
  if (spec.features == FeatureModel::canonical) return Matrix::Identity(inst.arms(), inst.arms());
  return inst.features;
}

/// Threshold parameters for one algorithm on one instance.
inline ThresholdSpec make_threshold_spec(const AlgorithmSpec& spec, const Instance& inst, const TrialConfig& cfg,
                                         double lambda, double sigma) {
  ThresholdSpec t;
  t.kind = cfg.threshold;
  t.delta = cfg.delta;
  t.arms = inst.arms();
  t.lambda = lambda;
  t.sigma = sigma;
  if (spec.features == FeatureModel::canonical) {
    t.dim = inst.arms();
    t.feature_bound = 1.0;
    t.param_bound = inst.means.norm();
  } else {
    t.dim = inst.dim();
    t.feature_bound = inst.feature_bound;
    if (inst.param_bound) {
      t.param_bound = *inst.param_bound;
    } else if (inst.theta) {
      t.param_bound = inst.theta->norm();
    } else if (cfg.threshold == ThresholdKind::theoretical) {
      throw ContractViolation("theoretical threshold needs a parameter bound S for this instance");
    }
  }
  return t;
}

inline double resolve_sigma(const Instance& inst, const TrialConfig& cfg) {
  const double s = cfg.sigma.value_or(inst.sigma);
  require(s > 0.0, "algorithm sigma must be positive; pass an explicit value for noiseless instances");
  return s;
}

inline double resolve_lambda(const Instance& inst, const TrialConfig& cfg) {
  return cfg.lambda.value_or(resolve_sigma(inst, cfg) / 20.0);
}

inline RunResult run_trial(const AlgorithmSpec& spec, const Instance& inst, const TrialConfig& cfg) {
  const int k = inst.arms();
  const int m = cfg.m;
  require(m >= 1 && m < k, "run_trial: m must be in [1, K-1]");
  require(!spec.single_target || m == 1, "run_trial: " + spec.name + " is defined for m = 1 only");
  require(cfg.epsilon >= 0.0, "run_trial: epsilon must be non-negative");
  require(cfg.delta > 0.0 && cfg.delta < 1.0, "run_trial: delta must be in (0, 1)");
  require(cfg.max_rounds >= k, "run_trial: max_rounds must be >= K");
  const GapProfile truth = gap_profile(inst, m);
  require(truth.min_gap > 0.0 || cfg.epsilon > 0.0, "run_trial: tied m-th and (m+1)-th means need epsilon > 0");

  const double sigma = resolve_sigma(inst, cfg);
  const double lambda = resolve_lambda(inst, cfg);
  Estimator est(algorithm_features(spec, inst), lambda, sigma);
  const bool init = spec.init_pass || lambda == 0.0;
  IndexConfig icfg{spec.index, make_threshold_spec(spec, inst, cfg, lambda, sigma)};
  icfg.threshold.validate();

  std::optional<DesignCache> own_designs;
  const DesignCache* designs = cfg.designs;
  if (spec.selection == Selection::optimized && designs == nullptr) {
    own_designs.emplace(est.features());
    designs = &*own_designs;
  }
  require(designs == nullptr || designs->features().cols() == k, "run_trial: design cache has wrong arm count");

  Rng rng = make_rng(cfg.seed);
  const TieBreaker tb(k, rng);
  const SelectionContext ctx{&est, designs, &tb, spec.optimized_argmax};

  RunResult res;
  res.seed = cfg.seed;
  long samples = 0;
  const auto pull = [&](int a) {
    est.update(a, sample_reward(inst, a, rng));
    ++samples;
  };
  if (init)
    for (int a = 0; a < k; ++a) pull(a);

  bool event_all = true;
  bool event_gifa = true;
  const std::vector<int> outside_truth = complement(truth.true_top_m, k);
  std::vector<int> J;
  while (true) {
    const double t = static_cast<double>(samples + 1);
    IndexMatrix im = index_matrix(est, icfg, t);
    if (cfg.threshold_scale != 1.0) {
      im.width *= cfg.threshold_scale;
      im.arm_width *= cfg.threshold_scale;
      const Vector& mu = est.means();
      im.index = im.width;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) im.index(i, j) += mu[i] - mu[j];
    }
    const Matrix& b = im.index;
    J = compute_Jt(spec.j_rule, est.means(), b, m, tb);
    const int bt = compute_bt(spec.b_rule, J, b, m, tb);
    const int ct = compute_ct(J, bt, b, tb);
    const double stat = stopping_stat(spec.stopping, J, bt, ct, b, m);

    if (cfg.trace) {
      for (int i = 0; i < k && event_all; ++i)
        for (int j = 0; j < k; ++j)
          if (i != j && inst.means[i] - inst.means[j] > b(i, j)) {
            event_all = false;
            break;
          }
      for (int i : truth.true_top_m)
        for (int j : outside_truth)
          if (inst.means[i] - inst.means[j] > b(i, j)) event_gifa = false;
    }

    const bool stop = stat <= cfg.epsilon;
    const bool out_of_budget = !stop && samples >= cfg.max_rounds;
    std::vector<int> chosen;
    if (!stop && !out_of_budget) {
      bool fell_back = false;
      chosen = select_arm(spec.selection, bt, ct, ctx, &fell_back);
      if (fell_back) ++res.design_fallbacks;
    }
    if (cfg.trace) {
      RoundRecord rec;
      rec.t = static_cast<long>(t);
      rec.J = J;
      rec.b = bt;
      rec.c = ct;
      rec.pulled = chosen;
      rec.stat = stat;
      rec.matrix_hash = hash_matrix(b);
      if (cfg.keep_matrices) rec.index = b;
      res.trace.push_back(std::move(rec));
    }
    if (stop) break;
    if (out_of_budget) {
      res.truncated = true;
      break;
    }
    for (int a : chosen) pull(a);
  }

  res.tau = samples;
  res.recommendation = J;
  if (cfg.epsilon == 0.0) {
    res.correct = J == truth.true_top_m;
  } else {
    const std::vector<int> good = truth.epsilon_optimal(inst.means, cfg.epsilon);
    res.correct = std::includes(good.begin(), good.end(), J.begin(), J.end());
  }
  if (cfg.trace) {
    res.event_E_held = event_all;
    res.event_gifa_held = event_gifa;
  }
  return res;
}

}  // namespace topm
