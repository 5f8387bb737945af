#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "topm/engine.hpp"
#include "topm/errors.hpp"
#include "topm/instance_io.hpp"
#include "topm/instances.hpp"

namespace topm {

inline const std::vector<int>& summary_quantiles() {
  static const std::vector<int> q{5, 25, 50, 75, 95};
  return q;
}

/// Nearest-rank quantile of sorted data: the ceil(p n / 100)-th smallest value.
inline long nearest_rank(const std::vector<long>& sorted, int percent) {
  require(!sorted.empty(), "nearest_rank: empty sample");
  require(percent > 0 && percent <= 100, "nearest_rank: percent must be in (0, 100]");
  const auto n = static_cast<long>(sorted.size());
  long rank = (percent * n + 99) / 100;
  rank = std::clamp(rank, 1L, n);
  return sorted[static_cast<std::size_t>(rank - 1)];
}

struct CampaignConfig {
  AlgorithmSpec algorithm;
  TrialConfig trial;  // seed field is ignored; trial i uses derive_seed(master_seed, i)
  int runs = 1;
  std::uint64_t master_seed = 0;
  int threads = 1;

  void validate() const {
    require(runs >= 1, "CampaignConfig: runs must be >= 1");
    require(trial.delta > 0.0 && trial.delta < 1.0, "CampaignConfig: delta must be in (0, 1)");
    require(trial.epsilon >= 0.0, "CampaignConfig: epsilon must be non-negative");
    require(threads >= 1, "CampaignConfig: threads must be >= 1");
  }
};

struct RunSummary {
  std::string algorithm;
  int runs = 0;
  int errors = 0;
  double error_frequency = 0.0;
  double mean_tau = 0.0;
  std::map<int, long> tau_quantiles;
  int truncations = 0;
  int traced = 0;               // runs carrying an event-E verdict
  int event_E_violations = 0;
  int incorrect_under_E = 0;    // incorrect runs on which event E held
};

inline RunSummary summarize(const std::string& algorithm, const std::vector<RunResult>& runs) {
  RunSummary s;
  s.algorithm = algorithm;
  s.runs = static_cast<int>(runs.size());
  if (runs.empty()) return s;
  std::vector<long> taus;
  taus.reserve(runs.size());
  double sum = 0.0;
  for (const RunResult& r : runs) {
    taus.push_back(r.tau);
    sum += static_cast<double>(r.tau);
    if (!r.correct) ++s.errors;
    if (r.truncated) ++s.truncations;
    if (r.event_E_held) {
      ++s.traced;
      if (!*r.event_E_held) ++s.event_E_violations;
      if (*r.event_E_held && !r.correct) ++s.incorrect_under_E;
    }
  }
  std::sort(taus.begin(), taus.end());
  s.error_frequency = static_cast<double>(s.errors) / static_cast<double>(s.runs);
  s.mean_tau = sum / static_cast<double>(s.runs);
  for (int q : summary_quantiles()) s.tau_quantiles[q] = nearest_rank(taus, q);
  return s;
}

struct CampaignResult {
  std::vector<RunResult> runs;  // ordered by trial index
  RunSummary summary;
};

/// Runs `runs` independent trials on a worker pool. Output does not depend
/// on the number of threads.
inline CampaignResult run_campaign(const CampaignConfig& cfg, const Instance& inst) {
  cfg.validate();
  inst.validate();
  CampaignResult out;
  out.runs.resize(static_cast<std::size_t>(cfg.runs));

  std::optional<DesignCache> shared;
  TrialConfig base = cfg.trial;
  if (cfg.algorithm.selection == Selection::optimized && base.designs == nullptr) {
    shared.emplace(algorithm_features(cfg.algorithm, inst));
    base.designs = &*shared;
  }

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= cfg.runs) return;
      try {
        TrialConfig tc = base;
        tc.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i));
        out.runs[static_cast<std::size_t>(i)] = run_trial(cfg.algorithm, inst, tc);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfg.runs;
      }
    }
  };
  const int n = std::min(cfg.threads, cfg.runs);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  out.summary = summarize(cfg.algorithm.name, out.runs);
  return out;
}

// ---------------------------------------------------------------------------
// Trace validation

struct EventViolation {
  long t = 0;
  int i = 0;
  int j = 0;
  double gap = 0.0;    // mu_i - mu_j
  double index = 0.0;  // B_{i,j}(t)
};

struct EventReport {
  bool held = true;
  long rounds_checked = 0;
  std::optional<EventViolation> first_violation;
};

/// Checks mu_i - mu_j <= B_{i,j}(t) for every logged round and every pair.
/// Needs a trace recorded with keep_matrices.
inline EventReport validate_trace(const std::vector<RoundRecord>& trace, const Instance& inst, int m) {
  require(m >= 1 && m < inst.arms(), "validate_trace: m must be in [1, K-1]");
  const int k = inst.arms();
  EventReport rep;
  for (const RoundRecord& rec : trace) {
    if (rec.index.rows() != k || rec.index.cols() != k)
      throw ContractViolation("validate_trace: trace lacks index matrices (record with keep_matrices)");
    ++rep.rounds_checked;
    if (!rep.held) continue;
    for (int i = 0; i < k && rep.held; ++i) {
      for (int j = 0; j < k; ++j) {
        if (i == j) continue;
        const double gap = inst.means[i] - inst.means[j];
        if (gap > rec.index(i, j)) {
          rep.held = false;
          rep.first_violation = EventViolation{rec.t, i, j, gap, rec.index(i, j)};
          break;
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Output files

inline std::string join_arms(const std::vector<int>& arms) {
  std::string s;
  for (std::size_t n = 0; n < arms.size(); ++n) {
    if (n) s += ';';
    s += std::to_string(arms[n]);
  }
  return s;
}

/// Per-run CSV. The trailing event_E column is written only when some run
/// carries an event-E verdict.
inline void write_runs_csv(const std::vector<RunResult>& runs, std::ostream& out) {
  const bool traced = std::any_of(runs.begin(), runs.end(), [](const RunResult& r) { return r.event_E_held.has_value(); });
  out << "run_seed,tau,correct,truncated,recommended" << (traced ? ",event_E" : "") << '\n';
  for (const RunResult& r : runs) {
    out << r.seed << ',' << r.tau << ',' << (r.correct ? 1 : 0) << ',' << (r.truncated ? 1 : 0) << ','
        << join_arms(r.recommendation);
    if (traced) out << ',' << (r.event_E_held ? (*r.event_E_held ? "1" : "0") : "");
    out << '\n';
  }
}

inline std::vector<RunResult> parse_runs_csv(std::istream& in, const std::string& where = "runs csv") {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(where + ": empty file");
  const auto header = io_detail::split(line);
  const std::vector<std::string> base{"run_seed", "tau", "correct", "truncated", "recommended"};
  const bool traced = header.size() == 6 && header[5] == "event_E";
  if (!std::equal(base.begin(), base.end(), header.begin(), header.begin() + std::min(header.size(), base.size())) ||
      header.size() != base.size() + (traced ? 1 : 0))
    throw ParseError(where + ": unexpected header '" + line + "'");
  std::vector<RunResult> runs;
  int lineno = 1;
  const auto flag = [](const std::string& s, const std::string& at) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw ParseError(at + ": expected 0 or 1, got '" + s + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::string at = where + ":" + std::to_string(lineno);
    const auto f = io_detail::split(line);
    if (f.size() != header.size()) throw ParseError(at + ": wrong field count");
    RunResult r;
    try {
      std::size_t used = 0;
      r.seed = std::stoull(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument(f[0]);
    } catch (const std::exception&) {
      throw ParseError(at + ": bad run_seed '" + f[0] + "'");
    }
    r.tau = io_detail::parse_long(f[1], at);
    r.correct = flag(f[2], at);
    r.truncated = flag(f[3], at);
    if (!f[4].empty())
      for (const auto& a : io_detail::split(f[4], ';')) r.recommendation.push_back(static_cast<int>(io_detail::parse_long(a, at)));
    if (traced && !f[5].empty()) r.event_E_held = flag(f[5], at);
    runs.push_back(std::move(r));
  }
  return runs;
}

inline nlohmann::json summary_json(const RunSummary& s) {
  nlohmann::json j;
  j["algorithm"] = s.algorithm;
  j["runs"] = s.runs;
  j["errors"] = s.errors;
  j["error_frequency"] = s.error_frequency;
  j["mean_tau"] = s.mean_tau;
  nlohmann::json q = nlohmann::json::object();
  for (const auto& [p, v] : s.tau_quantiles) q[std::to_string(p)] = v;
  j["tau_quantiles"] = q;
  j["truncations"] = s.truncations;
  j["traced"] = s.traced;
  j["event_E_violations"] = s.event_E_violations;
  j["incorrect_under_E"] = s.incorrect_under_E;
  return j;
}

inline void write_quantiles_csv(const RunSummary& s, std::ostream& out) {
  out << "algorithm,quantile,tau\n";
  for (const auto& [p, v] : s.tau_quantiles) out << s.algorithm << ',' << p << ',' << v << '\n';
}

struct OutputPaths {
  std::optional<std::filesystem::path> runs_csv;
  std::optional<std::filesystem::path> summary_json;
  std::optional<std::filesystem::path> quantiles_csv;
};

inline void emit_outputs(const RunSummary& summary, const std::vector<RunResult>& runs, const OutputPaths& paths,
                         const nlohmann::json& extra = nlohmann::json::object()) {
  const auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
  };
  if (paths.runs_csv) {
    auto f = open(*paths.runs_csv);
    write_runs_csv(runs, f);
  }
  if (paths.summary_json) {
    nlohmann::json j = summary_json(summary);
    for (const auto& [key, value] : extra.items()) j[key] = value;
    auto f = open(*paths.summary_json);
    f << j.dump(2) << '\n';
  }
  if (paths.quantiles_csv && summary.runs > 0) {
    auto f = open(*paths.quantiles_csv);
    write_quantiles_csv(summary, f);
  }
}

}  // namespace topm
