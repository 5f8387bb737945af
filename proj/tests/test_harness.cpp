#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "topm/harness.hpp"

using namespace topm;

namespace {

CampaignConfig small_campaign(const std::string& algo, int runs, int threads) {
  CampaignConfig cfg;
  cfg.algorithm = preset(algo);
  cfg.trial.m = 2;
  cfg.runs = runs;
  cfg.master_seed = 2024;
  cfg.threads = threads;
  cfg.trial.trace = true;
  return cfg;
}

std::string csv_of(const std::vector<RunResult>& runs) {
  std::ostringstream s;
  write_runs_csv(runs, s);
  return s.str();
}

}  // namespace

TEST(Quantiles, NearestRank) {
  const std::vector<long> v{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  EXPECT_EQ(nearest_rank(v, 5), 10);
  EXPECT_EQ(nearest_rank(v, 25), 30);
  EXPECT_EQ(nearest_rank(v, 50), 50);
  EXPECT_EQ(nearest_rank(v, 75), 80);
  EXPECT_EQ(nearest_rank(v, 95), 100);
  EXPECT_EQ(nearest_rank({7}, 5), 7);
  EXPECT_THROW(nearest_rank({}, 50), ContractViolation);
}

TEST(Campaign, SingleRunQuantilesCollapse) {
  const auto inst = make_classic_instance(4, 2, M_PI / 6);
  const auto res = run_campaign(small_campaign("m-lingape", 1, 1), inst);
  for (const auto& [p, v] : res.summary.tau_quantiles) EXPECT_EQ(v, res.runs[0].tau) << p;
}

TEST(Campaign, IdenticalAcrossThreadCounts) {
  const auto inst = make_classic_instance(4, 2, M_PI / 6);
  for (const auto& algo : {"lingifa", "ugape"}) {
    const auto a = run_campaign(small_campaign(algo, 24, 1), inst);
    const auto b = run_campaign(small_campaign(algo, 24, 4), inst);
    EXPECT_EQ(csv_of(a.runs), csv_of(b.runs));
    EXPECT_EQ(summary_json(a.summary).dump(), summary_json(b.summary).dump());
  }
}

TEST(Campaign, SeedsAreDerivedPerTrial) {
  const auto inst = make_classic_instance(4, 2, M_PI / 6);
  const auto res = run_campaign(small_campaign("m-lingape", 5, 2), inst);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(res.runs[i].seed, derive_seed(2024, static_cast<std::uint64_t>(i)));
}

TEST(Campaign, InvalidConfigRejected) {
  const auto inst = make_classic_instance(4, 2, M_PI / 6);
  auto cfg = small_campaign("lucb", 0, 1);
  EXPECT_THROW(run_campaign(cfg, inst), ContractViolation);
  cfg = small_campaign("lucb", 1, 1);
  cfg.trial.delta = 1.0;
  EXPECT_THROW(run_campaign(cfg, inst), ContractViolation);
}

TEST(RunsCsv, RoundTripAndRecount) {
  const auto inst = make_classic_instance(4, 2, M_PI / 6);
  const auto res = run_campaign(small_campaign("lucb", 30, 2), inst);
  std::istringstream in(csv_of(res.runs));
  const auto back = parse_runs_csv(in);
  ASSERT_EQ(back.size(), res.runs.size());
  for (std::size_t n = 0; n < back.size(); ++n) {
    EXPECT_EQ(back[n].seed, res.runs[n].seed);
    EXPECT_EQ(back[n].tau, res.runs[n].tau);
    EXPECT_EQ(back[n].correct, res.runs[n].correct);
    EXPECT_EQ(back[n].truncated, res.runs[n].truncated);
    EXPECT_EQ(back[n].recommendation, res.runs[n].recommendation);
    EXPECT_EQ(back[n].event_E_held, res.runs[n].event_E_held);
  }
  const RunSummary recount = summarize(res.summary.algorithm, back);
  EXPECT_EQ(summary_json(recount).dump(), summary_json(res.summary).dump());
  int errors = 0;
  for (const auto& r : back) errors += r.correct ? 0 : 1;
  EXPECT_EQ(res.summary.error_frequency, static_cast<double>(errors) / 30.0);
}

TEST(RunsCsv, EmptyCampaignIsHeaderOnly) {
  EXPECT_EQ(csv_of({}), "run_seed,tau,correct,truncated,recommended\n");
  std::istringstream in(csv_of({}));
  EXPECT_TRUE(parse_runs_csv(in).empty());
}

TEST(RunsCsv, MalformedInputRejected) {
  std::istringstream bad_header("seed,tau\n");
  EXPECT_THROW(parse_runs_csv(bad_header), ParseError);
  std::istringstream bad_flag("run_seed,tau,correct,truncated,recommended\n1,5,2,0,0;1\n");
  EXPECT_THROW(parse_runs_csv(bad_flag), ParseError);
}

TEST(EmitOutputs, WritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "topm_test_emit";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto inst = make_classic_instance(4, 2, M_PI / 6);
  const auto res = run_campaign(small_campaign("lingifa", 8, 1), inst);
  OutputPaths p{dir / "runs.csv", dir / "summary.json", dir / "q.csv"};
  emit_outputs(res.summary, res.runs, p);
  std::ifstream js(dir / "summary.json");
  const auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["runs"], 8);
  EXPECT_EQ(j["tau_quantiles"]["50"], res.summary.tau_quantiles.at(50));
  std::ifstream q(dir / "q.csv");
  std::string header;
  std::getline(q, header);
  EXPECT_EQ(header, "algorithm,quantile,tau");
}

TEST(ValidateTrace, NoiselessHoldsAndZeroWidthFails) {
  Vector mu(3);
  mu << 1.0, 0.4, 0.0;
  const auto inst = make_canonical_instance(mu, 0.0);
  TrialConfig cfg;
  cfg.m = 1;
  cfg.sigma = 0.5;
  cfg.trace = true;
  cfg.keep_matrices = true;
  cfg.lambda = 0.0;
  const RunResult ok = run_trial(preset("lucb"), inst, cfg);
  EXPECT_TRUE(validate_trace(ok.trace, inst, 1).held);

  // zero widths on a fresh linear estimator: B = 0 < mu_0 - mu_1 at once
  cfg.lambda.reset();
  cfg.threshold_scale = 0.0;
  cfg.max_rounds = 10;
  const RunResult bad = run_trial(preset("m-lingape"), make_canonical_instance(mu, 0.5), cfg);
  const EventReport rep = validate_trace(bad.trace, inst, 1);
  EXPECT_FALSE(rep.held);
  ASSERT_TRUE(rep.first_violation.has_value());
  EXPECT_EQ(rep.first_violation->t, bad.trace.front().t);
  EXPECT_GT(rep.first_violation->gap, rep.first_violation->index);
  EXPECT_FALSE(*bad.event_E_held);
}

TEST(ValidateTrace, NeedsMatrices) {
  const auto inst = make_classic_instance(4, 2, M_PI / 6);
  TrialConfig cfg;
  cfg.m = 2;
  cfg.trace = true;
  const RunResult r = run_trial(preset("m-lingape"), inst, cfg);
  EXPECT_THROW(validate_trace(r.trace, inst, 2), ContractViolation);
}
