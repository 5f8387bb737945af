// topm: command-line front end for the Top-m identification library.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "topm/topm.hpp"

namespace {

using namespace topm;

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& f : io_detail::split(s)) out.push_back(io_detail::parse_double(f, "--mu"));
  return out;
}

struct GenArgs {
  std::string kind;
  int k = 4;
  int m = 2;
  double omega = M_PI / 6;
  int n = 2;
  double variance = 0.25;
  std::string mu;
  double sigma = 0.5;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  Instance inst;
  if (a.kind == "classic") {
    inst = make_classic_instance(a.k, a.m, a.omega, a.sigma);
  } else if (a.kind == "random") {
    inst = make_random_unit_instance(a.k, a.n, a.variance, a.seed, a.sigma);
  } else if (a.kind == "canonical") {
    require(!a.mu.empty(), "gen-instance: canonical kind needs --mu");
    const auto mu = parse_list(a.mu);
    inst = make_canonical_instance(Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size())), a.sigma);
  } else {
    throw ContractViolation("gen-instance: unknown kind '" + a.kind + "'");
  }
  save_instance(inst, a.out);
  std::cout << "wrote " << a.out << " (K=" << inst.arms() << ", N=" << inst.dim() << ")\n";
  return 0;
}

struct RunArgs {
  std::string instance;
  std::string algo;
  std::string jrule, brule, selection, stopping, index, features;
  bool init_pass = false;
  bool optimized_argmax = false;
  int m = 1;
  double epsilon = 0.0;
  double delta = 0.05;
  int runs = 1;
  std::uint64_t seed = 0;
  bool trace = false;
  std::string out, summary, quantiles;
  long max_rounds = 10'000'000;
  std::string threshold = "heuristic";
  std::optional<double> lambda;
  std::optional<double> sigma;
  int threads = 1;
};

int cmd_run(const RunArgs& a) {
  AlgorithmSpec spec = preset(a.algo);
  if (!a.jrule.empty()) spec.j_rule = parse_j_rule(a.jrule);
  if (!a.brule.empty()) spec.b_rule = parse_b_rule(a.brule);
  if (!a.selection.empty()) spec.selection = parse_selection(a.selection);
  if (!a.stopping.empty()) spec.stopping = parse_stopping(a.stopping);
  if (!a.index.empty()) spec.index = parse_index_kind(a.index);
  if (!a.features.empty()) spec.features = parse_feature_model(a.features);
  spec.init_pass = spec.init_pass || a.init_pass;
  spec.optimized_argmax = a.optimized_argmax;

  const Instance inst = load_instance(a.instance);
  CampaignConfig cfg;
  cfg.algorithm = spec;
  cfg.runs = a.runs;
  cfg.master_seed = a.seed;
  cfg.threads = a.threads;
  cfg.trial.m = a.m;
  cfg.trial.epsilon = a.epsilon;
  cfg.trial.delta = a.delta;
  cfg.trial.max_rounds = a.max_rounds;
  cfg.trial.threshold = parse_threshold_kind(a.threshold);
  cfg.trial.lambda = a.lambda;
  cfg.trial.sigma = a.sigma;
  cfg.trial.trace = a.trace;

  const CampaignResult res = run_campaign(cfg, inst);
  long fallbacks = 0;
  for (const auto& r : res.runs) fallbacks += r.design_fallbacks;
  if (fallbacks > 0)
    std::cerr << "warning: optimized selection fell back to greedy " << fallbacks
              << " times (design system infeasible)\n";

  OutputPaths paths;
  if (!a.out.empty()) paths.runs_csv = a.out;
  if (!a.summary.empty()) paths.summary_json = a.summary;
  if (!a.quantiles.empty()) paths.quantiles_csv = a.quantiles;
  nlohmann::json extra;
  extra["spec"] = spec.describe();
  extra["m"] = a.m;
  extra["epsilon"] = a.epsilon;
  extra["delta"] = a.delta;
  extra["seed"] = a.seed;
  extra["threshold"] = a.threshold;
  extra["sigma"] = resolve_sigma(inst, cfg.trial);
  extra["lambda"] = resolve_lambda(inst, cfg.trial);
  emit_outputs(res.summary, res.runs, paths, extra);

  const RunSummary& s = res.summary;
  std::cout << spec.describe() << '\n'
            << "runs=" << s.runs << " errors=" << s.errors << " error_frequency=" << s.error_frequency
            << " mean_tau=" << s.mean_tau << " truncations=" << s.truncations << '\n';
  std::cout << "tau quantiles:";
  for (const auto& [p, v] : s.tau_quantiles) std::cout << ' ' << p << "%=" << v;
  std::cout << '\n';
  if (s.traced > 0)
    std::cout << "event E violations=" << s.event_E_violations << " incorrect under E=" << s.incorrect_under_E
              << '\n';
  return 0;
}

int cmd_complexity(const std::string& path, int m, double epsilon, std::optional<double> sigma,
                   const std::string& kind) {
  const Instance inst = load_instance(path);
  const double s = sigma.value_or(inst.sigma);
  std::vector<ComplexityKind> kinds;
  if (kind == "all") {
    kinds = {ComplexityKind::lucb, ComplexityKind::ugape, ComplexityKind::m_lingape_1, ComplexityKind::m_lingape_2};
  } else {
    kinds = {parse_complexity_kind(kind)};
  }
  const GapProfile g = gap_profile(inst, m);
  const DesignCache designs(inst.features);
  std::vector<ComplexityReport> reports;
  for (auto k : kinds) reports.push_back(h_constant(k, g.gaps, epsilon, s, &designs));
  std::cout << "arm,gap";
  for (const auto& r : reports) std::cout << ',' << to_string(r.kind);
  std::cout << '\n';
  for (int a = 0; a < inst.arms(); ++a) {
    std::cout << a << ',' << io_detail::format_double(g.gaps[a]);
    for (const auto& r : reports) std::cout << ',' << io_detail::format_double(r.per_arm_terms[a]);
    std::cout << '\n';
  }
  std::cout << "H,";
  for (const auto& r : reports) std::cout << ',' << io_detail::format_double(r.H);
  std::cout << '\n';
  return 0;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"Top-m arm identification in linear bandits"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-instance", "generate an instance file pair (csv + json)");
  g->add_option("--kind", gen.kind, "classic | random | canonical")->required()->check(
      CLI::IsMember({"classic", "random", "canonical"}));
  g->add_option("--K", gen.k, "number of arms");
  g->add_option("--m", gen.m, "classic: size of the target set");
  g->add_option("--omega", gen.omega, "classic: angle of the near-duplicate arm");
  g->add_option("--N", gen.n, "random: feature dimension");
  g->add_option("--D", gen.variance, "random: variance of the raw Gaussian features");
  g->add_option("--mu", gen.mu, "canonical: comma-separated means");
  g->add_option("--sigma", gen.sigma, "noise scale of the rewards");
  g->add_option("--seed", gen.seed, "random: seed");
  g->add_option("-o,--out", gen.out, "output csv path")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "run a Monte-Carlo campaign");
  r->add_option("--instance", run.instance)->required();
  r->add_option("--algo", run.algo, "lucb | ugape | lingape | m-lingape | lingifa")->required();
  r->add_option("--jrule", run.jrule, "top-m-empirical | min-max-index");
  r->add_option("--brule", run.brule, "max-over-outside | max-over-mth");
  r->add_option("--selection", run.selection, "largest-variance | greedy | optimized | both-arms");
  r->add_option("--stopping", run.stopping, "lucb | ugape");
  r->add_option("--index", run.index, "paired | individual");
  r->add_option("--features", run.features, "linear | canonical");
  r->add_flag("--init-pass", run.init_pass, "pull every arm once before the loop");
  r->add_flag("--optimized-argmax", run.optimized_argmax,
              "optimized rule: argmax of N_a ||w||_1 / w_a over w_a > 0");
  r->add_option("--m", run.m)->required();
  r->add_option("--epsilon", run.epsilon);
  r->add_option("--delta", run.delta);
  r->add_option("--runs", run.runs);
  r->add_option("--seed", run.seed);
  r->add_flag("--trace", run.trace, "track event E at every round");
  r->add_option("--out", run.out, "per-run csv");
  r->add_option("--summary", run.summary, "summary json");
  r->add_option("--quantiles", run.quantiles, "quantile table csv");
  r->add_option("--max-rounds", run.max_rounds);
  r->add_option("--threshold", run.threshold)->check(CLI::IsMember({"theoretical", "heuristic", "classical"}));
  r->add_option("--lambda", run.lambda, "regularization (default sigma / 20)");
  r->add_option("--sigma", run.sigma, "noise scale assumed by the algorithm (default: instance sigma)");
  r->add_option("--threads", run.threads);

  std::string cx_path, cx_kind = "all";
  int cx_m = 1;
  double cx_eps = 0.0;
  std::optional<double> cx_sigma;
  auto* c = app.add_subcommand("complexity", "complexity constants and per-arm terms (csv)");
  c->add_option("--instance", cx_path)->required();
  c->add_option("--m", cx_m)->required();
  c->add_option("--epsilon", cx_eps);
  c->add_option("--sigma", cx_sigma);
  c->add_option("--kind", cx_kind)->check(CLI::IsMember({"lucb", "ugape", "m-lingape-1", "m-lingape-2", "all"}));

  double b_h = 0.0, b_delta = 0.05, b_init = 0.0;
  std::string b_kind = "heuristic";
  ThresholdSpec b_spec;
  auto* b = app.add_subcommand("bound", "fixed-point sample-complexity bound");
  b->add_option("--H", b_h)->required();
  b->add_option("--threshold", b_kind)->check(CLI::IsMember({"theoretical", "heuristic", "classical"}));
  b->add_option("--delta", b_delta);
  b->add_option("--init-K", b_init, "additive initialization term");
  b->add_option("--N", b_spec.dim, "theoretical: dimension");
  b->add_option("--L", b_spec.feature_bound, "theoretical: feature norm bound");
  b->add_option("--S", b_spec.param_bound, "theoretical: parameter norm bound");
  b->add_option("--lambda", b_spec.lambda, "theoretical: regularization");
  b->add_option("--sigma", b_spec.sigma, "theoretical: noise scale");
  b->add_option("--K", b_spec.arms, "classical: number of arms");

  int t_k = 10, t_n = 5, t_reps = 1000;
  double t_d = 0.25, t_sigma = 1.0;
  std::uint64_t t_seed = 42;
  auto* t = app.add_subcommand("fraction", "fraction of random instances where H[m-LinGapE(2)] <= H[UGapE]");
  t->add_option("--K", t_k);
  t->add_option("--N", t_n);
  t->add_option("--D", t_d);
  t->add_option("--reps", t_reps);
  t->add_option("--seed", t_seed);
  t->add_option("--sigma", t_sigma, "noise scale in both constants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*r) return cmd_run(run);
    if (*c) return cmd_complexity(cx_path, cx_m, cx_eps, cx_sigma, cx_kind);
    if (*b) {
      b_spec.kind = parse_threshold_kind(b_kind);
      b_spec.delta = b_delta;
      std::cout << sample_complexity_bound(b_h, b_spec, b_init) << '\n';
      return 0;
    }
    if (*t) {
      const FractionResult f = complexity_fraction_experiment(t_k, t_n, t_d, t_reps, t_seed, t_sigma);
      std::cout << "K,N,D,m,fraction,skipped\n"
                << f.arms << ',' << f.dim << ',' << f.variance << ',' << f.m << ',' << f.fraction << ','
                << f.skipped << '\n';
      return 0;
    }
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace

int main(int argc, char** argv) { return main_impl(argc, argv); }
