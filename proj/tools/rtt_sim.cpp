// Command-line front end: single-scenario campaigns, team-size x strategy
// sweeps, and a quick self-check of the solvers on small instances.

#include "rtt/rtt.hpp"
#include "rtt/scenario_yaml.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace rtt;

namespace {

constexpr const char* kOutDirEnv = "RTT_OUT_DIR";

fs::path resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "rtt_out";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

struct SimulateArgs {
  std::string config;
  std::string strategy;
  std::optional<std::uint64_t> seed;
  int trials = 1;
  std::string out;
  bool plots = false;
  unsigned threads = 0;
};

int run_simulate(const SimulateArgs& a) {
  ScenarioConfig cfg = load_scenario(a.config);
  if (!a.strategy.empty()) cfg.strategy = parse_strategy(a.strategy);
  if (a.seed) cfg.seed = *a.seed;
  if (a.trials < 1) throw std::invalid_argument("--trials must be at least 1");
  const fs::path out = resolve_out_dir(a.out);
  fs::create_directories(out);

  CampaignResult res = run_campaign(cfg, a.trials, cfg.seed, true, a.threads);
  int failed = 0;
  for (std::size_t t = 0; t < res.traces.size(); ++t) {
    const TrialTrace& trace = res.traces[t];
    const std::string seed = std::to_string(trace.seed);
    std::ostringstream trial_csv, events_csv;
    write_trial_csv(trial_csv, trace);
    write_events_csv(events_csv, trace);
    write_file(out / ("trial_" + seed + ".csv"), trial_csv.str());
    write_file(out / ("events_" + seed + ".csv"), events_csv.str());
    if (trace.aborted) {
      ++failed;
      std::cerr << "trial " << seed << " failed: " << trace.diagnostic << "\n";
    }
  }
  const std::vector<CampaignResult> results{res};
  if (a.plots) {
    emit_plots(results, out);
  } else {
    std::ostringstream agg;
    write_aggregate_csv(agg, results);
    write_file(out / "aggregate.csv", agg.str());
  }

  const auto& last = res.aggregate.empty() ? AggregateRow{} : res.aggregate.back();
  std::cout << "strategy " << to_string(cfg.strategy) << ", n " << cfg.n << ", " << a.trials << " trial(s), "
            << failed << " failed\n";
  if (!res.aggregate.empty())
    std::cout << "final epoch " << last.epoch << ": median max Tr(P) " << fmt_num(last.trace_median)
              << ", median max error " << fmt_num(last.error_median) << "\n";
  std::cout << "wrote " << out.string() << "\n";
  return failed == 0 ? 0 : 1;
}

struct SweepArgs {
  std::string config;
  std::vector<int> sizes{5, 6, 7};
  std::vector<std::string> strategies{"accg", "tccg", "greedy"};
  int trials = 20;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool plots = false;
  unsigned threads = 0;
};

int run_sweep_cmd(const SweepArgs& a) {
  ScenarioConfig cfg = a.config.empty() ? ScenarioConfig{} : load_scenario(a.config);
  if (a.seed) cfg.seed = *a.seed;
  std::vector<Strategy> strategies;
  for (const auto& s : a.strategies) strategies.push_back(parse_strategy(s));
  for (int n : a.sizes)
    if (n < 1) throw std::invalid_argument("team sizes must be positive");
  const fs::path out = resolve_out_dir(a.out);
  fs::create_directories(out);

  const auto results = run_sweep(cfg, a.sizes, strategies, a.trials, cfg.seed, a.threads);
  if (a.plots) {
    emit_plots(results, out);
  } else {
    std::ostringstream agg, trials;
    write_aggregate_csv(agg, results);
    write_campaign_trials_csv(trials, results);
    write_file(out / "aggregate.csv", agg.str());
    write_file(out / "campaign_trials.csv", trials.str());
  }
  int failed = 0;
  std::cout << "n  strategy  trials  failed  final median max Tr(P)  final median max error\n";
  for (const auto& c : results) {
    int f = 0;
    for (const auto& t : c.trials) f += t.failed ? 1 : 0;
    failed += f;
    const AggregateRow last = c.aggregate.empty() ? AggregateRow{} : c.aggregate.back();
    std::printf("%-2d %-9s %-7zu %-7d %-23s %s\n", c.n, to_string(c.strategy).c_str(), c.trials.size(), f,
                fmt_num(last.trace_median).c_str(), fmt_num(last.error_median).c_str());
  }
  std::cout << "wrote " << out.string() << "\n";
  return failed == 0 ? 0 : 1;
}

// --- validate -------------------------------------------------------------------

struct CheckRun {
  int failures = 0;
  void report(const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << " | " << detail << "\n";
    failures += ok ? 0 : 1;
  }
};

Topology random_connected(int n, std::mt19937_64& rng) {
  std::vector<Edge> edges;
  for (int k = 1; k < n; ++k) edges.emplace_back(k, std::uniform_int_distribution<int>(0, k - 1)(rng));
  std::bernoulli_distribution extra(0.25);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (extra(rng)) edges.emplace_back(i, j);
  return Topology(n, edges);
}

Mat random_information(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat b(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) b(i, j) = normal(rng);
  return b * b.transpose() / 4.0 + 0.5 * Mat::Identity(4, 4);
}

int run_validate(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CheckRun run;

  {
    int agree = 0;
    const int cases = 300;
    for (int c = 0; c < cases; ++c) {
      const int n = std::uniform_int_distribution<int>(2, 8)(rng);
      std::bernoulli_distribution keep(0.3);
      std::vector<Edge> edges;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (keep(rng)) edges.emplace_back(i, j);
      const Topology t(n, edges);
      agree += is_connected_spectral(metropolis_matrix(t), 1e-6) == is_connected_bfs(t) ? 1 : 0;
    }
    run.report("spectral test agrees with graph search", agree == cases,
               std::to_string(agree) + "/" + std::to_string(cases));
  }
  {
    InfoSnapshot snap;
    snap.omegas = {Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 2.0)};
    snap.prev_config = metropolis_weights(Topology::line(2));
    const InnerResult r = tccg_inner(Topology::line(2), snap);
    const bool ok = std::abs(r.weights(0, 1) - 0.5) <= 1e-3 && std::abs(r.objective - 2.0 / 3.0) <= 1e-4;
    run.report("two-robot team-centric optimum", ok,
               "w = " + fmt_num(r.weights(0, 1)) + ", objective = " + fmt_num(r.objective));
  }
  {
    double worst = 0.0;
    for (int c = 0; c < 5; ++c) {
      const int n = 4 + c % 2;
      const Topology base = random_connected(n, rng);
      InfoSnapshot snap;
      for (int i = 0; i < n; ++i) snap.omegas.push_back(random_information(rng));
      snap.deteriorated_id = c % n;
      snap.prev_config = metropolis_weights(base);
      for (Strategy s : {Strategy::accg, Strategy::tccg}) {
        const SolverReport rep = solve(s, snap);
        double best = s == Strategy::accg ? -1e300 : 1e300;
        for (const auto& t : enumerate_topologies(base, snap.n_e, BudgetMode::add_only)) {
          const Mat* warm = t == base ? &snap.prev_config.weights : nullptr;
          const double v = s == Strategy::accg ? accg_inner(t, snap, {}, warm).objective
                                               : tccg_inner(t, snap, {}, warm).objective;
          best = s == Strategy::accg ? std::max(best, v) : std::min(best, v);
        }
        worst = std::max(worst, std::abs(rep.objective - best));
      }
    }
    run.report("outer search returns the best candidate", worst <= 1e-4, "max gap " + fmt_num(worst));
  }
  {
    std::vector<InfoPair> pairs;
    for (int i = 0; i < 5; ++i) pairs.push_back({Vec::Zero(4), random_information(rng), 0});
    Mat before = Mat::Zero(4, 4);
    for (const auto& p : pairs) before += p.omega / 5.0;
    const auto after = run_consensus(pairs, metropolis_matrix(random_connected(5, rng)), 15);
    Mat mean = Mat::Zero(4, 4);
    bool pd = true;
    for (const auto& p : after) {
      mean += p.omega / 5.0;
      pd = pd && is_pd(p.omega);
    }
    const double drift = (mean - before).cwiseAbs().maxCoeff();
    run.report("consensus preserves the team mean", drift <= 1e-10 && pd, "drift " + fmt_num(drift));
  }
  {
    ScenarioConfig cfg;
    cfg.n = 4;
    cfg.epochs = 40;
    cfg.events.interval = 10;
    cfg.seed = seed;
    std::ostringstream a, b;
    write_trial_csv(a, run_trial(cfg));
    write_trial_csv(b, run_trial(cfg));
    run.report("trial output is deterministic", a.str() == b.str(), std::to_string(a.str().size()) + " bytes");
  }
  return run.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resilient multi-robot target tracking simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run trials of one scenario and write per-trial CSVs");
  simulate->add_option("--config", sim.config, "Scenario YAML file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--strategy", sim.strategy, "Reconfiguration strategy")
      ->check(CLI::IsMember({"accg", "tccg", "greedy"}, CLI::ignore_case));
  simulate->add_option("--seed", sim.seed, "Base seed (trial t uses seed + t)");
  simulate->add_option("--trials", sim.trials, "Number of trials")->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, std::string("Output directory (default $") + kOutDirEnv + " or rtt_out)");
  simulate->add_flag("--plots", sim.plots, "Also write SVG charts of the median metrics");
  simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Team-size x strategy grid on shared seeds");
  sweep->add_option("--config", sw.config, "Scenario YAML file (defaults when omitted)")->check(CLI::ExistingFile);
  sweep->add_option("--sizes", sw.sizes, "Team sizes")->delimiter(',');
  sweep->add_option("--strategies", sw.strategies, "Strategies")->delimiter(',');
  sweep->add_option("--trials", sw.trials, "Trials per cell")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sw.seed, "Base seed");
  sweep->add_option("--out", sw.out, "Output directory");
  sweep->add_flag("--plots", sw.plots, "Also write SVG charts");
  sweep->add_option("--threads", sw.threads, "Worker threads (0 = all cores)");

  std::uint64_t validate_seed = 1;
  auto* validate = app.add_subcommand("validate", "Quick solver and filter property checks on small instances");
  validate->add_option("--seed", validate_seed, "Seed for the random instances");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) return run_simulate(sim);
    if (*sweep) return run_sweep_cmd(sw);
    if (*validate) return run_validate(validate_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
