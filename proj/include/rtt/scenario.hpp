#pragma once

#include "rtt/config_gen.hpp"
#include "rtt/dkf.hpp"
#include "rtt/formation.hpp"
#include "rtt/sensing.hpp"
#include "rtt/target_model.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace rtt {

enum class ErrorMode { full_state, position };

struct TargetParams {
  double dt = 0.1;
  double speed = 5.0;      // constant speed input
  double turn_rate = 0.1;  // constant turn-rate input, rad/s
  double q_scale = 0.01;   // Q = q_scale * diag(1, 1, heading_noise_factor, 1)
  double heading_noise_factor = 0.01;
  Vec initial_state = (Vec(4) << 0.0, -50.0, 0.0, 5.0).finished();
};

struct SensorParams {
  Mat output_matrix = (Mat(2, 4) << 1, 0, 0, 0, 0, 1, 0, 0).finished();
  double r0 = 0.1;          // R_0 = r0 * I
  double d_sen = 20.0;
  double deterioration_scale = 1.0;  // sigma_d of the random PSD perturbation
};

struct PriorParams {
  double initial_covariance = 10.0;  // P_0 = initial_covariance * I
  double perturbation_sd = 1.0;      // x_hat_0 = x_0 + N(0, sd^2 I), shared by the team
};

enum class RobotSelection { random_each, same_robot, fixed };

struct EventSpec {
  bool enabled = true;
  int interval = 50;       // f: an event every `interval` epochs
  int first = -1;          // epoch of the first event; -1 means `interval`
  RobotSelection selection = RobotSelection::random_each;
  int fixed_robot = 0;
};

struct ScenarioConfig {
  int n = 6;
  int epochs = 500;
  int consensus_rounds = 15;
  Strategy strategy = Strategy::tccg;
  int n_e = 1;
  double mu = 1e-3;
  SolverOptions solver;
  TargetParams target;
  SensorParams sensor;
  PriorParams prior;
  EventSpec events;
  double d_s = 5.0;
  double d_mc = 10.0;
  Vec3 box_min = Vec3::Constant(-100.0);
  Vec3 box_max = Vec3::Constant(100.0);
  AnnealingSchedule annealing;
  std::uint64_t seed = 1;
  ErrorMode error_mode = ErrorMode::full_state;
  bool follow_target = true;  // the formation translates with the target between events
  bool fusion = true;         // false replaces the consensus weights by the identity

  void validate() const {
    if (n < 1) throw std::invalid_argument("team size must be at least 1");
    if (epochs < 0) throw std::invalid_argument("epoch count must be non-negative");
    if (consensus_rounds < 0) throw std::invalid_argument("consensus rounds must be non-negative");
    if (n_e < 0) throw std::invalid_argument("edit budget must be non-negative");
    if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("mu must lie in (0, 1)");
    if (!(target.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (target.initial_state.size() != 4) throw std::invalid_argument("initial state must have 4 entries");
    if (target.heading_noise_factor < 0.0) throw std::invalid_argument("heading noise factor must be non-negative");
    if (target.q_scale < 0.0) throw std::invalid_argument("process noise scale must be non-negative");
    if (sensor.output_matrix.cols() != 4) throw std::invalid_argument("output matrix must have 4 columns");
    if (!(sensor.r0 > 0.0)) throw std::invalid_argument("initial sensor noise must be positive");
    if (!(sensor.d_sen > 0.0)) throw std::invalid_argument("sensing radius must be positive");
    if (!(d_s > 0.0) || d_mc < d_s) throw std::invalid_argument("need 0 < d_s <= d_mc");
    if (!((box_min.array() < box_max.array()).all())) throw std::invalid_argument("bounding box is empty");
    if (events.enabled && events.interval < 1) throw std::invalid_argument("event interval must be positive");
    if (events.selection == RobotSelection::fixed && (events.fixed_robot < 0 || events.fixed_robot >= n))
      throw std::invalid_argument("fixed deteriorating robot is out of range");
  }
};

struct EventSchedule {
  std::vector<DeteriorationEvent> events;

  std::vector<std::int64_t> epochs() const {
    std::vector<std::int64_t> out;
    for (const auto& e : events) out.push_back(e.epoch);
    return out;
  }
};

/// Independent random streams of one trial. Each stream has its own seed so
/// the strategy under test cannot shift the draws of any other stream.
struct TrialStreams {
  std::mt19937_64 truth, sensors, events, formation, prior;

  explicit TrialStreams(std::uint64_t seed)
      : truth(stream(seed, 1)), sensors(stream(seed, 2)), events(stream(seed, 3)), formation(stream(seed, 4)),
        prior(stream(seed, 5)) {}

 private:
  static std::mt19937_64 stream(std::uint64_t seed, std::uint32_t id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
    return std::mt19937_64(seq);
  }
};

template <class Rng>
EventSchedule make_schedule(const ScenarioConfig& cfg, Rng& rng) {
  EventSchedule s;
  if (!cfg.events.enabled) return s;
  const int m = static_cast<int>(cfg.sensor.output_matrix.rows());
  std::uniform_int_distribution<int> pick(0, cfg.n - 1);
  int same = cfg.events.selection == RobotSelection::fixed ? cfg.events.fixed_robot : pick(rng);
  const int first = cfg.events.first > 0 ? cfg.events.first : cfg.events.interval;
  for (int k = first; k <= cfg.epochs; k += cfg.events.interval) {
    DeteriorationEvent e;
    e.epoch = k;
    e.robot_id = cfg.events.selection == RobotSelection::random_each ? pick(rng) : same;
    do {
      e.perturbation = random_psd(m, cfg.sensor.deterioration_scale, rng);
    } while (!(e.perturbation.trace() > 0.0));
    s.events.push_back(std::move(e));
  }
  return s;
}

inline double max_trace_P(const std::vector<Belief>& beliefs) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& b : beliefs) m = std::max(m, b.P.trace());
  return m;
}

inline double max_est_error(const std::vector<Belief>& beliefs, const Vec& x_true, ErrorMode mode) {
  double m = 0.0;
  for (const auto& b : beliefs) {
    const Vec e = b.x_hat - x_true;
    m = std::max(m, mode == ErrorMode::position ? e.head(2).norm() : e.norm());
  }
  return m;
}

struct EpochRow {
  std::int64_t epoch = 0;
  Vec truth;
  std::vector<Vec> estimates;
  std::vector<double> trace_P;
  double max_trace_P = 0.0;
  double max_est_error = 0.0;
  double min_eig_P = 0.0;
  std::vector<Edge> edges;
  std::vector<Vec3> positions;
};

struct EventRecord {
  std::int64_t epoch = 0;
  int robot_id = 0;
  double trace_R_before = 0.0;
  double trace_R_after = 0.0;
  Strategy strategy = Strategy::tccg;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double team_trace_one_step = 0.0;
  int topologies_evaluated = 0;
  int inner_iterations = 0;
  double wall_time = 0.0;
  std::vector<Edge> edges;
  std::vector<std::vector<double>> perturbation;
};

struct TrialTrace {
  std::uint64_t seed = 0;
  int n = 0;
  Strategy strategy = Strategy::tccg;
  std::vector<EpochRow> rows;
  std::vector<EventRecord> events;
  bool aborted = false;
  std::string diagnostic;
};

struct TrialError : std::runtime_error {
  TrialTrace partial;
  TrialError(const std::string& what, TrialTrace t) : std::runtime_error(what), partial(std::move(t)) {}
};

inline FormationParams formation_params(const ScenarioConfig& cfg, const Vec3& target, std::vector<int> in_range) {
  FormationParams p;
  p.d_s = cfg.d_s;
  p.d_mc = cfg.d_mc;
  p.d_sen.assign(static_cast<std::size_t>(cfg.n), cfg.sensor.d_sen);
  p.box_min = cfg.box_min;
  p.box_max = cfg.box_max;
  p.trackers_in_range = std::move(in_range);
  p.target_pos = target;
  return p;
}

inline Vec3 target_position(const Vec& x) { return Vec3(x(0), x(1), 0.0); }

inline TargetModel scenario_model(const ScenarioConfig& cfg, double heading) {
  Vec diag = Vec::Ones(4);
  diag(2) = cfg.target.heading_noise_factor;
  return dubins_model(cfg.target.dt, heading, cfg.target.q_scale * Mat(diag.asDiagonal()));
}

/// One full tracking trial: truth propagation, scheduled deterioration with
/// reconfiguration and formation synthesis, measurement and DKF fusion.
inline TrialTrace run_trial(const ScenarioConfig& cfg) {
  cfg.validate();
  TrialStreams rng(cfg.seed);
  TrialTrace trace;
  trace.seed = cfg.seed;
  trace.n = cfg.n;
  trace.strategy = cfg.strategy;
  if (cfg.epochs == 0) return trace;

  const EventSchedule schedule = make_schedule(cfg, rng.events);
  const int m = static_cast<int>(cfg.sensor.output_matrix.rows());

  TargetState truth{cfg.target.initial_state, 0};
  const Vec u = (Vec(2) << cfg.target.speed, cfg.target.turn_rate).finished();

  std::vector<SensorModel> sensors;
  std::vector<Belief> beliefs;
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec prior_offset(4);
  for (int a = 0; a < 4; ++a) prior_offset(a) = cfg.prior.perturbation_sd * normal(rng.prior);
  for (int i = 0; i < cfg.n; ++i) {
    sensors.push_back({i, cfg.sensor.output_matrix, cfg.sensor.r0 * Mat::Identity(m, m), cfg.sensor.d_sen});
    sensors.back().validate();
    beliefs.push_back({truth.x + prior_offset, cfg.prior.initial_covariance * Mat::Identity(4, 4), i});
  }

  Configuration config = metropolis_weights(Topology::line(cfg.n));
  std::vector<int> everyone(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) everyone[static_cast<std::size_t>(i)] = i;
  Placement placement;
  try {
    placement = synthesize(config.topology, formation_params(cfg, target_position(truth.x), everyone), std::nullopt,
                           rng.formation, cfg.annealing);
  } catch (const FormationError& e) {
    trace.aborted = true;
    trace.diagnostic = std::string("initial formation: ") + e.what();
    throw TrialError(trace.diagnostic, trace);
  }

  std::size_t next_event = 0;
  for (int k = 1; k <= cfg.epochs; ++k) {
    const TargetModel model = scenario_model(cfg, truth.x(2));
    const Vec3 old_target = target_position(truth.x);
    truth = step_truth(model, truth, u, rng.truth);
    const Vec3 target = target_position(truth.x);
    if (cfg.follow_target) {
      const Vec3 shift = target - old_target;
      for (auto& x : placement.positions) x += shift;
    }

    while (next_event < schedule.events.size() && schedule.events[next_event].epoch == k) {
      const DeteriorationEvent& ev = schedule.events[next_event++];
      const auto d = static_cast<std::size_t>(ev.robot_id);
      EventRecord rec;
      rec.epoch = k;
      rec.robot_id = ev.robot_id;
      rec.strategy = cfg.strategy;
      rec.trace_R_before = sensors[d].quality();
      sensors[d] = apply_deterioration(sensors[d], ev);
      rec.trace_R_after = sensors[d].quality();
      rec.perturbation.resize(static_cast<std::size_t>(m));
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) rec.perturbation[static_cast<std::size_t>(r)].push_back(ev.perturbation(r, c));

      std::vector<bool> in_range;
      std::vector<int> trackers;
      for (int i = 0; i < cfg.n; ++i) {
        const bool sees = in_sensing_range(sensors[static_cast<std::size_t>(i)],
                                           placement.positions[static_cast<std::size_t>(i)], target);
        in_range.push_back(sees);
        if (sees) trackers.push_back(i);
      }
      InfoSnapshot snap;
      snap.omegas = local_information(beliefs, sensors, in_range, model);
      snap.deteriorated_id = ev.robot_id;
      snap.prev_config = config;
      snap.n_e = cfg.n_e;
      snap.mu = cfg.mu;

      if (cfg.strategy == Strategy::greedy) {
        std::vector<double> traces;
        for (const auto& b : beliefs) traces.push_back(b.P.trace());
        const auto t0 = std::chrono::steady_clock::now();
        config = greedy(snap, traces);
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rec.topologies_evaluated = 1;
      } else {
        SolverOptions opt = cfg.solver;
        const SolverReport rep = solve(cfg.strategy, snap, opt);
        config = rep.chosen;
        rec.objective = rep.objective;
        rec.topologies_evaluated = rep.topologies_evaluated;
        rec.inner_iterations = rep.inner_iterations;
        rec.wall_time = rep.wall_time;
      }
      rec.team_trace_one_step = tccg_objective(config.weights, snap.omegas);
      rec.edges = config.topology.edges();
      trace.events.push_back(rec);

      try {
        placement = synthesize(config.topology, formation_params(cfg, target, trackers), placement, rng.formation,
                               cfg.annealing);
      } catch (const FormationError& e) {
        trace.aborted = true;
        trace.diagnostic = "formation at epoch " + std::to_string(k) + ": " + e.what();
        throw TrialError(trace.diagnostic, trace);
      }
    }

    std::vector<std::optional<Vec>> z;
    for (int i = 0; i < cfg.n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      z.push_back(measure(sensors[si], truth.x, placement.positions[si], target, rng.sensors));
    }
    const Mat weights = cfg.fusion ? config.weights : Mat::Identity(cfg.n, cfg.n);
    beliefs = dkf_step(beliefs, sensors, z, weights, model, u, cfg.consensus_rounds);

    EpochRow row;
    row.epoch = k;
    row.truth = truth.x;
    row.min_eig_P = std::numeric_limits<double>::infinity();
    for (const auto& b : beliefs) {
      row.estimates.push_back(b.x_hat);
      row.trace_P.push_back(b.P.trace());
      row.min_eig_P = std::min(row.min_eig_P, min_eigenvalue(b.P));
    }
    row.max_trace_P = max_trace_P(beliefs);
    row.max_est_error = max_est_error(beliefs, truth.x, cfg.error_mode);
    row.edges = config.topology.edges();
    row.positions = placement.positions;
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

// --- campaigns ---------------------------------------------------------------

struct TrialSummary {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string diagnostic;
  std::vector<double> max_trace_P;    // per epoch
  std::vector<double> max_est_error;  // per epoch
  std::vector<std::int64_t> event_epochs;
  std::vector<int> event_robots;
};

struct AggregateRow {
  std::int64_t epoch = 0;
  int trials = 0;
  double trace_q1 = 0.0, trace_median = 0.0, trace_q3 = 0.0;
  double error_q1 = 0.0, error_median = 0.0, error_q3 = 0.0;
};

struct CampaignResult {
  Strategy strategy = Strategy::tccg;
  int n = 0;
  std::vector<TrialSummary> trials;
  std::vector<AggregateRow> aggregate;
  std::vector<TrialTrace> traces;  // kept only when requested
};

/// Linear-interpolation quantile of an unsorted sample.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline std::vector<AggregateRow> aggregate_trials(const std::vector<TrialSummary>& trials, int epochs) {
  std::vector<AggregateRow> out;
  for (int k = 0; k < epochs; ++k) {
    std::vector<double> tr, er;
    for (const auto& t : trials) {
      if (t.failed || static_cast<int>(t.max_trace_P.size()) <= k) continue;
      tr.push_back(t.max_trace_P[static_cast<std::size_t>(k)]);
      er.push_back(t.max_est_error[static_cast<std::size_t>(k)]);
    }
    AggregateRow row;
    row.epoch = k + 1;
    row.trials = static_cast<int>(tr.size());
    row.trace_q1 = quantile(tr, 0.25);
    row.trace_median = quantile(tr, 0.5);
    row.trace_q3 = quantile(tr, 0.75);
    row.error_q1 = quantile(er, 0.25);
    row.error_median = quantile(er, 0.5);
    row.error_q3 = quantile(er, 0.75);
    out.push_back(row);
  }
  return out;
}

inline TrialSummary summarize(const TrialTrace& t) {
  TrialSummary s;
  s.seed = t.seed;
  s.failed = t.aborted;
  s.diagnostic = t.diagnostic;
  for (const auto& r : t.rows) {
    s.max_trace_P.push_back(r.max_trace_P);
    s.max_est_error.push_back(r.max_est_error);
  }
  for (const auto& e : t.events) {
    s.event_epochs.push_back(e.epoch);
    s.event_robots.push_back(e.robot_id);
  }
  return s;
}

/// Runs trials with seeds base_seed + t, in parallel when `threads` > 1.
/// A failing trial is recorded and excluded from the aggregates.
inline CampaignResult run_campaign(const ScenarioConfig& base, int n_trials, std::uint64_t base_seed,
                                   bool keep_traces = false, unsigned threads = 0) {
  if (n_trials < 0) throw std::invalid_argument("trial count must be non-negative");
  CampaignResult res;
  res.strategy = base.strategy;
  res.n = base.n;
  res.trials.resize(static_cast<std::size_t>(n_trials));
  if (keep_traces) res.traces.resize(static_cast<std::size_t>(n_trials));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t = next++; t < n_trials; t = next++) {
      ScenarioConfig cfg = base;
      cfg.seed = base_seed + static_cast<std::uint64_t>(t);
      TrialTrace trace;
      try {
        trace = run_trial(cfg);
      } catch (const TrialError& e) {
        trace = e.partial;
      } catch (const std::exception& e) {
        trace.seed = cfg.seed;
        trace.aborted = true;
        trace.diagnostic = e.what();
      }
      res.trials[static_cast<std::size_t>(t)] = summarize(trace);
      if (keep_traces) res.traces[static_cast<std::size_t>(t)] = std::move(trace);
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(1, n_trials)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  res.aggregate = aggregate_trials(res.trials, base.epochs);
  return res;
}

/// Strategy x team-size grid on shared seeds.
inline std::vector<CampaignResult> run_sweep(const ScenarioConfig& base, const std::vector<int>& sizes,
                                             const std::vector<Strategy>& strategies, int n_trials,
                                             std::uint64_t base_seed, unsigned threads = 0) {
  std::vector<CampaignResult> out;
  for (int n : sizes) {
    for (Strategy s : strategies) {
      ScenarioConfig cfg = base;
      cfg.n = n;
      cfg.strategy = s;
      out.push_back(run_campaign(cfg, n_trials, base_seed, false, threads));
    }
  }
  return out;
}

}  // namespace rtt
