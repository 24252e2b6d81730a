#pragma once

#include "rtt/network.hpp"

#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rtt {

struct FormationParams {
  double d_s = 5.0;   // minimum separation between any two robots
  double d_mc = 10.0; // communication range for graph neighbours
  std::vector<double> d_sen;  // per-robot sensing radius
  Vec3 box_min = Vec3::Constant(-100.0);
  Vec3 box_max = Vec3::Constant(100.0);
  std::vector<int> trackers_in_range;  // robots that must keep the target in view
  Vec3 target_pos = Vec3::Zero();
};

struct Placement {
  std::vector<Vec3> positions;
};

/// Summed sensing-disc area minus the pairwise overlap approximation. A pair
/// contributes (2 r_i - dist)^2 / 2 only while the discs intersect.
inline double coverage(const Placement& p, const FormationParams& params) {
  const std::size_t n = p.positions.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = params.d_sen.at(i);
    double term = r * r;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double overlap = std::max(0.0, 2.0 * r - (p.positions[i] - p.positions[j]).norm());
      term -= 0.5 * overlap * overlap;
    }
    total += term;
  }
  return std::numbers::pi * total;
}

struct Violation {
  enum class Kind { too_close, out_of_comm_range, outside_box, target_out_of_view };
  Kind kind;
  int i = -1;
  int j = -1;
  double magnitude = 0.0;  // meters beyond the bound
};

inline std::string to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::too_close: return "too_close";
    case Violation::Kind::out_of_comm_range: return "out_of_comm_range";
    case Violation::Kind::outside_box: return "outside_box";
    case Violation::Kind::target_out_of_view: return "target_out_of_view";
  }
  return "unknown";
}

struct ConstraintCheck {
  bool ok = true;
  std::vector<Violation> violations;
};

inline ConstraintCheck constraints_ok(const Placement& p, const Topology& t, const FormationParams& params,
                                      double tol = 1e-6) {
  ConstraintCheck out;
  const int n = static_cast<int>(p.positions.size());
  auto flag = [&](Violation::Kind k, int i, int j, double mag) {
    if (mag > tol) out.violations.push_back({k, i, j, mag});
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dist = (p.positions[static_cast<std::size_t>(i)] - p.positions[static_cast<std::size_t>(j)]).norm();
      flag(Violation::Kind::too_close, i, j, params.d_s - dist);
      if (t.has_edge(i, j)) flag(Violation::Kind::out_of_comm_range, i, j, dist - params.d_mc);
    }
    const Vec3& x = p.positions[static_cast<std::size_t>(i)];
    for (int a = 0; a < 3; ++a) {
      flag(Violation::Kind::outside_box, i, a, params.box_min(a) - x(a));
      flag(Violation::Kind::outside_box, i, a, x(a) - params.box_max(a));
    }
  }
  for (int i : params.trackers_in_range) {
    const double dist = (p.positions.at(static_cast<std::size_t>(i)) - params.target_pos).norm();
    flag(Violation::Kind::target_out_of_view, i, -1, dist - params.d_sen.at(static_cast<std::size_t>(i)));
  }
  out.ok = out.violations.empty();
  return out;
}

struct AnnealingSchedule {
  double initial_temperature_fraction = 0.1;  // of |coverage(seed)|
  double cooling = 0.97;
  int proposals_per_temperature = 100;
  int proposals = 10000;
  double step_fraction = 0.05;  // initial proposal sigma as a fraction of the box diagonal
  double penalty_weight = 0.0;  // 0 selects 1e3 * pi * max(d_sen)^2
  int max_restarts = 20;
};

struct FormationError : std::runtime_error {
  Placement best_attempt;
  FormationError(const std::string& what, Placement best) : std::runtime_error(what), best_attempt(std::move(best)) {}
};

namespace detail {

inline double squared_violation(const Placement& p, const Topology& t, const FormationParams& params) {
  double s = 0.0;
  for (const Violation& v : constraints_ok(p, t, params, 0.0).violations) s += v.magnitude * v.magnitude;
  return s;
}

template <class Rng>
Placement random_in_box(int n, const FormationParams& params, Rng& rng) {
  Placement p;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Vec3 x;
    for (int a = 0; a < 3; ++a) x(a) = params.box_min(a) + unit(rng) * (params.box_max(a) - params.box_min(a));
    p.positions.push_back(x);
  }
  return p;
}

}  // namespace detail

/// Simulated annealing over robot coordinates maximizing
/// coverage - lambda * sum(violation^2) under geometric cooling. The proposal
/// moves one robot by a Gaussian step whose scale shrinks with the temperature.
/// Restarts from random in-box layouts until a feasible layout is found.
template <class Rng>
Placement synthesize(const Topology& topology, const FormationParams& params,
                     const std::optional<Placement>& seed_placement, Rng& rng,
                     const AnnealingSchedule& schedule = {}, std::vector<double>* best_history = nullptr) {
  const int n = topology.size();
  if (static_cast<int>(params.d_sen.size()) != n) throw std::invalid_argument("need one sensing radius per robot");
  if (!(params.d_s > 0.0) || params.d_mc < params.d_s)
    throw std::invalid_argument("formation constraints are infeasible: need 0 < d_s <= d_mc");
  if (!((params.box_min.array() < params.box_max.array()).all()))
    throw std::invalid_argument("bounding box is empty");
  if (seed_placement && static_cast<int>(seed_placement->positions.size()) != n)
    throw std::invalid_argument("seed placement has the wrong number of robots");

  double max_r = 0.0;
  for (double r : params.d_sen) max_r = std::max(max_r, r);
  const double lambda =
      schedule.penalty_weight > 0.0 ? schedule.penalty_weight : 1e3 * std::numbers::pi * max_r * max_r;
  const double sigma0 = schedule.step_fraction * (params.box_max - params.box_min).norm();
  auto objective = [&](const Placement& p) {
    return coverage(p, params) - lambda * detail::squared_violation(p, topology, params);
  };
  auto feasible = [&](const Placement& p) { return constraints_ok(p, topology, params, 1e-6).ok; };

  std::optional<Placement> best_feasible;
  double best_feasible_j = -std::numeric_limits<double>::infinity();
  Placement best_any;
  double best_any_j = -std::numeric_limits<double>::infinity();

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, std::max(0, n - 1));

  for (int restart = 0; restart < schedule.max_restarts && !best_feasible; ++restart) {
    Placement cur = (restart == 0 && seed_placement) ? *seed_placement : detail::random_in_box(n, params, rng);
    for (auto& x : cur.positions) x = x.cwiseMax(params.box_min).cwiseMin(params.box_max);
    double cur_j = objective(cur);
    if (feasible(cur) && cur_j > best_feasible_j) {
      best_feasible = cur;
      best_feasible_j = cur_j;
    }
    if (cur_j > best_any_j) {
      best_any = cur;
      best_any_j = cur_j;
    }
    if (n == 0) break;

    const double t0 = std::max(schedule.initial_temperature_fraction * std::abs(coverage(cur, params)), 1e-9);
    double temperature = t0;
    for (int k = 0; k < schedule.proposals; ++k) {
      if (k > 0 && k % schedule.proposals_per_temperature == 0) temperature *= schedule.cooling;
      const double sigma = sigma0 * std::max(temperature / t0, 1e-3);
      Placement cand = cur;
      Vec3& x = cand.positions[static_cast<std::size_t>(pick(rng))];
      for (int a = 0; a < 3; ++a) x(a) += sigma * normal(rng);
      x = x.cwiseMax(params.box_min).cwiseMin(params.box_max);
      const double cand_j = objective(cand);
      const double accept = cand_j >= cur_j ? 1.0 : std::exp((cand_j - cur_j) / temperature);
      if (unit(rng) < accept) {
        cur = std::move(cand);
        cur_j = cand_j;
        if (cur_j > best_feasible_j && feasible(cur)) {
          best_feasible = cur;
          best_feasible_j = cur_j;
        }
        if (cur_j > best_any_j) {
          best_any = cur;
          best_any_j = cur_j;
        }
      }
      if (best_history) best_history->push_back(best_feasible_j);
    }
  }
  if (!best_feasible) throw FormationError("no feasible formation found", best_any);
  return *best_feasible;
}

}  // namespace rtt
