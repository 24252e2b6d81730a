#pragma once

// Scenario files are YAML. Every key is optional; missing keys keep the
// defaults of ScenarioConfig. See README.md for the schema.

#include "rtt/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <string>

namespace rtt {

namespace detail {

template <class T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (node && node[key]) out = node[key].as<T>();
}

inline void read_vec3(const YAML::Node& node, const char* key, Vec3& out) {
  if (!node || !node[key]) return;
  const auto v = node[key].as<std::vector<double>>();
  if (v.size() != 3) throw std::invalid_argument(std::string(key) + " must have 3 entries");
  out = Vec3(v[0], v[1], v[2]);
}

inline Mat read_matrix(const YAML::Node& node) {
  const auto rows = node.as<std::vector<std::vector<double>>>();
  if (rows.empty()) throw std::invalid_argument("matrix must have at least one row");
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw std::invalid_argument("ragged matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

}  // namespace detail

inline ScenarioConfig scenario_from_yaml(const YAML::Node& root, ScenarioConfig cfg = {}) {
  using detail::read;
  read(root, "n", cfg.n);
  read(root, "epochs", cfg.epochs);
  read(root, "consensus_rounds", cfg.consensus_rounds);
  read(root, "n_e", cfg.n_e);
  read(root, "mu", cfg.mu);
  read(root, "seed", cfg.seed);
  read(root, "follow_target", cfg.follow_target);
  read(root, "fusion", cfg.fusion);
  if (root["strategy"]) cfg.strategy = parse_strategy(root["strategy"].as<std::string>());
  if (root["error_mode"]) {
    const auto m = root["error_mode"].as<std::string>();
    if (m == "full_state") cfg.error_mode = ErrorMode::full_state;
    else if (m == "position") cfg.error_mode = ErrorMode::position;
    else throw std::invalid_argument("error_mode must be full_state or position");
  }

  if (const auto s = root["solver"]) {
    read(s, "eps_diag", cfg.solver.eps_diag);
    read(s, "edge_floor", cfg.solver.edge_floor);
    read(s, "fw_gap_tol", cfg.solver.fw_gap_tol);
    read(s, "fw_max_iter", cfg.solver.fw_max_iter);
    read(s, "max_cuts", cfg.solver.max_cuts);
    read(s, "cut_tol", cfg.solver.cut_tol);
    if (s["budget_mode"]) {
      const auto m = s["budget_mode"].as<std::string>();
      if (m == "add_only") cfg.solver.mode = BudgetMode::add_only;
      else if (m == "toggle") cfg.solver.mode = BudgetMode::toggle;
      else throw std::invalid_argument("budget_mode must be add_only or toggle");
    }
  }
  if (const auto t = root["target"]) {
    read(t, "dt", cfg.target.dt);
    read(t, "speed", cfg.target.speed);
    read(t, "turn_rate", cfg.target.turn_rate);
    read(t, "q_scale", cfg.target.q_scale);
    read(t, "heading_noise_factor", cfg.target.heading_noise_factor);
    if (t["initial_state"]) {
      const auto v = t["initial_state"].as<std::vector<double>>();
      cfg.target.initial_state = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  }
  if (const auto s = root["sensor"]) {
    if (s["output_matrix"]) cfg.sensor.output_matrix = detail::read_matrix(s["output_matrix"]);
    read(s, "r0", cfg.sensor.r0);
    read(s, "d_sen", cfg.sensor.d_sen);
    read(s, "deterioration_scale", cfg.sensor.deterioration_scale);
  }
  if (const auto p = root["prior"]) {
    read(p, "initial_covariance", cfg.prior.initial_covariance);
    read(p, "perturbation_sd", cfg.prior.perturbation_sd);
  }
  if (const auto e = root["events"]) {
    read(e, "enabled", cfg.events.enabled);
    read(e, "interval", cfg.events.interval);
    read(e, "first", cfg.events.first);
    read(e, "fixed_robot", cfg.events.fixed_robot);
    if (e["selection"]) {
      const auto s = e["selection"].as<std::string>();
      if (s == "random_each") cfg.events.selection = RobotSelection::random_each;
      else if (s == "same_robot") cfg.events.selection = RobotSelection::same_robot;
      else if (s == "fixed") cfg.events.selection = RobotSelection::fixed;
      else throw std::invalid_argument("events.selection must be random_each, same_robot or fixed");
    }
  }
  if (const auto f = root["formation"]) {
    read(f, "d_s", cfg.d_s);
    read(f, "d_mc", cfg.d_mc);
    detail::read_vec3(f, "box_min", cfg.box_min);
    detail::read_vec3(f, "box_max", cfg.box_max);
  }
  if (const auto a = root["annealing"]) {
    read(a, "initial_temperature_fraction", cfg.annealing.initial_temperature_fraction);
    read(a, "cooling", cfg.annealing.cooling);
    read(a, "proposals_per_temperature", cfg.annealing.proposals_per_temperature);
    read(a, "proposals", cfg.annealing.proposals);
    read(a, "step_fraction", cfg.annealing.step_fraction);
    read(a, "penalty_weight", cfg.annealing.penalty_weight);
    read(a, "max_restarts", cfg.annealing.max_restarts);
  }
  cfg.validate();
  return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  try {
    return scenario_from_yaml(YAML::LoadFile(path));
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument("cannot read scenario '" + path + "': " + e.what());
  }
}

}  // namespace rtt
