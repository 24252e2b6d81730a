#pragma once

#include "rtt/network.hpp"
#include "rtt/simplex.hpp"

#include <chrono>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace rtt {

enum class Strategy { accg, tccg, greedy };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::accg: return "accg";
    case Strategy::tccg: return "tccg";
    case Strategy::greedy: return "greedy";
  }
  return "unknown";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "accg" || s == "ACCG") return Strategy::accg;
  if (s == "tccg" || s == "TCCG") return Strategy::tccg;
  if (s == "greedy" || s == "GREEDY") return Strategy::greedy;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

/// Inputs of one reconfiguration: post-innovation information matrices at the
/// event epoch (with the deteriorated noise covariance already applied).
struct InfoSnapshot {
  std::vector<Mat> omegas;
  int deteriorated_id = 0;
  Configuration prev_config;
  int n_e = 1;
  double mu = 1e-3;
};

struct SolverOptions {
  double eps_diag = 1e-3;    // lower bound on every self-loop weight
  double edge_floor = 1e-3;  // lower bound on the weight of every edge in the topology
  BudgetMode mode = BudgetMode::add_only;
  double fw_gap_tol = 1e-6;
  int fw_max_iter = 500;
  int max_cuts = 200;
  double cut_tol = 1e-7;  // LMI violation at which cutting stops and the point is pulled inward
};

struct InnerResult {
  Mat weights;
  double objective = 0.0;
  int iterations = 0;
};

struct SolverReport {
  Configuration chosen;
  double objective = std::numeric_limits<double>::quiet_NaN();
  int topologies_evaluated = 0;
  int inner_iterations = 0;
  double wall_time = 0.0;
};

// --- objectives --------------------------------------------------------------

/// Tr(Omega_d(1)) = sum_j A_dj Tr(Omega_j(0)).
inline double accg_objective(const Mat& weights, const std::vector<Mat>& omegas, int deteriorated) {
  double v = 0.0;
  for (std::size_t j = 0; j < omegas.size(); ++j)
    v += weights(deteriorated, static_cast<Eigen::Index>(j)) * omegas[j].trace();
  return v;
}

/// One-step fused information matrices Delta_i = sum_j A_ij Omega_j.
inline std::vector<Mat> one_step_information(const Mat& weights, const std::vector<Mat>& omegas) {
  const auto n = static_cast<Eigen::Index>(omegas.size());
  std::vector<Mat> delta;
  delta.reserve(omegas.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    Mat d = Mat::Zero(omegas[0].rows(), omegas[0].cols());
    for (Eigen::Index j = 0; j < n; ++j)
      if (weights(i, j) != 0.0) d += weights(i, j) * omegas[static_cast<std::size_t>(j)];
    delta.push_back(symmetrized(d));
  }
  return delta;
}

/// (1/n) sum_i Tr(Delta_i^-1), the team-average one-step covariance trace.
inline double tccg_objective(const Mat& weights, const std::vector<Mat>& omegas) {
  double v = 0.0;
  for (const Mat& d : one_step_information(weights, omegas)) v += spd_inverse(d, "fused information").trace();
  return v / static_cast<double>(omegas.size());
}

namespace detail {

/// Consensus weights parameterised by one scalar per edge; diagonals absorb the remainder.
inline Mat weights_from_edges(const Topology& t, const Vec& w) {
  const int n = t.size();
  Mat a = Mat::Zero(n, n);
  const auto& edges = t.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    a(edges[k].a, edges[k].b) = a(edges[k].b, edges[k].a) = w(static_cast<Eigen::Index>(k));
  }
  for (int i = 0; i < n; ++i) a(i, i) = 1.0 - a.row(i).sum();
  return a;
}

inline Vec edges_from_weights(const Topology& t, const Mat& a) {
  const auto& edges = t.edges();
  Vec w(static_cast<Eigen::Index>(edges.size()));
  for (std::size_t k = 0; k < edges.size(); ++k) w(static_cast<Eigen::Index>(k)) = a(edges[k].a, edges[k].b);
  return w;
}

/// Weight polytope {w >= floor, sum_{e at i} w_e <= 1 - eps_diag} plus accumulated
/// spectral cuts, expressed for the shifted variable y = w - floor >= 0.
class WeightPolytope {
 public:
  WeightPolytope(const Topology& t, const SolverOptions& opt, double mu)
      : topo_(t), floor_(opt.edge_floor), eps_(opt.eps_diag), mu_(mu) {
    const auto n = t.size();
    const auto m = static_cast<Eigen::Index>(t.edge_count());
    A_ = Mat::Zero(n, m);
    b_ = Vec::Constant(n, 1.0 - eps_);
    const auto& edges = t.edges();
    for (Eigen::Index k = 0; k < m; ++k) {
      const Edge& e = edges[static_cast<std::size_t>(k)];
      A_(e.a, k) = 1.0;
      A_(e.b, k) = 1.0;
      b_(e.a) -= floor_;
      b_(e.b) -= floor_;
    }
    if ((b_.array() < 0.0).any()) throw std::invalid_argument("weight polytope is empty for this topology");
  }

  Eigen::Index dim() const { return A_.cols(); }

  bool contains(const Vec& w, double tol = 1e-10) const {
    if ((w.array() < floor_ - tol).any()) return false;
    const Vec y = w.array() - floor_;
    return ((A_ * y - b_).array() <= tol).all();
  }

  /// Smallest eigenvalue margin of the connectivity LMI, positive when satisfied.
  double spectral_margin(const Vec& w) const {
    return (1.0 - mu_) - second_eigenvalue(weights_from_edges(topo_, w));
  }

  bool spectral_ok(const Vec& w) const { return spectral_margin(w) >= -5e-10; }

 private:
  void add_cut_along(const Vec& v) {
    Vec g(dim());
    const auto& edges = topo_.edges();
    for (Eigen::Index k = 0; k < dim(); ++k) {
      const Edge& e = edges[static_cast<std::size_t>(k)];
      const double d = v(e.a) - v(e.b);
      g(k) = d * d;
    }
    A_.conservativeResize(A_.rows() + 1, Eigen::NoChange);
    b_.conservativeResize(b_.size() + 1);
    const double scale = g.maxCoeff();
    if (!(scale > 0.0)) return;
    A_.row(A_.rows() - 1) = -g.transpose() / scale;
    b_(b_.size() - 1) = -(mu_ - floor_ * g.sum()) / scale;
  }

 public:

  /// Adds the supporting half-space sum_e w_e (v_a - v_b)^2 >= mu for every
  /// disagreement eigenvector v of the weights at w whose eigenvalue exceeds 1 - mu.
  int add_cuts(const Vec& w) {
    const auto n = topo_.size();
    const Mat centered = weights_from_edges(topo_, w) - Mat::Constant(n, n, 1.0 / n);
    Eigen::SelfAdjointEigenSolver<Mat> es(centered);
    int added = 0;
    for (Eigen::Index col = n - 1; col >= 0; --col) {
      if (added > 0 && es.eigenvalues()(col) <= 1.0 - mu_) break;
      add_cut_along(es.eigenvectors().col(col));
      ++added;
    }
    return added;
  }

  /// argmax c^T w over the polytope with the current cuts.
  Vec maximize(const Vec& c) const {
    const LpResult r = solve_lp(c, A_, b_);
    if (r.status != LpStatus::optimal) throw NumericError("weight LP has no optimal vertex");
    Vec w = r.x.array() + floor_;
    if (!contains(w, 1e-8)) throw NumericError("weight LP returned a point outside the polytope");
    return w;
  }

 private:
  Topology topo_;
  double floor_;
  double eps_;
  double mu_;
  Mat A_;
  Vec b_;
};

/// Smallest step toward `anchor` (which satisfies `ok`) that satisfies `ok`.
inline Vec bisect_toward(const Vec& from, const Vec& anchor, const std::function<bool(const Vec&)>& ok) {
  if (ok(from)) return from;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ok(from + mid * (anchor - from)))
      hi = mid;
    else
      lo = mid;
  }
  return from + hi * (anchor - from);
}

/// Interior starting point: the supplied warm start when it is feasible for
/// this topology, Metropolis weights otherwise.
inline Vec starting_point(const Topology& t, const WeightPolytope& poly, const Mat* warm) {
  if (warm && warm->rows() == t.size()) {
    const Vec w = edges_from_weights(t, *warm);
    const Mat back = weights_from_edges(t, w);
    if ((back - *warm).cwiseAbs().maxCoeff() < 1e-9 && poly.contains(w) && poly.spectral_ok(w)) return w;
  }
  const Vec w = edges_from_weights(t, metropolis_matrix(t));
  if (!poly.contains(w) || !poly.spectral_ok(w))
    throw NumericError("Metropolis weights violate the weight constraints");
  return w;
}

struct TeamObjective {
  const Topology& topo;
  const std::vector<Mat>& omegas;

  double value(const Vec& w) const { return tccg_objective(weights_from_edges(topo, w), omegas); }

  Vec gradient(const Vec& w) const {
    const auto n = static_cast<double>(omegas.size());
    const auto delta = one_step_information(weights_from_edges(topo, w), omegas);
    std::vector<Mat> inv_sq;
    inv_sq.reserve(delta.size());
    for (const Mat& d : delta) {
      const Mat inv = spd_inverse(d, "fused information");
      inv_sq.push_back(inv * inv);
    }
    const auto& edges = topo.edges();
    Vec g(static_cast<Eigen::Index>(edges.size()));
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const auto a = static_cast<std::size_t>(edges[k].a);
      const auto b = static_cast<std::size_t>(edges[k].b);
      const Mat diff = omegas[b] - omegas[a];
      // d Tr(D^-1) = -Tr(D^-1 dD D^-1) = -Tr(dD D^-2)
      g(static_cast<Eigen::Index>(k)) =
          -((diff.cwiseProduct(inv_sq[a])).sum() - (diff.cwiseProduct(inv_sq[b])).sum()) / n;
    }
    return g;
  }
};

}  // namespace detail

/// Maximizes the deteriorated robot's one-step information trace over the
/// weights supported on `topology`. The objective is linear in the edge
/// weights, so this is an LP; the connectivity LMI is enforced by
/// cutting planes at the top disagreement eigenvector.
inline InnerResult accg_inner(const Topology& topology, const InfoSnapshot& snap, const SolverOptions& opt = {},
                              const Mat* warm = nullptr) {
  if (!is_connected_bfs(topology)) throw std::invalid_argument("inner solve needs a connected topology");
  const int d = snap.deteriorated_id;
  detail::WeightPolytope poly(topology, opt, snap.mu);
  const auto& edges = topology.edges();
  Vec c = Vec::Zero(poly.dim());
  std::vector<double> tr(snap.omegas.size());
  for (std::size_t j = 0; j < snap.omegas.size(); ++j) tr[j] = snap.omegas[j].trace();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (e.a == d) c(static_cast<Eigen::Index>(k)) = tr[static_cast<std::size_t>(e.b)] - tr[static_cast<std::size_t>(d)];
    if (e.b == d) c(static_cast<Eigen::Index>(k)) = tr[static_cast<std::size_t>(e.a)] - tr[static_cast<std::size_t>(d)];
  }

  const Vec start = detail::starting_point(topology, poly, warm);
  InnerResult res;
  Vec w;
  bool feasible = false;
  int cuts = 0;
  for (;;) {
    ++res.iterations;
    w = poly.maximize(c);
    const double margin = poly.spectral_margin(w);
    feasible = margin >= -5e-10;
    // The optimum usually sits on the curved LMI boundary, which cuts only
    // approach in the limit; once close, finish by a short step inward.
    if (feasible || margin >= -opt.cut_tol || cuts >= opt.max_cuts) break;
    cuts += poly.add_cuts(w);
  }
  if (!feasible) w = detail::bisect_toward(w, start, [&](const Vec& v) { return poly.spectral_ok(v); });
  if (c.dot(w) < c.dot(start)) w = start;
  res.weights = detail::weights_from_edges(topology, w);
  res.objective = accg_objective(res.weights, snap.omegas, d);
  return res;
}

/// Minimizes the team-average one-step covariance trace (1/n) sum Tr(Delta_i^-1)
/// over the weights supported on `topology` by away-step Frank-Wolfe with an
/// adaptive backtracking step. The linear oracle is an LP over the weight
/// polytope; when a step would leave the LMI region a connectivity cut is added
/// and the step is shortened, so every iterate stays feasible.
inline InnerResult tccg_inner(const Topology& topology, const InfoSnapshot& snap, const SolverOptions& opt = {},
                              const Mat* warm = nullptr) {
  if (!is_connected_bfs(topology)) throw std::invalid_argument("inner solve needs a connected topology");
  detail::WeightPolytope poly(topology, opt, snap.mu);
  const detail::TeamObjective f{topology, snap.omegas};
  const Vec start = detail::starting_point(topology, poly, warm);
  auto lmi_ok = [&](const Vec& v) { return poly.spectral_ok(v); };

  InnerResult res;
  Vec w = start;
  double fw = f.value(w);
  double lipschitz = 1.0;
  int cuts = 0;
  // w is kept as a convex combination of atoms (LP vertices plus the start)
  // so that away steps can shrink the weight of a poor atom.
  std::vector<Vec> atoms{start};
  std::vector<double> alpha{1.0};
  auto atom_index = [&](const Vec& v) -> int {
    for (std::size_t k = 0; k < atoms.size(); ++k)
      if ((atoms[k] - v).lpNorm<Eigen::Infinity>() <= 1e-12) return static_cast<int>(k);
    return -1;
  };

  for (int it = 0; it < opt.fw_max_iter; ++it) {
    ++res.iterations;
    const Vec g = f.gradient(w);
    const Vec s = poly.maximize(-g);
    const double gap = -g.dot(s - w);
    if (gap <= opt.fw_gap_tol) break;

    std::size_t away = 0;
    for (std::size_t k = 1; k < atoms.size(); ++k)
      if (g.dot(atoms[k]) > g.dot(atoms[away])) away = k;
    const double away_gap = g.dot(atoms[away] - w);

    const bool toward = gap >= away_gap || atoms.size() == 1;
    const Vec dir = toward ? Vec(s - w) : Vec(w - atoms[away]);
    const double slope = toward ? gap : away_gap;
    const double gamma_max = toward ? 1.0 : alpha[away] / (1.0 - alpha[away]);
    const double dir_sq = dir.squaredNorm();
    if (dir_sq < 1e-30) break;

    lipschitz *= 0.9;
    double gamma = 0.0;
    double f_next = fw;
    for (int bt = 0; bt < 60; ++bt) {
      gamma = std::min(slope / (lipschitz * dir_sq), gamma_max);
      f_next = f.value(w + gamma * dir);
      if (f_next <= fw - gamma * slope + 0.5 * gamma * gamma * lipschitz * dir_sq) break;
      lipschitz *= 2.0;
    }
    if (!lmi_ok(w + gamma * dir)) {
      // Outer approximation too loose here: cut, then shorten the step to stay feasible.
      if (cuts < opt.max_cuts) cuts += poly.add_cuts(w + gamma * dir);
      double lo = 0.0, hi = gamma;
      for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        (lmi_ok(w + mid * dir) ? lo : hi) = mid;
      }
      gamma = lo;
      f_next = f.value(w + gamma * dir);
    }
    if (!(f_next < fw)) {
      if (cuts < opt.max_cuts && gamma < gamma_max) continue;  // retry against the tightened oracle
      break;
    }

    w += gamma * dir;
    fw = f_next;
    if (toward) {
      for (double& a : alpha) a *= 1.0 - gamma;
      if (gamma >= 1.0) {
        atoms.assign(1, s);
        alpha.assign(1, 1.0);
      } else if (const int k = atom_index(s); k >= 0) {
        alpha[static_cast<std::size_t>(k)] += gamma;
      } else {
        atoms.push_back(s);
        alpha.push_back(gamma);
      }
    } else {
      for (double& a : alpha) a *= 1.0 + gamma;
      alpha[away] -= gamma;
      if (gamma >= gamma_max || alpha[away] <= 1e-14) {
        atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(away));
        alpha.erase(alpha.begin() + static_cast<std::ptrdiff_t>(away));
      }
    }
  }
  if (!lmi_ok(w)) w = detail::bisect_toward(w, start, lmi_ok);
  if (f.value(w) > f.value(start)) w = start;
  res.weights = detail::weights_from_edges(topology, w);
  res.objective = tccg_objective(res.weights, snap.omegas);
  return res;
}

/// Outer layer: exhaustive search over every connected topology within the
/// edit budget of the previous one, inner solve on each, best objective wins.
/// Ties go to the lexicographically smallest set of modified edges.
inline SolverReport solve(Strategy strategy, const InfoSnapshot& snap, const SolverOptions& opt = {}) {
  if (strategy == Strategy::greedy) throw std::invalid_argument("greedy reconfiguration is not an optimization strategy");
  const auto t0 = std::chrono::steady_clock::now();
  const auto candidates = enumerate_candidates(snap.prev_config.topology, snap.n_e, opt.mode);
  if (candidates.empty()) throw std::runtime_error("no connected topology within the edit budget");

  SolverReport report;
  bool have = false;
  for (const auto& cand : candidates) {
    const Mat* warm = cand.topology == snap.prev_config.topology ? &snap.prev_config.weights : nullptr;
    const InnerResult r = strategy == Strategy::accg ? accg_inner(cand.topology, snap, opt, warm)
                                                     : tccg_inner(cand.topology, snap, opt, warm);
    ++report.topologies_evaluated;
    report.inner_iterations += r.iterations;
    const double tie = 1e-9 * std::max(1.0, std::abs(report.objective));
    const bool better = !have || (strategy == Strategy::accg ? r.objective > report.objective + tie
                                                             : r.objective < report.objective - tie);
    if (better) {
      report.chosen = Configuration{cand.topology, r.weights};
      report.objective = r.objective;
      have = true;
    }
  }
  validate_configuration(report.chosen, snap.mu);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

/// Baseline: connect the deteriorated robot to the non-adjacent robot with the
/// smallest previous covariance trace and re-weight with Metropolis weights.
inline Configuration greedy(const InfoSnapshot& snap, const std::vector<double>& traces_P_prev) {
  const Topology& base = snap.prev_config.topology;
  const int d = snap.deteriorated_id;
  int best = -1;
  if (snap.n_e > 0) {
    for (int j = 0; j < base.size(); ++j) {
      if (j == d || base.has_edge(d, j)) continue;
      if (best < 0 || traces_P_prev[static_cast<std::size_t>(j)] < traces_P_prev[static_cast<std::size_t>(best)])
        best = j;
    }
  }
  if (best < 0) return metropolis_weights(base);
  return metropolis_weights(base.with_edge(Edge(d, best)));
}

}  // namespace rtt
