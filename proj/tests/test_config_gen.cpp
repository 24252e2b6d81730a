#include "rtt/config_gen.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace rtt;

namespace {

std::vector<Mat> scalars(std::initializer_list<double> v) {
  std::vector<Mat> out;
  for (double x : v) out.push_back(Mat::Constant(1, 1, x));
  return out;
}

InfoSnapshot snapshot(std::vector<Mat> omegas, const Topology& base, int d, int n_e = 1, double mu = 1e-3) {
  InfoSnapshot s;
  s.omegas = std::move(omegas);
  s.deteriorated_id = d;
  s.prev_config = metropolis_weights(base);
  s.n_e = n_e;
  s.mu = mu;
  return s;
}

std::vector<Mat> diagonal_with_traces(std::initializer_list<double> traces) {
  std::vector<Mat> out;
  for (double t : traces) out.push_back(t / 4.0 * Mat::Identity(4, 4));
  return out;
}

oracle::Polytope polytope_of(const Topology& t, const SolverOptions& opt, double mu) {
  oracle::Polytope p;
  p.n = t.size();
  for (const Edge& e : t.edges()) p.edges.emplace_back(e.a, e.b);
  p.floor = opt.edge_floor;
  p.eps_diag = opt.eps_diag;
  p.mu = mu;
  return p;
}

double team_trace(const Mat& a, const std::vector<Mat>& omegas) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Mat d = Mat::Zero(omegas[0].rows(), omegas[0].cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) d += a(i, j) * omegas[static_cast<std::size_t>(j)];
    total += d.inverse().trace();
  }
  return total / static_cast<double>(a.rows());
}

Topology random_topology(int n, std::mt19937_64& rng, double p) {
  std::vector<Edge> e;
  for (auto [a, b] : oracle::random_connected_edges(n, rng, p)) e.emplace_back(a, b);
  return Topology(n, e);
}

}  // namespace

TEST(AccgInner, TwoRobotsPushWeightToTheBetterNeighbour) {
  const SolverOptions opt;
  const auto snap = snapshot(scalars({1, 5}), Topology::line(2), 0);
  const InnerResult r = accg_inner(Topology::line(2), snap, opt);
  EXPECT_NEAR(r.weights(0, 1), 1.0 - opt.eps_diag, 1e-9);
  EXPECT_NEAR(r.objective, 1.0 + 4.0 * (1.0 - opt.eps_diag), 1e-9);
  EXPECT_NEAR(r.objective, 4.996, 1e-9);
}

TEST(AccgInner, EqualTracesMakeEveryPointOptimal) {
  const Topology t = Topology::line(4);
  const auto snap = snapshot(diagonal_with_traces({3, 3, 3, 3}), t, 1);
  const InnerResult a = accg_inner(t, snap);
  const InnerResult b = accg_inner(t, snap);
  EXPECT_NEAR(a.objective, 3.0, 1e-12);
  EXPECT_EQ(a.weights, b.weights);
}

TEST(AccgInner, RejectsDisconnectedTopology) {
  const Topology t(3, {{0, 1}});
  EXPECT_THROW(accg_inner(t, snapshot(scalars({1, 2, 3}), Topology::line(3), 0)), std::invalid_argument);
}

TEST(AccgInner, ObjectiveIsTraceOfOneStepInformation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 4;
    const Topology t = random_topology(n, rng, 0.4);
    std::vector<Mat> om;
    for (int i = 0; i < n; ++i) om.push_back(oracle::random_spd(4, rng));
    const int d = trial % n;
    const auto snap = InfoSnapshot{om, d, metropolis_weights(t), 1, 1e-3};
    const InnerResult r = accg_inner(t, snap);
    Mat fused = Mat::Zero(4, 4);
    for (int j = 0; j < n; ++j) fused += r.weights(d, j) * om[static_cast<std::size_t>(j)];
    EXPECT_NEAR(r.objective, fused.trace(), 1e-10 * std::abs(r.objective));
  }
}

TEST(AccgInner, BindingConnectivityConstraintStaysFeasibleAndOptimal) {
  // A large mu makes the LMI bind, so the cutting planes do the work.
  std::mt19937_64 rng(8);
  const SolverOptions opt;
  for (int trial = 0; trial < 8; ++trial) {
    const Topology t = random_topology(4, rng, 0.3);
    std::vector<Mat> om;
    for (int i = 0; i < 4; ++i) om.push_back(oracle::random_spd(2, rng) * (1 + 3 * i));
    const double mu = 0.3;
    const auto snap = InfoSnapshot{om, trial % 4, metropolis_weights(t), 1, mu};
    const auto poly = polytope_of(t, opt, mu);
    if (!oracle::feasible(poly, detail::edges_from_weights(t, metropolis_matrix(t)))) continue;
    const InnerResult r = accg_inner(t, snap, opt);
    EXPECT_TRUE(is_connected_spectral(r.weights, mu));
    const auto ref = oracle::random_search(
        poly,
        [&](const oracle::Vec& w) {
          const Mat a = oracle::weight_matrix(poly, w);
          double v = 0.0;
          for (int j = 0; j < 4; ++j) v += a(snap.deteriorated_id, j) * om[static_cast<std::size_t>(j)].trace();
          return -v;
        },
        20000, 40 + static_cast<std::uint64_t>(trial));
    EXPECT_GE(r.objective, -ref.value - 1e-3);
  }
}

TEST(TccgInner, TwoRobotScalarCase) {
  const auto snap = snapshot(scalars({1, 2}), Topology::line(2), 0);
  const InnerResult r = tccg_inner(Topology::line(2), snap);
  EXPECT_NEAR(r.weights(0, 1), 0.5, 1e-3);
  EXPECT_NEAR(r.objective, 2.0 / 3.0, 1e-4);
  const auto [w_grid, f_grid] = oracle::grid_min(
      [](double w) { return 0.5 * (1.0 / (1.0 + w) + 1.0 / (2.0 - w)); }, 1e-3, 1.0 - 1e-3, 1e-4);
  EXPECT_NEAR(r.weights(0, 1), w_grid, 1e-3);
  EXPECT_NEAR(r.objective, f_grid, 1e-4);
}

TEST(TccgInner, IdenticalInformationIsFlat) {
  std::mt19937_64 rng(4);
  const Mat om = oracle::random_spd(4, rng);
  const Topology t = Topology::line(4);
  const auto snap = InfoSnapshot{{om, om, om, om}, 2, metropolis_weights(t), 1, 1e-3};
  const InnerResult r = tccg_inner(t, snap);
  EXPECT_NEAR(r.objective, om.inverse().trace(), 1e-10);
  EXPECT_NEAR(tccg_objective(Mat::Identity(4, 4), snap.omegas), om.inverse().trace(), 1e-10);
}

TEST(TccgInner, NeverWorseThanFeasibleReferencePoints) {
  std::mt19937_64 rng(5);
  const SolverOptions opt;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 4;
    const Topology t = random_topology(n, rng, 0.4);
    std::vector<Mat> om;
    for (int i = 0; i < n; ++i) om.push_back(oracle::random_spd(4, rng));
    const auto snap = InfoSnapshot{om, 0, metropolis_weights(t), 1, 1e-3};
    const InnerResult r = tccg_inner(t, snap, opt);
    EXPECT_LE(r.objective, tccg_objective(metropolis_matrix(t), om) + 1e-12);
    Mat floor_point = Mat::Identity(n, n);
    for (const Edge& e : t.edges()) {
      floor_point(e.a, e.b) = floor_point(e.b, e.a) = opt.edge_floor;
      floor_point(e.a, e.a) -= opt.edge_floor;
      floor_point(e.b, e.b) -= opt.edge_floor;
    }
    EXPECT_LE(r.objective, tccg_objective(floor_point, om) + 1e-12);
    EXPECT_NO_THROW(validate_configuration({t, r.weights}, 1e-3));
  }
}

TEST(TccgInner, MatchesRandomSearchOracle) {
  std::mt19937_64 rng(6);
  const SolverOptions opt;
  for (int trial = 0; trial < 6; ++trial) {
    const Topology t = random_topology(4, rng, 0.3);
    std::vector<Mat> om;
    for (int i = 0; i < 4; ++i) om.push_back(oracle::random_spd(4, rng));
    const auto snap = InfoSnapshot{om, 0, metropolis_weights(t), 1, 1e-3};
    const InnerResult r = tccg_inner(t, snap, opt);
    const auto poly = polytope_of(t, opt, 1e-3);
    const auto ref = oracle::random_search(
        poly, [&](const oracle::Vec& w) { return team_trace(oracle::weight_matrix(poly, w), om); }, 20000,
        60 + static_cast<std::uint64_t>(trial));
    EXPECT_NEAR(r.objective, ref.value, 1e-3);
  }
}

TEST(TccgInner, ReportedObjectiveIsTheAverageInverseTrace) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 3;
    const Topology t = random_topology(n, rng, 0.5);
    std::vector<Mat> om;
    for (int i = 0; i < n; ++i) om.push_back(oracle::random_spd(4, rng));
    const InnerResult r = tccg_inner(t, InfoSnapshot{om, 0, metropolis_weights(t), 1, 1e-3});
    EXPECT_NEAR(r.objective, team_trace(r.weights, om), 1e-8);
  }
}

TEST(Solve, EqualInformationKeepsTheBaseOnTies) {
  const Topology base = Topology::line(4);
  const auto snap = snapshot(diagonal_with_traces({2, 2, 2, 2}), base, 0, 6);
  const SolverReport r = solve(Strategy::tccg, snap);
  EXPECT_EQ(r.chosen.topology, base);
  // The complete graph is reachable and ties the optimum.
  const InnerResult full = tccg_inner(Topology::complete(4), snap);
  EXPECT_NEAR(full.objective, r.objective, 1e-9);
}

TEST(Solve, AccgAddsTheShortcutToTheRichNeighbour) {
  const Topology base = Topology::line(3);
  const auto snap = snapshot(diagonal_with_traces({1, 1, 10}), base, 0);
  const SolverReport r = solve(Strategy::accg, snap);
  EXPECT_TRUE(r.chosen.topology.has_edge(0, 2));
  const InnerResult without = accg_inner(base, snap);
  const InnerResult with = accg_inner(base.with_edge({0, 2}), snap);
  EXPECT_GT(with.objective, without.objective);
  EXPECT_NEAR(r.objective, with.objective, 1e-12);
  EXPECT_EQ(r.topologies_evaluated, 2);
}

TEST(Solve, ZeroBudgetOnlyReweights) {
  std::mt19937_64 rng(10);
  const Topology base = Topology::line(5);
  std::vector<Mat> om;
  for (int i = 0; i < 5; ++i) om.push_back(oracle::random_spd(4, rng));
  const InfoSnapshot snap{om, 2, metropolis_weights(base), 0, 1e-3};
  for (Strategy s : {Strategy::accg, Strategy::tccg}) {
    const SolverReport r = solve(s, snap);
    EXPECT_EQ(r.chosen.topology, base);
    EXPECT_EQ(r.topologies_evaluated, 1);
  }
}

TEST(Solve, ErrorCases) {
  const auto snap = snapshot(scalars({1, 2, 3}), Topology::line(3), 0);
  EXPECT_THROW(solve(Strategy::greedy, snap), std::invalid_argument);
  InfoSnapshot broken = snap;
  broken.prev_config.topology = Topology(3);
  broken.n_e = 1;
  EXPECT_THROW(solve(Strategy::tccg, broken), std::runtime_error);
}

TEST(SolveProperty, ChosenConfigurationIsValidAndWithinBudget) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + trial % 3;
    const Topology base = random_topology(n, rng, 0.2);
    std::vector<Mat> om;
    for (int i = 0; i < n; ++i) om.push_back(oracle::random_spd(4, rng));
    const InfoSnapshot snap{om, trial % n, metropolis_weights(base), 1 + trial % 2, 1e-3};
    for (Strategy s : {Strategy::accg, Strategy::tccg}) {
      const SolverReport r = solve(s, snap);
      EXPECT_NO_THROW(validate_configuration(r.chosen, snap.mu));
      EXPECT_TRUE(is_connected_bfs(r.chosen.topology));
      EXPECT_TRUE(is_connected_spectral(r.chosen, snap.mu));
      EXPECT_LE(frobenius_edge_distance(base, r.chosen.topology), 2.0 * snap.n_e);
      const double check = s == Strategy::accg ? accg_objective(r.chosen.weights, om, snap.deteriorated_id)
                                               : tccg_objective(r.chosen.weights, om);
      EXPECT_NEAR(r.objective, check, 1e-12 * std::abs(check));
    }
  }
}

TEST(SolveProperty, MonotoneAgainstThePreviousConfiguration) {
  std::mt19937_64 rng(14);
  SolverOptions opt;
  opt.mode = BudgetMode::toggle;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + trial % 2;
    const Topology base = random_topology(n, rng, 0.3);
    std::vector<Mat> om;
    for (int i = 0; i < n; ++i) om.push_back(oracle::random_spd(4, rng));
    const InfoSnapshot snap{om, trial % n, metropolis_weights(base), trial % 3, 1e-3};
    const SolverReport t = solve(Strategy::tccg, snap, opt);
    const InnerResult t_base = tccg_inner(base, snap, opt, &snap.prev_config.weights);
    EXPECT_LE(t.objective, t_base.objective + 1e-8);
    EXPECT_LE(t_base.objective, tccg_objective(snap.prev_config.weights, om) + 1e-8);
    const SolverReport a = solve(Strategy::accg, snap, opt);
    const InnerResult a_base = accg_inner(base, snap, opt, &snap.prev_config.weights);
    EXPECT_GE(a.objective, a_base.objective - 1e-8);
    EXPECT_GE(a_base.objective, accg_objective(snap.prev_config.weights, om, snap.deteriorated_id) - 1e-8);
  }
}

TEST(Greedy, ConnectsToTheLowestTraceRobot) {
  const Topology base(3, {{0, 1}, {1, 2}});
  const auto snap = snapshot(scalars({1, 1, 1}), base, 0);
  const Configuration c = greedy(snap, {9.0, 0.8, 0.5});
  EXPECT_TRUE(c.topology.has_edge(0, 2));
  EXPECT_EQ(c.topology.edge_count(), 3u);
  EXPECT_EQ(c.weights, metropolis_matrix(c.topology));
}

TEST(Greedy, SkipsNeighboursAlreadyAdjacent) {
  const Topology base = Topology::line(4);  // robot 1 already sees 0 and 2
  const auto snap = snapshot(scalars({1, 1, 1, 1}), base, 1);
  const Configuration c = greedy(snap, {0.1, 5.0, 0.2, 0.9});
  EXPECT_TRUE(c.topology.has_edge(1, 3));
  EXPECT_EQ(frobenius_edge_distance(base, c.topology), 2.0);
}

TEST(Greedy, FullyConnectedRobotKeepsTopology) {
  const Topology base(3, {{0, 1}, {0, 2}});
  const auto snap = snapshot(scalars({1, 1, 1}), base, 0);
  const Configuration c = greedy(snap, {1.0, 2.0, 3.0});
  EXPECT_EQ(c.topology, base);
  EXPECT_EQ(c.weights, metropolis_matrix(base));
}

TEST(Greedy, ZeroBudgetAddsNothing) {
  const auto snap = snapshot(scalars({1, 1, 1}), Topology::line(3), 0, 0);
  EXPECT_EQ(greedy(snap, {1.0, 2.0, 0.1}).topology, Topology::line(3));
}

TEST(Strategy, ParseAndPrint) {
  for (Strategy s : {Strategy::accg, Strategy::tccg, Strategy::greedy}) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_EQ(parse_strategy("TCCG"), Strategy::tccg);
  EXPECT_THROW(parse_strategy("random"), std::invalid_argument);
}
