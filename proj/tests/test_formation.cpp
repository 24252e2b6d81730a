#include "rtt/formation.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace rtt;

namespace {

constexpr double kPi = std::numbers::pi;

FormationParams unit_params(int n, double r = 1.0) {
  FormationParams p;
  p.d_sen.assign(static_cast<std::size_t>(n), r);
  return p;
}

bool has_kind(const ConstraintCheck& c, Violation::Kind k) {
  for (const auto& v : c.violations)
    if (v.kind == k) return true;
  return false;
}

}  // namespace

TEST(Coverage, DisjointPair) {
  const Placement p{{Vec3(0, 0, 0), Vec3(2, 0, 0)}};
  EXPECT_NEAR(coverage(p, unit_params(2)), 2 * kPi, 1e-12);
  const Placement far{{Vec3(0, 0, 0), Vec3(50, 0, 0)}};
  EXPECT_NEAR(coverage(far, unit_params(2)), 2 * kPi, 1e-12);
}

TEST(Coverage, CoincidentPair) {
  const Placement p{{Vec3(1, 1, 1), Vec3(1, 1, 1)}};
  EXPECT_NEAR(coverage(p, unit_params(2)), -2 * kPi, 1e-12);
}

TEST(Coverage, SingleRobot) {
  const Placement p{{Vec3(3, 4, 5)}};
  EXPECT_NEAR(coverage(p, unit_params(1)), kPi, 1e-12);
}

TEST(CoverageProperty, MatchesUnionAreaWhenDiscsAreDisjoint) {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> coord(-100, 100);
  std::uniform_real_distribution<double> radius(1, 8);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 5;
    Placement p;
    FormationParams params;
    std::vector<std::pair<double, double>> centers;
    while (static_cast<int>(p.positions.size()) < n) {
      const Vec3 x(coord(rng), coord(rng), 0.0);
      const double r = radius(rng);
      bool clear = true;
      for (std::size_t j = 0; j < p.positions.size(); ++j)
        clear = clear && (x - p.positions[j]).norm() >= 2.0 * std::max(r, params.d_sen[j]);
      if (!clear) continue;
      p.positions.push_back(x);
      params.d_sen.push_back(r);
      centers.emplace_back(x(0), x(1));
    }
    const double mc = oracle::union_area_monte_carlo(centers, params.d_sen, 200000, 900 + trial);
    const double cov = coverage(p, params);
    EXPECT_NEAR(cov, mc, 0.005 * mc);
  }
}

TEST(Constraints, EdgeBeyondCommunicationRange) {
  FormationParams params = unit_params(2);
  const Placement p{{Vec3(0, 0, 0), Vec3(params.d_mc + 0.1, 0, 0)}};
  const auto c = constraints_ok(p, Topology::line(2), params);
  EXPECT_FALSE(c.ok);
  ASSERT_EQ(c.violations.size(), 1u);
  EXPECT_EQ(c.violations[0].kind, Violation::Kind::out_of_comm_range);
  EXPECT_NEAR(c.violations[0].magnitude, 0.1, 1e-12);
  // The same distance is fine without the edge.
  EXPECT_TRUE(constraints_ok(p, Topology(2), params).ok);
}

TEST(Constraints, PairTooClose) {
  FormationParams params = unit_params(2);
  const Placement p{{Vec3(0, 0, 0), Vec3(params.d_s / 2, 0, 0)}};
  for (const Topology& t : {Topology::line(2), Topology(2)}) {
    const auto c = constraints_ok(p, t, params);
    EXPECT_FALSE(c.ok);
    EXPECT_TRUE(has_kind(c, Violation::Kind::too_close));
  }
}

TEST(Constraints, BoxAndTargetView) {
  FormationParams params = unit_params(2, 20.0);
  params.trackers_in_range = {1};
  params.target_pos = Vec3(0, 0, 0);
  const Placement p{{Vec3(101, 0, 0), Vec3(30, 0, 0)}};
  const auto c = constraints_ok(p, Topology(2), params);
  EXPECT_TRUE(has_kind(c, Violation::Kind::outside_box));
  EXPECT_TRUE(has_kind(c, Violation::Kind::target_out_of_view));
  EXPECT_EQ(c.violations.size(), 2u);
}

TEST(Constraints, HandBuiltFeasibleLayout) {
  FormationParams params = unit_params(4, 20.0);
  params.trackers_in_range = {0, 1, 2, 3};
  params.target_pos = Vec3(0, 0, 0);
  const Placement p{{Vec3(0, 0, 0), Vec3(7, 0, 0), Vec3(14, 0, 0), Vec3(7, 7, 0)}};
  const Topology t(4, {{0, 1}, {1, 2}, {1, 3}});
  const auto c = constraints_ok(p, t, params);
  EXPECT_TRUE(c.ok);
  EXPECT_TRUE(c.violations.empty());
}

TEST(Synthesize, SingleRobotSeesTheTarget) {
  std::mt19937_64 rng(1);
  FormationParams params = unit_params(1, 20.0);
  params.trackers_in_range = {0};
  params.target_pos = Vec3(30, -40, 0);
  const Placement p = synthesize(Topology(1), params, std::nullopt, rng);
  ASSERT_EQ(p.positions.size(), 1u);
  EXPECT_TRUE(constraints_ok(p, Topology(1), params).ok);
  EXPECT_NEAR(coverage(p, params), kPi * 400.0, 1e-9);
}

TEST(Synthesize, TwoRobotsSpreadToCommunicationRange) {
  std::mt19937_64 rng(2);
  FormationParams params = unit_params(2, 20.0);
  const Topology t = Topology::line(2);
  const Placement p = synthesize(t, params, std::nullopt, rng);
  ASSERT_TRUE(constraints_ok(p, t, params).ok);
  const double dist = (p.positions[0] - p.positions[1]).norm();
  EXPECT_GE(dist, params.d_s - 1e-6);
  EXPECT_LE(dist, params.d_mc + 1e-6);

  // Coverage of two discs at distance x is pi (2 r^2 - (2r - x)^2); for
  // x <= 2r it grows with x, so the best feasible separation is d_mc.
  auto cov_at = [&](double x) {
    return -coverage(Placement{{Vec3::Zero(), Vec3(x, 0, 0)}}, params);
  };
  const auto [x_best, neg_best] = oracle::grid_min(cov_at, params.d_s, params.d_mc, 1e-3);
  EXPECT_NEAR(x_best, std::min(params.d_mc, 2 * params.d_sen[0]), 1e-9);
  EXPECT_GE(coverage(p, params), -cov_at(params.d_s));
  EXPECT_NEAR(coverage(p, params), -neg_best, 0.01 * std::abs(neg_best));
}

TEST(Synthesize, InfeasibleSpecificationsAreRejected) {
  std::mt19937_64 rng(3);
  FormationParams params = unit_params(2, 20.0);
  params.d_mc = 4.0;  // below d_s
  EXPECT_THROW(synthesize(Topology::line(2), params, std::nullopt, rng), std::invalid_argument);
  FormationParams box = unit_params(2, 20.0);
  box.box_max(0) = box.box_min(0);
  EXPECT_THROW(synthesize(Topology::line(2), box, std::nullopt, rng), std::invalid_argument);
  EXPECT_THROW(synthesize(Topology::line(3), unit_params(2), std::nullopt, rng), std::invalid_argument);
}

TEST(Synthesize, ImpossibleLayoutReportsBestAttempt) {
  std::mt19937_64 rng(4);
  FormationParams params = unit_params(3, 20.0);
  params.box_min = Vec3(0, 0, 0);
  params.box_max = Vec3(1, 1, 1);  // three robots 5 m apart cannot fit
  AnnealingSchedule quick;
  quick.proposals = 500;
  quick.max_restarts = 2;
  try {
    (void)synthesize(Topology::line(3), params, std::nullopt, rng, quick);
    FAIL() << "expected a formation error";
  } catch (const FormationError& e) {
    EXPECT_EQ(e.best_attempt.positions.size(), 3u);
  }
}

TEST(SynthesizeProperty, OutputsAreFeasibleOnRandomTopologies) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coord(-60, 60);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 2 + trial % 6;
    std::vector<Edge> edges;
    for (auto [a, b] : oracle::random_connected_edges(n, rng, 0.3)) edges.emplace_back(a, b);
    const Topology t(n, edges);
    FormationParams params = unit_params(n, 20.0);
    params.target_pos = Vec3(coord(rng), coord(rng), 0.0);
    for (int i = 0; i < n; ++i) params.trackers_in_range.push_back(i);
    const Placement p = synthesize(t, params, std::nullopt, rng);
    const auto check = constraints_ok(p, t, params, 1e-6);
    EXPECT_TRUE(check.ok) << "trial " << trial << " with " << check.violations.size() << " violations";
  }
}

TEST(SynthesizeProperty, WarmStartIsNeverWorsened) {
  std::mt19937_64 rng(6);
  FormationParams params = unit_params(3, 20.0);
  const Topology t = Topology::line(3);
  const Placement seed{{Vec3(0, 0, 0), Vec3(9, 0, 0), Vec3(18, 0, 0)}};
  ASSERT_TRUE(constraints_ok(seed, t, params).ok);
  const Placement p = synthesize(t, params, seed, rng);
  EXPECT_GE(coverage(p, params), coverage(seed, params));
}

TEST(SynthesizeProperty, BestSoFarNeverDecreases) {
  std::mt19937_64 rng(7);
  FormationParams params = unit_params(4, 20.0);
  std::vector<double> history;
  (void)synthesize(Topology::line(4), params, std::nullopt, rng, {}, &history);
  ASSERT_FALSE(history.empty());
  for (std::size_t k = 1; k < history.size(); ++k) EXPECT_GE(history[k], history[k - 1]);
}

TEST(SynthesizeProperty, Deterministic) {
  FormationParams params = unit_params(5, 20.0);
  params.trackers_in_range = {0, 2};
  const Topology t(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
  std::mt19937_64 a(99), b(99);
  const Placement pa = synthesize(t, params, std::nullopt, a);
  const Placement pb = synthesize(t, params, std::nullopt, b);
  for (std::size_t i = 0; i < pa.positions.size(); ++i) EXPECT_EQ(pa.positions[i], pb.positions[i]);
}
