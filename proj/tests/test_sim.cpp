#include <gtest/gtest.h>

#include <cmath>

#include "srfc/sim.hpp"
#include "support.hpp"

using namespace srfc;

namespace {

Scenario pair_scenario(Vec2 a, Vec2 b, Vec2 fa, Vec2 fb) {
  Scenario s;
  s.name = "pair";
  s.agents.resize(2);
  s.agents[0].position = a;
  s.agents[1].position = b;
  s.formation.target_positions = {fa, fb};
  s.target = ConvexRegion::circle({0, 50}, 1);
  s.duration = 1.0;
  s.dt = 1e-3;
  return s;
}

}  // namespace

TEST(Step, LoneAgentAtRestStaysPut) {
  Scenario s;
  s.agents.resize(1);
  s.agents[0].position = {1.5, -2};
  s.formation.target_positions = {{0, 0}};
  s.target = ConvexRegion::circle({10, 10}, 1);
  Simulator sim(s);
  for (int k = 0; k < 10; ++k) {
    const auto& rec = sim.step();
    EXPECT_EQ(rec.agents[0].control, (Vec2{0, 0}));
  }
  EXPECT_EQ(sim.world().agents[0].position, (Vec2{1.5, -2}));
  EXPECT_EQ(sim.world().agents[0].velocity, (Vec2{0, 0}));
  EXPECT_NEAR(sim.time(), 0.01, 1e-15);
}

TEST(Step, EstimatorRelaxesAtRateEta) {
  auto s = pair_scenario({1, 0}, {0, 0}, {1, 0}, {0, 0});
  s.params.c1 = 0.0;
  s.params.c2 = 0.0;  // positions stay where they are
  Simulator sim(s);
  sim.mutable_world().agents[0].phi.at(1) = {0, 0};
  sim.step();
  const Vec2 phi = sim.world().agents[0].phi.at(1);
  EXPECT_NEAR(phi.x, 1.0 - std::exp(-0.1), 1e-8);
  EXPECT_NEAR(phi.x, 0.0951626, 1e-7);
  EXPECT_EQ(phi.y, 0.0);
  EXPECT_EQ(sim.world().agents[0].position, (Vec2{1, 0}));
}

TEST(Step, MirrorSymmetricPairStaysSymmetric) {
  auto s = pair_scenario({-2, 0.4}, {2, 0.4}, {-0.5, 0}, {0.5, 0});
  s.duration = 4.0;
  const auto log = run(s);
  for (const auto& rec : log.records) {
    const auto& a = rec.agents[0];
    const auto& b = rec.agents[1];
    EXPECT_NEAR(a.position.x, -b.position.x, 1e-9);
    EXPECT_NEAR(a.position.y, b.position.y, 1e-9);
    EXPECT_NEAR(a.velocity.x, -b.velocity.x, 1e-9);
    EXPECT_NEAR(a.velocity.y, b.velocity.y, 1e-9);
  }
  EXPECT_LT(log.records.back().formation_error, log.records.front().formation_error);
}

TEST(Step, ControlUsesOnlySensedState) {
  const auto s = fixtures::load("a_nominal.json");
  World w = make_world(s);
  for (const auto& a : w.agents) {
    const auto nb = w.graph.neighbors(a.id);
    for (const auto& other : w.agents) {
      if (other.id == a.id || std::find(nb.begin(), nb.end(), other.id) != nb.end()) continue;
      World perturbed = w;
      auto& o = perturbed.agents[static_cast<std::size_t>(other.id)];
      o.velocity = {3, -2};
      o.gamma = {7, 7};
      const auto base = compute_control(w, s, s.target, a.id, 0.0);
      const auto moved = compute_control(perturbed, s, s.target, a.id, 0.0);
      EXPECT_EQ(base.solution.z, moved.solution.z);
      EXPECT_EQ(base.nominal.total, moved.nominal.total);
    }
    // neighbor velocities never enter either
    World perturbed = w;
    for (AgentId j : nb) perturbed.agents[static_cast<std::size_t>(j)].velocity = {1, 1};
    EXPECT_EQ(compute_control(w, s, s.target, a.id, 0.0).solution.z,
              compute_control(perturbed, s, s.target, a.id, 0.0).solution.z);
  }
}

TEST(Run, ZeroDurationGivesOneRecord) {
  auto s = fixtures::load("a_nominal.json");
  s.duration = 0.0;
  const auto log = run(s);
  ASSERT_EQ(log.records.size(), 1u);
  EXPECT_EQ(log.records[0].t, 0.0);
}

TEST(Run, RecordCountAndTimestamps) {
  auto s = fixtures::load("a_nominal.json");
  s.duration = 0.25;
  const auto log = run(s);
  ASSERT_EQ(log.records.size(), 251u);
  for (std::size_t k = 0; k < log.records.size(); ++k)
    EXPECT_EQ(log.records[k].t, static_cast<double>(k) * s.dt);
}

TEST(Run, SaturationAndDeterminism) {
  auto s = fixtures::load("c_single_obstacle.json");
  s.duration = 3.0;
  const auto a = run(s);
  const auto b = run(s);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k)
    for (std::size_t i = 0; i < a.records[k].agents.size(); ++i) {
      const auto& x = a.records[k].agents[i];
      const auto& y = b.records[k].agents[i];
      EXPECT_LE(inf_norm(x.control), s.params.u_max + 1e-12);
      EXPECT_EQ(x.position, y.position);
      EXPECT_EQ(x.velocity, y.velocity);
      EXPECT_EQ(x.control, y.control);
    }
}

TEST(Run, CollisionAborts) {
  auto s = fixtures::load("c_single_obstacle.json");
  Simulator sim(s);
  const auto& obs = s.obstacles.at(0);
  sim.mutable_world().agents[0].position = obs.is_circle() ? obs.as_circle().center : obs.as_polygon().vertices[0];
  try {
    sim.step();
    FAIL() << "expected abort";
  } catch (const SimulationAbort& e) {
    EXPECT_EQ(e.kind(), Event::Kind::collision);
  }
}

TEST(Run, ConnectivityLossAborts) {
  auto s = pair_scenario({0, 0}, {1, 0}, {0, 0}, {1, 0});
  Simulator sim(s);
  sim.mutable_world().agents[1].position = {50, 0};
  try {
    sim.step();
    FAIL() << "expected abort";
  } catch (const SimulationAbort& e) {
    EXPECT_EQ(e.kind(), Event::Kind::connectivity_loss);
  }
}

TEST(FormationError, Examples) {
  FormationSpec formation{{{0, 0}, {2, 1}, {-1, 3}}};
  EXPECT_EQ(formation_error(formation.target_positions, formation), 0.0);
  std::vector<Vec2> shifted;
  for (const auto& p : formation.target_positions) shifted.push_back(p + Vec2{0.5, -7});
  EXPECT_NEAR(formation_error(shifted, formation), 0.0, 1e-24);
  FormationSpec two{{{1, 0}, {0, 0}}};
  EXPECT_EQ(formation_error({{2, 0}, {0, 0}}, two), 2.0);
}

TEST(MinMargins, Examples) {
  ControllerParams p;
  World w;
  w.agents.resize(2);
  w.agents[0].position = {0, 0};
  w.agents[1].position = {1.15, 0};
  w.graph = NeighborGraph::initial(w.positions(), p.r, p.epsilon);
  const auto m = min_margins(w, {}, p);
  EXPECT_DOUBLE_EQ(m.min_pair_distance, 1.15);
  EXPECT_EQ(m.min_h_external, kEmptyMargin);
  EXPECT_NEAR(m.min_h_internal, 1.15 * 1.15 - 0.01, 1e-15);

  World lone;
  lone.agents.resize(1);
  lone.graph = NeighborGraph(1, p.r, p.epsilon);
  const auto e = min_margins(lone, {}, p);
  EXPECT_EQ(e.min_pair_distance, kEmptyMargin);
  EXPECT_EQ(e.min_h_external, kEmptyMargin);
  EXPECT_EQ(e.min_h_internal, kEmptyMargin);

  lone.agents[0].position = {1.0 + p.delta_ex, 0};
  EXPECT_NEAR(min_margins(lone, {ConvexRegion::circle({0, 0}, 1)}, p).min_h_external, 0.0, 1e-15);
}

TEST(Run, LogMetricsMatchRecomputation) {
  auto s = fixtures::load("d_narrow_gap.json");
  s.duration = 2.0;
  Simulator sim(s);
  for (int k = 0; k < 2000; ++k) {
    const World before = sim.world();
    const auto& rec = sim.step();
    const auto m = min_margins(before, s.obstacles, s.params);
    EXPECT_EQ(rec.min_pair_distance, m.min_pair_distance);
    EXPECT_EQ(rec.min_h_external, m.min_h_external);
    EXPECT_EQ(rec.formation_error, formation_error(before.positions(), s.formation));
    EXPECT_EQ(rec.connected, is_connected(update_neighbors(before.graph, before.positions())));
  }
}
