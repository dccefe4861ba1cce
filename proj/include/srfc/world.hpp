#pragma once
//------------------------------------------------------------------------------
// Multi-agent state, the hysteresis neighbor graph, and scenario configuration.
//
// Neighbor rules (sensing radius r, margin eps):
//   * at t = 0 an edge exists iff the pair is closer than r - eps;
//   * an existing edge is dropped once the pair is at least r apart;
//   * a missing edge is created once the pair is closer than r - eps.
//------------------------------------------------------------------------------
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "srfc/geometry.hpp"

namespace srfc {

using AgentId = int;

struct AgentState {
  AgentId id = 0;
  Vec2 position;
  Vec2 velocity;
  bool is_leader = false;
  std::map<AgentId, Vec2> phi;  // relative-velocity estimator state, one per neighbor
  Vec2 gamma;                   // tracking auxiliary

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct FormationSpec {
  std::vector<Vec2> target_positions;

  Vec2 displacement(AgentId i, AgentId j) const {
    return target_positions.at(static_cast<std::size_t>(i)) - target_positions.at(static_cast<std::size_t>(j));
  }
  friend bool operator==(const FormationSpec&, const FormationSpec&) = default;
};

using Edge = std::pair<AgentId, AgentId>;  // stored with first < second

class NeighborGraph {
 public:
  NeighborGraph() = default;
  NeighborGraph(std::size_t agent_count, double radius, double margin)
      : n_(agent_count), radius_(radius), margin_(margin) {}

  // Edges are exactly the pairs closer than r - eps.
  static NeighborGraph initial(const std::vector<Vec2>& positions, double radius, double margin) {
    NeighborGraph g(positions.size(), radius, margin);
    for (std::size_t i = 0; i < positions.size(); ++i)
      for (std::size_t j = i + 1; j < positions.size(); ++j)
        if (norm(positions[i] - positions[j]) < radius - margin)
          g.edges_.insert({static_cast<AgentId>(i), static_cast<AgentId>(j)});
    return g;
  }

  std::size_t size() const { return n_; }
  double radius() const { return radius_; }
  double margin() const { return margin_; }
  const std::set<Edge>& edges() const { return edges_; }

  bool has_edge(AgentId i, AgentId j) const {
    if (i == j) return false;
    return edges_.count(ordered(i, j)) != 0;
  }
  void add_edge(AgentId i, AgentId j) {
    if (i != j) edges_.insert(ordered(i, j));
  }
  void remove_edge(AgentId i, AgentId j) { edges_.erase(ordered(i, j)); }

  // Ascending neighbor ids of agent i.
  std::vector<AgentId> neighbors(AgentId i) const {
    std::vector<AgentId> out;
    for (const auto& [a, b] : edges_) {
      if (a == i) out.push_back(b);
      else if (b == i) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  friend bool operator==(const NeighborGraph&, const NeighborGraph&) = default;

 private:
  static Edge ordered(AgentId i, AgentId j) { return i < j ? Edge{i, j} : Edge{j, i}; }

  std::size_t n_ = 0;
  double radius_ = 1.0;
  double margin_ = 0.1;
  std::set<Edge> edges_;
};

inline NeighborGraph update_neighbors(const NeighborGraph& graph, const std::vector<Vec2>& positions) {
  NeighborGraph next = graph;
  const double r = graph.radius();
  const double join = r - graph.margin();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      const auto a = static_cast<AgentId>(i);
      const auto b = static_cast<AgentId>(j);
      const double d = norm(positions[i] - positions[j]);
      if (graph.has_edge(a, b)) {
        if (d >= r) next.remove_edge(a, b);
      } else if (d < join) {
        next.add_edge(a, b);
      }
    }
  }
  return next;
}

// Breadth-first reachability from agent 0.
inline bool is_connected(const NeighborGraph& graph) {
  const std::size_t n = graph.size();
  if (n <= 1) return true;
  std::vector<std::vector<AgentId>> adj(n);
  for (const auto& [a, b] : graph.edges()) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::queue<AgentId> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const AgentId cur = frontier.front();
    frontier.pop();
    for (AgentId nb : adj[static_cast<std::size_t>(cur)]) {
      if (!seen[static_cast<std::size_t>(nb)]) {
        seen[static_cast<std::size_t>(nb)] = true;
        ++reached;
        frontier.push(nb);
      }
    }
  }
  return reached == n;
}

// Aligns the estimator map with the neighbor set: new neighbors start at the
// current relative position, dropped neighbors are erased.
inline AgentState sync_estimator_state(AgentState agent, const std::vector<AgentId>& neighbors,
                                       const std::vector<Vec2>& positions) {
  std::map<AgentId, Vec2> phi;
  for (AgentId j : neighbors) {
    auto it = agent.phi.find(j);
    if (it != agent.phi.end())
      phi.emplace(j, it->second);
    else
      phi.emplace(j, agent.position - positions.at(static_cast<std::size_t>(j)));
  }
  agent.phi = std::move(phi);
  return agent;
}

struct ControllerParams {
  double c1 = 15.0;   // formation potential
  double c2 = 0.2;    // velocity consensus
  double c3 = 1.5;    // region attraction
  double c4 = 5.0;    // velocity tracking
  double c5 = 4.0;    // tracking auxiliary rate
  double eta = 100.0; // relative-velocity estimator rate
  double k0 = 1.0;
  double k1 = 5.0;
  double delta_in = 0.1;
  double delta_ex = 0.5;
  double u_max = 5.0;
  double mu = 0.036;
  double r = 6.0;
  double epsilon = 0.6;
  bool velocity_tracking = true;  // false drops the feed-forward and tracking terms

  friend bool operator==(const ControllerParams&, const ControllerParams&) = default;
};

struct ReferenceVelocity {
  enum class Mode { zero, circular, constant };
  Mode mode = Mode::zero;
  double v0 = 0.0;
  double theta = 0.0;
  Vec2 value;

  static ReferenceVelocity zero() { return {}; }
  static ReferenceVelocity circular(double v0, double theta) { return {Mode::circular, v0, theta, {}}; }
  static ReferenceVelocity constant(Vec2 v) { return {Mode::constant, 0.0, 0.0, v}; }

  friend bool operator==(const ReferenceVelocity&, const ReferenceVelocity&) = default;
};

struct ReferenceSample {
  Vec2 velocity;
  Vec2 derivative;
};

inline ReferenceSample reference_velocity(const ReferenceVelocity& ref, double t) {
  switch (ref.mode) {
    case ReferenceVelocity::Mode::circular: {
      const double c = std::cos(ref.theta * t);
      const double s = std::sin(ref.theta * t);
      return {{ref.v0 * c, ref.v0 * s}, {-ref.v0 * ref.theta * s, ref.v0 * ref.theta * c}};
    }
    case ReferenceVelocity::Mode::constant:
      return {ref.value, {}};
    case ReferenceVelocity::Mode::zero:
      break;
  }
  return {};
}

struct Scenario {
  std::string name;
  std::string description;
  std::vector<AgentState> agents;  // initial states; phi is rebuilt by make_world
  FormationSpec formation;
  ConvexRegion target;
  double target_margin = 0.0;  // inward offset applied to the target before control
  std::vector<ConvexRegion> obstacles;
  ControllerParams params;
  ReferenceVelocity reference;
  double duration = 10.0;
  double dt = 1e-3;

  std::vector<AgentId> leaders() const {
    std::vector<AgentId> out;
    for (const auto& a : agents)
      if (a.is_leader) out.push_back(a.id);
    return out;
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct World {
  std::vector<AgentState> agents;
  NeighborGraph graph;

  std::vector<Vec2> positions() const {
    std::vector<Vec2> out;
    out.reserve(agents.size());
    for (const auto& a : agents) out.push_back(a.position);
    return out;
  }
};

// Builds the t = 0 world: initial graph from the r - eps rule, estimator
// states at the initial relative positions.
inline World make_world(const Scenario& scenario) {
  World w;
  w.agents = scenario.agents;
  for (std::size_t i = 0; i < w.agents.size(); ++i) {
    w.agents[i].id = static_cast<AgentId>(i);
    w.agents[i].phi.clear();
  }
  const auto pos = w.positions();
  w.graph = NeighborGraph::initial(pos, scenario.params.r, scenario.params.epsilon);
  for (auto& a : w.agents) a = sync_estimator_state(std::move(a), w.graph.neighbors(a.id), pos);
  return w;
}

struct Violation {
  std::string field;
  std::string message;
};

// Every violated scenario invariant, with the field path it concerns.
inline std::vector<Violation> validate(const Scenario& s) {
  std::vector<Violation> out;
  auto fail = [&](std::string field, std::string message) {
    out.push_back({std::move(field), std::move(message)});
  };
  const auto& p = s.params;

  const std::pair<const char*, double> gains[] = {{"c1", p.c1}, {"c2", p.c2}, {"c3", p.c3}, {"c4", p.c4},
                                                  {"c5", p.c5}, {"eta", p.eta}, {"k0", p.k0}, {"k1", p.k1},
                                                  {"mu", p.mu}, {"u_max", p.u_max}, {"r", p.r}};
  for (const auto& [name, value] : gains)
    if (!(value > 0.0) || !std::isfinite(value)) fail(std::string("params.") + name, "must be strictly positive");
  if (!(p.k1 * p.k1 >= 4.0 * p.k0))
    fail("params.k1", "k1² ≥ 4k0 required (s² + k1 s + k0 must have real negative roots)");
  if (!(p.epsilon > 0.0 && p.epsilon < p.r)) fail("params.epsilon", "hysteresis margin must lie in (0, r)");
  if (!(p.delta_in > 0.0 && p.delta_in < p.r / 2.0)) fail("params.delta_in", "δ_in must lie in (0, r/2)");
  if (!(p.delta_ex > 0.0 && p.delta_ex < p.r / 2.0)) fail("params.delta_ex", "δ_ex must lie in (0, r/2)");
  if (!(s.dt > 0.0) || !std::isfinite(s.dt)) fail("dt", "must be strictly positive");
  if (!(s.duration >= 0.0) || !std::isfinite(s.duration)) fail("duration", "must be non-negative");

  if (auto msg = region_violation(s.target); !msg.empty()) {
    fail("target", msg);
  } else if (!(s.target_margin >= 0.0)) {
    fail("target_margin", "must be non-negative");
  } else if (s.target_margin > 0.0) {
    try {
      (void)shrink(s.target, s.target_margin);
    } catch (const EmptyRegion&) {
      fail("target_margin", "offset leaves an empty target region");
    }
  }
  for (std::size_t k = 0; k < s.obstacles.size(); ++k)
    if (auto msg = region_violation(s.obstacles[k]); !msg.empty())
      fail("obstacles[" + std::to_string(k) + "]", msg);

  const std::size_t n = s.agents.size();
  if (n == 0) fail("agents", "at least one agent required");
  if (s.formation.target_positions.size() != n) {
    fail("formation", "one target position per agent required");
  } else if (n > 0 && p.r > p.epsilon) {
    auto g = NeighborGraph::initial(s.formation.target_positions, p.r, p.epsilon);
    if (!is_connected(g)) fail("formation", "desired formation graph (threshold r - ε) must be connected");
  }

  std::vector<Vec2> pos;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = s.agents[i];
    const std::string path = "agents[" + std::to_string(i) + "]";
    if (!is_finite(a.position)) fail(path + ".position", "must be finite");
    if (!(a.velocity == Vec2{})) fail(path + ".velocity", "initial velocity must be zero");
    pos.push_back(a.position);
    for (std::size_t k = 0; k < s.obstacles.size(); ++k)
      if (region_violation(s.obstacles[k]).empty() && contains(s.obstacles[k], a.position))
        fail(path + ".position", "inside obstacles[" + std::to_string(k) + "]");
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (norm(pos[i] - pos[j]) < p.delta_in)
        fail("agents[" + std::to_string(j) + "].position",
             "closer than δ_in to agents[" + std::to_string(i) + "]");
  if (n > 0 && p.r > 0.0 && p.epsilon < p.r && !is_connected(NeighborGraph::initial(pos, p.r, p.epsilon)))
    fail("agents", "initial network connected (threshold r - ε) is required");
  return out;
}

// Non-fatal configuration remarks.
inline std::vector<std::string> warnings(const Scenario& s) {
  std::vector<std::string> out;
  if (s.params.eta * s.dt > 0.5) out.push_back("eta * dt > 0.5: estimator integration may be inaccurate");
  if (s.leaders().empty()) out.push_back("no leaders: the group has no access to the target region");
  return out;
}

}  // namespace srfc
