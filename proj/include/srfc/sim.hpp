#pragma once
//------------------------------------------------------------------------------
// Closed-loop simulation.
//
// One control step at time t:
//   1. refresh the hysteresis graph and the estimator maps;
//   2. every agent computes its nominal input, assembles its barrier
//      constraints and solves its QP, all against the same snapshot;
//   3. metrics and events for time t are recorded;
//   4. inputs are held over [t, t + dt] while positions, velocities, estimator
//      states and tracking auxiliaries are advanced with classical RK4.
//------------------------------------------------------------------------------
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "srfc/cbf.hpp"
#include "srfc/geometry.hpp"
#include "srfc/nominal.hpp"
#include "srfc/qp.hpp"
#include "srfc/world.hpp"

namespace srfc {

// Allowance for inter-sample excursions of the barrier margins.
inline constexpr double kDiscretizationTol = 1e-3;

// Largest eta * h used inside one control step.
inline constexpr double kMaxEstimatorStep = 0.05;

inline constexpr double kEmptyMargin = std::numeric_limits<double>::infinity();

struct AgentRecord {
  Vec2 position;
  Vec2 velocity;
  Vec2 control;
  Vec2 nominal;
  QpStatus status = QpStatus::optimal;
  double slack = 0.0;
  bool nominal_feasible = true;  // nominal already met every constraint
  bool in_region = false;
};

struct StepRecord {
  double t = 0.0;
  std::vector<AgentRecord> agents;
  double min_pair_distance = kEmptyMargin;
  double min_h_external = kEmptyMargin;
  double min_h_internal = kEmptyMargin;
  double formation_error = 0.0;
  std::vector<Edge> edges;
  bool connected = true;
  bool all_leaders_in_region = false;
  std::optional<double> t_f;       // set on the first record with every leader inside
  double max_estimator_error = 0.0;  // max |vhat_ij - (v_i - v_j)| over live edges
};

struct Event {
  enum class Kind { edge_gain, edge_loss, region_entry, relaxed_qp, collision, connectivity_loss };
  double t = 0.0;
  Kind kind = Kind::edge_gain;
  std::string detail;
};

inline const char* to_string(Event::Kind k) {
  switch (k) {
    case Event::Kind::edge_gain: return "edge-gain";
    case Event::Kind::edge_loss: return "edge-loss";
    case Event::Kind::region_entry: return "region-entry";
    case Event::Kind::relaxed_qp: return "relaxed-qp";
    case Event::Kind::collision: return "collision";
    case Event::Kind::connectivity_loss: return "connectivity-loss";
  }
  return "unknown";
}

inline const char* to_string(QpStatus s) { return s == QpStatus::optimal ? "optimal" : "relaxed"; }

struct TrajectoryLog {
  std::vector<StepRecord> records;
  std::vector<Event> events;
  std::optional<double> t_f;

  std::size_t count(Event::Kind k) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [k](const Event& e) { return e.kind == k; }));
  }
};

// A run stopped on a collision or a disconnected graph. Carries the log up to
// and including the failing record.
class SimulationAbort : public std::runtime_error {
 public:
  SimulationAbort(Event::Kind kind, double t, const std::string& what, TrajectoryLog log = {})
      : std::runtime_error("t=" + std::to_string(t) + ": " + what), kind_(kind), t_(t), log_(std::move(log)) {}
  Event::Kind kind() const { return kind_; }
  double time() const { return t_; }
  const TrajectoryLog& log() const { return log_; }
  void attach(TrajectoryLog log) { log_ = std::move(log); }

 private:
  Event::Kind kind_;
  double t_;
  TrajectoryLog log_;
};

// Sum over ordered pairs i != j of |p_i - p_j - d_ij|^2.
inline double formation_error(const std::vector<Vec2>& positions, const FormationSpec& formation) {
  double e = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = 0; j < positions.size(); ++j)
      if (i != j)
        e += squared_norm(positions[i] - positions[j] -
                          formation.displacement(static_cast<AgentId>(i), static_cast<AgentId>(j)));
  return e;
}

struct Margins {
  double min_pair_distance = kEmptyMargin;
  double min_h_external = kEmptyMargin;
  double min_h_internal = kEmptyMargin;
};

inline Margins min_margins(const World& world, const std::vector<ConvexRegion>& obstacles,
                           const ControllerParams& params) {
  Margins m;
  const auto pos = world.positions();
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t j = i + 1; j < pos.size(); ++j)
      m.min_pair_distance = std::min(m.min_pair_distance, norm(pos[i] - pos[j]));
  for (const auto& p : pos)
    for (const auto& s : sensed_obstacles(p, obstacles, params.r))
      m.min_h_external = std::min(m.min_h_external, squared_norm(p - s.closest) - params.delta_ex * params.delta_ex);
  for (const auto& [a, b] : world.graph.edges())
    m.min_h_internal = std::min(m.min_h_internal, squared_norm(pos[static_cast<std::size_t>(a)] -
                                                               pos[static_cast<std::size_t>(b)]) -
                                                      params.delta_in * params.delta_in);
  return m;
}

struct AgentControl {
  NominalBreakdown nominal;
  QpProblem problem;
  QpSolution solution;
  bool nominal_feasible = true;
};

// Control of agent i from the world snapshot; uses only what agent i senses.
inline AgentControl compute_control(const World& world, const Scenario& scenario, const ConvexRegion& target,
                                    AgentId i, double t) {
  const auto& params = scenario.params;
  const auto& self = world.agents.at(static_cast<std::size_t>(i));
  const auto ref = reference_velocity(scenario.reference, t);

  std::vector<NeighborData> neighbors;
  std::vector<CbfConstraint> constraints;
  for (AgentId j : world.graph.neighbors(i)) {
    const auto& other = world.agents.at(static_cast<std::size_t>(j));
    const Vec2 phi = self.phi.at(j);
    neighbors.push_back({other.position, phi, scenario.formation.displacement(i, j)});
    auto c = internal_constraint(self.position, other.position,
                                 velocity_estimate(phi, self.position, other.position, params.eta), params);
    c.subject = i;
    c.other = j;
    constraints.push_back(c);
  }
  for (const auto& s : sensed_obstacles(self.position, scenario.obstacles, params.r)) {
    auto c = external_constraint(self.position, self.velocity, s.closest, params.k0, params.k1, params.delta_ex);
    c.subject = i;
    c.other = static_cast<int>(s.index);
    constraints.push_back(c);
  }

  AgentControl out;
  out.nominal = nominal_control(self, neighbors, target, params, ref.derivative);
  out.problem = QpProblem{out.nominal.total, std::move(constraints), params.u_max};
  out.nominal_feasible = is_feasible(out.problem, out.nominal.total);
  out.solution = solve(out.problem);
  return out;
}

namespace detail {

// Flat augmented state for the integrator.
struct Augmented {
  std::vector<Vec2> p, v, gamma, phi;

  void axpy(double s, const Augmented& d) {
    for (std::size_t k = 0; k < p.size(); ++k) p[k] += s * d.p[k];
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += s * d.v[k];
    for (std::size_t k = 0; k < gamma.size(); ++k) gamma[k] += s * d.gamma[k];
    for (std::size_t k = 0; k < phi.size(); ++k) phi[k] += s * d.phi[k];
  }
};

}  // namespace detail

class Simulator {
 public:
  explicit Simulator(Scenario scenario)
      : scenario_(std::move(scenario)),
        control_target_(scenario_.target_margin > 0.0 ? shrink(scenario_.target, scenario_.target_margin)
                                                      : scenario_.target),
        world_(make_world(scenario_)) {
    const double ed = scenario_.params.eta * scenario_.dt;
    substeps_ = std::max(1, static_cast<int>(std::ceil(ed / kMaxEstimatorStep - 1e-12)));
    for (const auto& a : world_.agents) was_inside_.push_back(contains(scenario_.target, a.position));
  }

  const Scenario& scenario() const { return scenario_; }
  const World& world() const { return world_; }
  World& mutable_world() { return world_; }
  const ConvexRegion& control_target() const { return control_target_; }
  const TrajectoryLog& log() const { return log_; }
  std::size_t step_index() const { return k_; }
  double time() const { return static_cast<double>(k_) * scenario_.dt; }
  int substeps() const { return substeps_; }

  // Refreshes the graph, computes and records every control at the current
  // time; advances the state by dt when `advance` is set.
  const StepRecord& step(bool advance = true) {
    const double t = time();
    refresh_graph(t);
    std::vector<AgentControl> controls;
    controls.reserve(world_.agents.size());
    try {
      for (const auto& a : world_.agents)
        controls.push_back(compute_control(world_, scenario_, control_target_, a.id, t));
      record(t, controls);
    } catch (const CollisionError& e) {
      log_.events.push_back({t, Event::Kind::collision, e.what()});
      throw SimulationAbort(Event::Kind::collision, t, e.what());
    }
    check_abort(t);
    if (advance) {
      std::vector<Vec2> u;
      for (const auto& c : controls) u.push_back(c.solution.z);
      integrate(t, u);
      ++k_;
    }
    return log_.records.back();
  }

  TrajectoryLog run() {
    const auto steps = static_cast<std::size_t>(std::ceil(scenario_.duration / scenario_.dt - 1e-9));
    try {
      for (std::size_t n = 0; n < steps; ++n) step(true);
      step(false);
    } catch (SimulationAbort& abort) {
      abort.attach(log_);
      throw;
    }
    return log_;
  }

 private:
  void refresh_graph(double t) {
    const auto pos = world_.positions();
    NeighborGraph next = update_neighbors(world_.graph, pos);
    for (const auto& e : world_.graph.edges())
      if (!next.has_edge(e.first, e.second))
        log_.events.push_back({t, Event::Kind::edge_loss, edge_text(e)});
    for (const auto& e : next.edges())
      if (!world_.graph.has_edge(e.first, e.second))
        log_.events.push_back({t, Event::Kind::edge_gain, edge_text(e)});
    world_.graph = std::move(next);
    for (auto& a : world_.agents) a = sync_estimator_state(std::move(a), world_.graph.neighbors(a.id), pos);
  }

  static std::string edge_text(const Edge& e) {
    return std::to_string(e.first) + "-" + std::to_string(e.second);
  }

  void record(double t, const std::vector<AgentControl>& controls) {
    const auto& params = scenario_.params;
    StepRecord rec;
    rec.t = t;
    const auto pos = world_.positions();
    bool leaders_inside = true;
    for (std::size_t i = 0; i < world_.agents.size(); ++i) {
      const auto& a = world_.agents[i];
      const auto& c = controls[i];
      AgentRecord ar;
      ar.position = a.position;
      ar.velocity = a.velocity;
      ar.control = c.solution.z;
      ar.nominal = c.nominal.total;
      ar.status = c.solution.status;
      ar.slack = c.solution.slack;
      ar.nominal_feasible = c.nominal_feasible;
      ar.in_region = contains(scenario_.target, a.position);
      if (a.is_leader && !ar.in_region) leaders_inside = false;
      if (ar.in_region && !was_inside_[i])
        log_.events.push_back({t, Event::Kind::region_entry, "agent " + std::to_string(i)});
      was_inside_[i] = ar.in_region;
      if (c.solution.status == QpStatus::relaxed)
        log_.events.push_back({t, Event::Kind::relaxed_qp,
                               "agent " + std::to_string(i) + " slack " + std::to_string(c.solution.slack)});
      for (const auto& [j, phi] : a.phi) {
        const auto& b = world_.agents[static_cast<std::size_t>(j)];
        const Vec2 est = velocity_estimate(phi, a.position, b.position, params.eta);
        rec.max_estimator_error = std::max(rec.max_estimator_error, norm(est - (a.velocity - b.velocity)));
      }
      rec.agents.push_back(ar);
    }
    const auto m = min_margins(world_, scenario_.obstacles, params);
    rec.min_pair_distance = m.min_pair_distance;
    rec.min_h_external = m.min_h_external;
    rec.min_h_internal = m.min_h_internal;
    rec.formation_error = formation_error(pos, scenario_.formation);
    rec.edges.assign(world_.graph.edges().begin(), world_.graph.edges().end());
    rec.connected = is_connected(world_.graph);
    rec.all_leaders_in_region = leaders_inside;
    if (leaders_inside && !log_.t_f) {
      log_.t_f = t;
      rec.t_f = t;
    }
    log_.records.push_back(std::move(rec));
  }

  void check_abort(double t) {
    const auto& rec = log_.records.back();
    const auto& params = scenario_.params;
    if (rec.min_pair_distance < params.delta_in - kDiscretizationTol) {
      const std::string msg = "inter-agent distance " + std::to_string(rec.min_pair_distance) + " below δ_in";
      log_.events.push_back({t, Event::Kind::collision, msg});
      throw SimulationAbort(Event::Kind::collision, t, msg);
    }
    if (!rec.connected) {
      log_.events.push_back({t, Event::Kind::connectivity_loss, "neighbor graph disconnected"});
      throw SimulationAbort(Event::Kind::connectivity_loss, t, "neighbor graph disconnected");
    }
  }

  detail::Augmented derivative(double t, const detail::Augmented& x, const std::vector<Vec2>& u) const {
    const auto& params = scenario_.params;
    const Vec2 v_d = reference_velocity(scenario_.reference, t).velocity;
    detail::Augmented d;
    d.p = x.v;
    d.v = u;
    d.gamma.resize(x.gamma.size());
    for (std::size_t i = 0; i < x.gamma.size(); ++i) d.gamma[i] = gamma_derivative(x.gamma[i], x.p[i], v_d, params.c5);
    d.phi.resize(x.phi.size());
    for (std::size_t k = 0; k < phi_index_.size(); ++k) {
      const auto [i, j] = phi_index_[k];
      d.phi[k] = velocity_estimate(x.phi[k], x.p[i], x.p[j], params.eta);
    }
    return d;
  }

  void integrate(double t, const std::vector<Vec2>& u) {
    detail::Augmented x;
    phi_index_.clear();
    for (const auto& a : world_.agents) {
      x.p.push_back(a.position);
      x.v.push_back(a.velocity);
      x.gamma.push_back(a.gamma);
      for (const auto& [j, phi] : a.phi) {
        phi_index_.emplace_back(static_cast<std::size_t>(a.id), static_cast<std::size_t>(j));
        x.phi.push_back(phi);
      }
    }
    const double h = scenario_.dt / substeps_;
    for (int s = 0; s < substeps_; ++s) {
      const double ts = t + s * h;
      const auto k1 = derivative(ts, x, u);
      auto x2 = x;
      x2.axpy(h / 2, k1);
      const auto k2 = derivative(ts + h / 2, x2, u);
      auto x3 = x;
      x3.axpy(h / 2, k2);
      const auto k3 = derivative(ts + h / 2, x3, u);
      auto x4 = x;
      x4.axpy(h, k3);
      const auto k4 = derivative(ts + h, x4, u);
      x.axpy(h / 6, k1);
      x.axpy(h / 3, k2);
      x.axpy(h / 3, k3);
      x.axpy(h / 6, k4);
    }
    std::size_t k = 0;
    for (std::size_t i = 0; i < world_.agents.size(); ++i) {
      auto& a = world_.agents[i];
      a.position = x.p[i];
      a.velocity = x.v[i];
      a.gamma = x.gamma[i];
      for (auto& [j, phi] : a.phi) phi = x.phi[k++];
    }
  }

  Scenario scenario_;
  ConvexRegion control_target_;
  World world_;
  TrajectoryLog log_;
  std::vector<bool> was_inside_;
  std::vector<std::pair<std::size_t, std::size_t>> phi_index_;
  std::size_t k_ = 0;
  int substeps_ = 1;
};

inline TrajectoryLog run(const Scenario& scenario) { return Simulator(scenario).run(); }

}  // namespace srfc
