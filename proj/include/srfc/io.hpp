#pragma once
//------------------------------------------------------------------------------
// Scenario files (JSON) and run tables (CSV).
//
// Scenario schema, SI units throughout:
//
//   {
//     "name": "nominal", "description": "...",
//     "duration": 40.0, "dt": 0.001,
//     "params": { "c1": 15, "c2": 0.2, "c3": 1.5, "c4": 5, "c5": 4, "eta": 100,
//                 "k0": 1, "k1": 5, "delta_in": 0.1, "delta_ex": 0.5,
//                 "u_max": 5, "r": 6, "epsilon": 0.6, "mu": 0.036,
//                 "velocity_tracking": true },
//     "reference_velocity": { "mode": "circular", "v0": 0.5, "theta": 0.2 },
//                         | { "mode": "constant", "value": [vx, vy] } | { "mode": "zero" }
//     "target": { "type": "circle", "center": [x, y], "radius": R }
//             | { "type": "polygon", "vertices": [[x, y], ...] },   // counter-clockwise
//     "target_margin": 0.0,
//     "obstacles": [ <region>, ... ],
//     "formation": [[x, y], ...],                                   // one per agent
//     "agents": [ { "position": [x, y], "velocity": [0, 0], "leader": true,
//                   "gamma": [x, y] }, ... ]
//   }
//
// Optional keys and their defaults: epsilon = 0.1 r, mu = 1e-3 r^2,
// velocity_tracking = true, target_margin = 0, obstacles = [],
// reference_velocity = zero, agent velocity = 0, leader = false,
// gamma = initial position.
//------------------------------------------------------------------------------
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "srfc/sim.hpp"
#include "srfc/world.hpp"

namespace srfc {

using json = nlohmann::json;

// Malformed scenario text or a value of the wrong shape.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ScenarioError(path + key + ": missing required field");
  return j.at(key);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError(path + ": expected a number");
  return j.get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  return number(j.at(key), path + key);
}

inline Vec2 vec2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError(path + ": expected [x, y]");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

inline json to_json(const Vec2& v) { return json::array({v.x, v.y}); }

inline ConvexRegion region_from_json(const json& j, const std::string& path) {
  const std::string type = require(j, "type", path + ".").get<std::string>();
  if (type == "circle")
    return ConvexRegion::circle(vec2(require(j, "center", path + "."), path + ".center"),
                                number(require(j, "radius", path + "."), path + ".radius"));
  if (type == "polygon") {
    const auto& vs = require(j, "vertices", path + ".");
    if (!vs.is_array()) throw ScenarioError(path + ".vertices: expected an array");
    std::vector<Vec2> verts;
    for (std::size_t k = 0; k < vs.size(); ++k)
      verts.push_back(vec2(vs[k], path + ".vertices[" + std::to_string(k) + "]"));
    return ConvexRegion::polygon(std::move(verts));
  }
  throw ScenarioError(path + ".type: unknown region type '" + type + "'");
}

inline json region_to_json(const ConvexRegion& r) {
  if (r.is_circle()) {
    const auto& c = r.as_circle();
    return {{"type", "circle"}, {"center", to_json(c.center)}, {"radius", c.radius}};
  }
  json verts = json::array();
  for (const auto& v : r.as_polygon().vertices) verts.push_back(to_json(v));
  return {{"type", "polygon"}, {"vertices", verts}};
}

// 1-based line and column of a byte offset.
inline std::string locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte just past the offending token
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw ScenarioError("parse error at " + detail::locate(text, at) + ": " + e.what());
  }
}

inline Scenario scenario_from_json(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ScenarioError("scenario: expected an object");
  try {
    Scenario s;
    s.name = j.value("name", std::string{});
    s.description = j.value("description", std::string{});
    s.duration = number(require(j, "duration", ""), "duration");
    s.dt = number(require(j, "dt", ""), "dt");

    const auto& pj = require(j, "params", "");
    auto& p = s.params;
    auto req = [&](const char* key) { return number(require(pj, key, "params."), std::string("params.") + key); };
    p.c1 = req("c1");
    p.c2 = req("c2");
    p.c3 = req("c3");
    p.c4 = req("c4");
    p.c5 = req("c5");
    p.eta = req("eta");
    p.k0 = req("k0");
    p.k1 = req("k1");
    p.delta_in = req("delta_in");
    p.delta_ex = req("delta_ex");
    p.u_max = req("u_max");
    p.r = req("r");
    p.epsilon = number_or(pj, "epsilon", 0.1 * p.r, "params.");
    p.mu = number_or(pj, "mu", 1e-3 * p.r * p.r, "params.");
    if (pj.contains("velocity_tracking")) {
      if (!pj["velocity_tracking"].is_boolean()) throw ScenarioError("params.velocity_tracking: expected a boolean");
      p.velocity_tracking = pj["velocity_tracking"].get<bool>();
    }

    if (j.contains("reference_velocity")) {
      const auto& rj = j["reference_velocity"];
      const std::string mode = require(rj, "mode", "reference_velocity.").get<std::string>();
      if (mode == "zero")
        s.reference = ReferenceVelocity::zero();
      else if (mode == "circular")
        s.reference = ReferenceVelocity::circular(number(require(rj, "v0", "reference_velocity."), "reference_velocity.v0"),
                                                  number(require(rj, "theta", "reference_velocity."), "reference_velocity.theta"));
      else if (mode == "constant")
        s.reference = ReferenceVelocity::constant(vec2(require(rj, "value", "reference_velocity."), "reference_velocity.value"));
      else
        throw ScenarioError("reference_velocity.mode: unknown mode '" + mode + "'");
    }

    s.target = region_from_json(require(j, "target", ""), "target");
    s.target_margin = number_or(j, "target_margin", 0.0, "");
    if (j.contains("obstacles")) {
      const auto& oj = j["obstacles"];
      if (!oj.is_array()) throw ScenarioError("obstacles: expected an array");
      for (std::size_t k = 0; k < oj.size(); ++k)
        s.obstacles.push_back(region_from_json(oj[k], "obstacles[" + std::to_string(k) + "]"));
    }

    const auto& fj = require(j, "formation", "");
    if (!fj.is_array()) throw ScenarioError("formation: expected an array");
    for (std::size_t k = 0; k < fj.size(); ++k)
      s.formation.target_positions.push_back(vec2(fj[k], "formation[" + std::to_string(k) + "]"));

    const auto& aj = require(j, "agents", "");
    if (!aj.is_array()) throw ScenarioError("agents: expected an array");
    for (std::size_t k = 0; k < aj.size(); ++k) {
      const std::string path = "agents[" + std::to_string(k) + "]";
      AgentState a;
      a.id = static_cast<AgentId>(k);
      a.position = vec2(require(aj[k], "position", path + "."), path + ".position");
      if (aj[k].contains("velocity")) a.velocity = vec2(aj[k]["velocity"], path + ".velocity");
      if (aj[k].contains("leader")) {
        if (!aj[k]["leader"].is_boolean()) throw ScenarioError(path + ".leader: expected a boolean");
        a.is_leader = aj[k]["leader"].get<bool>();
      }
      a.gamma = aj[k].contains("gamma") ? vec2(aj[k]["gamma"], path + ".gamma") : a.position;
      s.agents.push_back(a);
    }
    return s;
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
}

inline json scenario_to_json(const Scenario& s) {
  using detail::to_json;
  const auto& p = s.params;
  json j;
  j["name"] = s.name;
  j["description"] = s.description;
  j["duration"] = s.duration;
  j["dt"] = s.dt;
  j["params"] = {{"c1", p.c1},       {"c2", p.c2},       {"c3", p.c3},
                 {"c4", p.c4},       {"c5", p.c5},       {"eta", p.eta},
                 {"k0", p.k0},       {"k1", p.k1},       {"delta_in", p.delta_in},
                 {"delta_ex", p.delta_ex}, {"u_max", p.u_max}, {"r", p.r},
                 {"epsilon", p.epsilon}, {"mu", p.mu}, {"velocity_tracking", p.velocity_tracking}};
  switch (s.reference.mode) {
    case ReferenceVelocity::Mode::zero: j["reference_velocity"] = {{"mode", "zero"}}; break;
    case ReferenceVelocity::Mode::circular:
      j["reference_velocity"] = {{"mode", "circular"}, {"v0", s.reference.v0}, {"theta", s.reference.theta}};
      break;
    case ReferenceVelocity::Mode::constant:
      j["reference_velocity"] = {{"mode", "constant"}, {"value", to_json(s.reference.value)}};
      break;
  }
  j["target"] = detail::region_to_json(s.target);
  j["target_margin"] = s.target_margin;
  j["obstacles"] = json::array();
  for (const auto& o : s.obstacles) j["obstacles"].push_back(detail::region_to_json(o));
  j["formation"] = json::array();
  for (const auto& f : s.formation.target_positions) j["formation"].push_back(to_json(f));
  j["agents"] = json::array();
  for (const auto& a : s.agents)
    j["agents"].push_back({{"position", to_json(a.position)},
                           {"velocity", to_json(a.velocity)},
                           {"leader", a.is_leader},
                           {"gamma", to_json(a.gamma)}});
  return j;
}

inline Scenario parse_scenario(const std::string& text) { return scenario_from_json(parse_json_text(text)); }

inline std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  out << text;
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

// Applies "a.b.c=value" to a JSON tree. Array elements are addressed by
// numeric segments; the value is read as JSON when possible, else as a string.
inline void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ScenarioError("override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string seg = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (seg.empty()) throw ScenarioError("override '" + assignment + "': empty path segment");
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = static_cast<std::size_t>(std::stoul(seg));
      } catch (const std::exception&) {
        throw ScenarioError("override '" + assignment + "': '" + seg + "' is not an array index");
      }
      if (idx >= node->size()) throw ScenarioError("override '" + assignment + "': index out of range");
      next = &(*node)[idx];
    } else if (node->is_object() || node->is_null()) {
      next = &(*node)[seg];
    } else {
      throw ScenarioError("override '" + assignment + "': cannot descend into a scalar");
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    node = next;
    start = dot + 1;
  }
}

//------------------------------------------------------------------------------
// Tables
//------------------------------------------------------------------------------

// Shortest text that reads back to the same double; "inf" for infinities.
inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline double parse_number(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

inline const char* kTrajectoryHeader = "t,agent_id,px,py,vx,vy,ux,uy,nominal_ux,nominal_uy,qp_status,qp_slack";
inline const char* kMetricsHeader =
    "t,e_f,min_pair_dist,min_h_ext,min_h_int,connected,num_edges,all_leaders_in_region";
inline const char* kEventsHeader = "t,kind,detail";

inline std::string trajectory_table(const TrajectoryLog& log) {
  std::string out = std::string(kTrajectoryHeader) + "\n";
  for (const auto& rec : log.records) {
    for (std::size_t i = 0; i < rec.agents.size(); ++i) {
      const auto& a = rec.agents[i];
      out += format_number(rec.t) + "," + std::to_string(i) + "," + format_number(a.position.x) + "," +
             format_number(a.position.y) + "," + format_number(a.velocity.x) + "," + format_number(a.velocity.y) +
             "," + format_number(a.control.x) + "," + format_number(a.control.y) + "," +
             format_number(a.nominal.x) + "," + format_number(a.nominal.y) + "," + to_string(a.status) + "," +
             format_number(a.slack) + "\n";
    }
  }
  return out;
}

inline std::string metrics_table(const TrajectoryLog& log) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& rec : log.records) {
    out += format_number(rec.t) + "," + format_number(rec.formation_error) + "," +
           format_number(rec.min_pair_distance) + "," + format_number(rec.min_h_external) + "," +
           format_number(rec.min_h_internal) + "," + (rec.connected ? "1" : "0") + "," +
           std::to_string(rec.edges.size()) + "," + (rec.all_leaders_in_region ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string events_table(const TrajectoryLog& log) {
  std::string out = std::string(kEventsHeader) + "\n";
  for (const auto& e : log.events) out += format_number(e.t) + "," + to_string(e.kind) + "," + e.detail + "\n";
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw std::out_of_range("no column '" + name + "'");
  }
  std::vector<double> numbers(const std::string& name) const {
    const auto c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(parse_number(r.at(c)));
    return out;
  }
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

//------------------------------------------------------------------------------
// Run summary
//------------------------------------------------------------------------------

struct RunSummary {
  std::size_t records = 0;
  double initial_formation_error = 0.0;
  double final_formation_error = 0.0;
  std::optional<double> t_f;
  double min_pair_distance = kEmptyMargin;
  double min_h_external = kEmptyMargin;
  double min_h_internal = kEmptyMargin;
  std::size_t relaxed_qp_count = 0;
  bool completed = true;
  std::string abort_reason;
};

inline RunSummary summarize(const TrajectoryLog& log) {
  RunSummary s;
  s.records = log.records.size();
  if (!log.records.empty()) {
    s.initial_formation_error = log.records.front().formation_error;
    s.final_formation_error = log.records.back().formation_error;
  }
  s.t_f = log.t_f;
  for (const auto& r : log.records) {
    s.min_pair_distance = std::min(s.min_pair_distance, r.min_pair_distance);
    s.min_h_external = std::min(s.min_h_external, r.min_h_external);
    s.min_h_internal = std::min(s.min_h_internal, r.min_h_internal);
  }
  s.relaxed_qp_count = log.count(Event::Kind::relaxed_qp);
  return s;
}

inline json summary_to_json(const RunSummary& s) {
  auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["records"] = s.records;
  j["initial_formation_error"] = s.initial_formation_error;
  j["final_formation_error"] = s.final_formation_error;
  j["t_f"] = s.t_f ? json(*s.t_f) : json(nullptr);
  j["min_pair_distance"] = num(s.min_pair_distance);
  j["min_h_external"] = num(s.min_h_external);
  j["min_h_internal"] = num(s.min_h_internal);
  j["relaxed_qp_count"] = s.relaxed_qp_count;
  j["completed"] = s.completed;
  if (!s.completed) j["abort_reason"] = s.abort_reason;
  return j;
}

}  // namespace srfc
