#pragma once
// Shared helpers for the unit and acceptance suites.
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "srfc/io.hpp"
#include "srfc/qp.hpp"

namespace srfc::fixtures {

inline std::string scenario_path(const std::string& name) { return std::string(SRFC_SCENARIO_DIR) + "/" + name; }

inline Scenario load(const std::string& name) { return parse_scenario(read_file(scenario_path(name))); }

inline const std::vector<std::string>& shipped_scenarios() {
  static const std::vector<std::string> names = {"a_nominal.json", "b_no_tracking.json", "c_single_obstacle.json",
                                                 "d_narrow_gap.json", "e_multi_obstacle.json"};
  return names;
}

// Random 2-D QP: nominal in [-2 u_max, 2 u_max]^2, 0..8 half-planes whose
// boundary lines pass through the box or near it, so both feasible and
// infeasible instances occur.
inline QpProblem random_problem(std::mt19937_64& rng, double u_max = 5.0) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::acos(-1.0));
  std::uniform_real_distribution<double> scale(0.2, 4.0);
  std::uniform_int_distribution<int> count(0, 8);
  QpProblem p;
  p.u_max = u_max;
  p.nominal = {2.0 * u_max * unit(rng), 2.0 * u_max * unit(rng)};
  const int m = count(rng);
  for (int k = 0; k < m; ++k) {
    const double th = angle(rng);
    const double s = scale(rng);
    const Vec2 b{s * std::cos(th), s * std::sin(th)};
    const Vec2 anchor{1.2 * u_max * unit(rng), 1.2 * u_max * unit(rng)};
    CbfConstraint c;
    c.normal = b;
    c.offset = -dot(b, anchor);
    c.other = k;
    p.constraints.push_back(c);
  }
  return p;
}

}  // namespace srfc::fixtures
