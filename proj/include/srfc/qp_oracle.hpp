#pragma once
//------------------------------------------------------------------------------
// Brute-force reference for the safety-filter QP. Test support only.
//
// A grid x grid lattice over the input box gives a first estimate of the
// smallest achievable barrier violation. The answer itself comes from plain
// polygon geometry: the box is clipped by every half-plane (softened by a
// level s), the smallest s leaving a nonempty polygon is found by bisection,
// and the nominal input is projected onto that polygon edge by edge.
// No active-set reasoning is involved.
//------------------------------------------------------------------------------
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "srfc/qp.hpp"

namespace srfc {

struct OracleResult {
  Vec2 z;
  double violation = 0.0;  // 0 when a feasible point was found
  bool feasible = true;
};

namespace detail {

inline double oracle_violation(const QpProblem& p, const Vec2& z) {
  double v = 0.0;
  for (const auto& c : p.constraints) v = std::max(v, -c.evaluate(z));
  return v;
}

// Box clipped by a_m + b_m.z + s >= 0 for every barrier row.
inline std::vector<Vec2> clipped_box(const QpProblem& p, double s) {
  const double m = p.u_max;
  std::vector<Vec2> poly{{-m, -m}, {m, -m}, {m, m}, {-m, m}};
  for (const auto& c : p.constraints) {
    auto g = [&](const Vec2& z) { return c.offset + dot(c.normal, z) + s; };
    std::vector<Vec2> next;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& a = poly[i];
      const Vec2& b = poly[(i + 1) % poly.size()];
      const double ga = g(a), gb = g(b);
      if (ga >= 0) next.push_back(a);
      if ((ga >= 0) != (gb >= 0)) next.push_back(a + (ga / (ga - gb)) * (b - a));
    }
    poly = std::move(next);
    if (poly.empty()) break;
  }
  return poly;
}

inline Vec2 nearest_on_polygon(const std::vector<Vec2>& poly, const Vec2& u) {
  Vec2 best = poly.front();
  double best_d = squared_norm(best - u);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const Vec2 e = b - a;
    const double ee = squared_norm(e);
    const double t = ee > 0 ? std::clamp(dot(u - a, e) / ee, 0.0, 1.0) : 0.0;
    const Vec2 q = a + t * e;
    const double d = squared_norm(q - u);
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

}  // namespace detail

inline OracleResult oracle_solve_detailed(const QpProblem& problem, int grid) {
  if (grid < 100) throw std::invalid_argument("oracle lattice needs grid >= 100");
  const double lo = -problem.u_max;
  const double h = 2.0 * problem.u_max / (grid - 1);

  double upper = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double x = (i == grid - 1) ? problem.u_max : lo + i * h;
    for (int j = 0; j < grid; ++j) {
      const double y = (j == grid - 1) ? problem.u_max : lo + j * h;
      upper = std::min(upper, detail::oracle_violation(problem, {x, y}));
    }
  }

  OracleResult out;
  double level = 0.0;
  if (detail::clipped_box(problem, 0.0).empty()) {
    double below = 0.0;
    while (detail::clipped_box(problem, upper).empty()) upper = 2.0 * upper + 1e-12;
    for (int it = 0; it < 200 && upper - below > 1e-14 * std::max(1.0, upper); ++it) {
      const double mid = 0.5 * (below + upper);
      (detail::clipped_box(problem, mid).empty() ? below : upper) = mid;
    }
    level = upper;
    out.feasible = false;
  }

  const auto poly = detail::clipped_box(problem, level);
  bool inside = std::abs(problem.nominal.x) <= problem.u_max && std::abs(problem.nominal.y) <= problem.u_max;
  for (const auto& c : problem.constraints) inside = inside && c.evaluate(problem.nominal) + level >= 0;
  out.z = inside ? problem.nominal : detail::nearest_on_polygon(poly, problem.nominal);
  out.violation = out.feasible ? 0.0 : detail::oracle_violation(problem, out.z);
  return out;
}

inline Vec2 oracle_solve(const QpProblem& problem, int grid) { return oracle_solve_detailed(problem, grid).z; }

}  // namespace srfc
