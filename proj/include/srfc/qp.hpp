#pragma once
//------------------------------------------------------------------------------
// Exact solver for the per-agent safety filter
//
//   minimize 0.5 |z - u_bar|^2  s.t.  a_m + b_m.z >= 0,  |z|_inf <= u_max.
//
// With two decision variables the optimum is the projection of u_bar onto the
// affine hull of at most two active constraints. solve() enumerates every such
// candidate (including the four box faces), keeps the feasible ones and returns
// the best. When nothing is feasible the barrier constraints are softened
// jointly: first the largest violation is minimised over the box, then the
// distance to u_bar among the minimax points.
//------------------------------------------------------------------------------
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "srfc/cbf.hpp"
#include "srfc/geometry.hpp"

namespace srfc {

inline constexpr double kFeasibilityTol = 1e-9;

struct QpProblem {
  Vec2 nominal;
  std::vector<CbfConstraint> constraints;
  double u_max = 1.0;
};

enum class QpStatus { optimal, relaxed };

struct QpSolution {
  Vec2 z;
  QpStatus status = QpStatus::optimal;
  // Indices into constraints followed by the box faces
  // (m: z_x <= u_max, m+1: z_x >= -u_max, m+2: z_y <= u_max, m+3: z_y >= -u_max).
  std::vector<std::size_t> active;
  std::vector<double> multipliers;  // parallel to active
  double slack = 0.0;               // largest barrier violation at z
};

struct HalfPlane {
  double a = 0.0;
  Vec2 b;
  double eval(const Vec2& z) const { return a + dot(b, z); }
};

namespace detail {

inline std::vector<HalfPlane> with_box(const std::vector<CbfConstraint>& cs, double u_max, double shift = 0.0) {
  std::vector<HalfPlane> hp;
  hp.reserve(cs.size() + 4);
  for (const auto& c : cs) hp.push_back({c.offset + shift, c.normal});
  hp.push_back({u_max, {-1.0, 0.0}});
  hp.push_back({u_max, {1.0, 0.0}});
  hp.push_back({u_max, {0.0, -1.0}});
  hp.push_back({u_max, {0.0, 1.0}});
  return hp;
}

inline bool feasible(const std::vector<HalfPlane>& hp, const Vec2& z) {
  for (const auto& h : hp)
    if (h.eval(z) < -kFeasibilityTol) return false;
  return true;
}

inline Vec2 clamp_box(const Vec2& z, double u_max) {
  return {std::clamp(z.x, -u_max, u_max), std::clamp(z.y, -u_max, u_max)};
}

// Non-negative weights w with sum w_k b_k = g, using at most two of the given
// half-planes. Returns nullopt when no such combination exists.
inline std::optional<std::vector<double>> cone_weights(const std::vector<HalfPlane>& hp,
                                                       const std::vector<std::size_t>& idx, const Vec2& g) {
  const double tol = 1e-9 * std::max(1.0, norm(g));
  if (norm(g) <= tol) return std::vector<double>(idx.size(), 0.0);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Vec2 b = hp[idx[i]].b;
    const double bb = squared_norm(b);
    if (bb == 0.0) continue;
    const double w = dot(g, b) / bb;
    if (w >= 0.0 && norm(g - w * b) <= tol) {
      std::vector<double> out(idx.size(), 0.0);
      out[i] = w;
      return out;
    }
  }
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      const Vec2 bi = hp[idx[i]].b;
      const Vec2 bj = hp[idx[j]].b;
      const double det = cross(bi, bj);
      if (std::abs(det) <= 1e-14 * norm(bi) * norm(bj)) continue;
      const double wi = cross(g, bj) / det;
      const double wj = cross(bi, g) / det;
      if (wi >= -1e-12 && wj >= -1e-12) {
        std::vector<double> out(idx.size(), 0.0);
        out[i] = std::max(wi, 0.0);
        out[j] = std::max(wj, 0.0);
        return out;
      }
    }
  }
  return std::nullopt;
}

inline double max_violation(const std::vector<CbfConstraint>& cs, const Vec2& z) {
  double v = 0.0;
  for (const auto& c : cs) v = std::max(v, -c.evaluate(z));
  return v;
}

inline bool lex_less(const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

// Best feasible candidate over all active sets of size <= 2.
inline std::optional<Vec2> enumerate(const std::vector<HalfPlane>& hp, const Vec2& u) {
  if (feasible(hp, u)) return u;
  std::optional<Vec2> best;
  double best_obj = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec2& z) {
    if (!is_finite(z) || !feasible(hp, z)) return;
    const double obj = 0.5 * squared_norm(z - u);
    const double tie = 1e-14 * (1.0 + best_obj);
    if (!best || obj < best_obj - tie || (obj <= best_obj + tie && lex_less(z, *best))) {
      best = z;
      best_obj = std::min(obj, best_obj);
    }
  };
  for (const auto& h : hp) {
    const double bb = squared_norm(h.b);
    if (bb == 0.0) continue;
    consider(u - (h.eval(u) / bb) * h.b);
  }
  for (std::size_t i = 0; i < hp.size(); ++i) {
    for (std::size_t j = i + 1; j < hp.size(); ++j) {
      const Vec2 bi = hp[i].b;
      const Vec2 bj = hp[j].b;
      const double det = cross(bi, bj);
      if (std::abs(det) <= 1e-14 * norm(bi) * norm(bj)) continue;
      // b_i.z = -a_i, b_j.z = -a_j
      const Vec2 z{(-hp[i].a * bj.y + hp[j].a * bi.y) / det, (-hp[j].a * bi.x + hp[i].a * bj.x) / det};
      consider(z);
    }
  }
  return best;
}

inline void fill_active_set(const std::vector<HalfPlane>& hp, const Vec2& u, QpSolution& sol) {
  sol.active.clear();
  sol.multipliers.clear();
  for (std::size_t m = 0; m < hp.size(); ++m)
    if (std::abs(hp[m].eval(sol.z)) <= kFeasibilityTol * std::max(1.0, norm(hp[m].b))) sol.active.push_back(m);
  // Stationarity: z - u = sum lambda_m b_m with lambda >= 0.
  if (auto w = cone_weights(hp, sol.active, sol.z - u)) {
    sol.multipliers = *w;
  } else {
    sol.multipliers.assign(sol.active.size(), 0.0);
  }
}

// Minimum over the box of the largest barrier violation: a 3-variable LP in
// (z, s) solved by vertex enumeration.
inline std::pair<double, Vec2> minimax_violation(const std::vector<CbfConstraint>& cs, double u_max) {
  struct Plane {
    Vec2 b;
    double c;  // coefficient of s
    double a;
  };
  std::vector<Plane> planes;
  for (const auto& k : cs) planes.push_back({k.normal, 1.0, k.offset});
  planes.push_back({{-1.0, 0.0}, 0.0, u_max});
  planes.push_back({{1.0, 0.0}, 0.0, u_max});
  planes.push_back({{0.0, -1.0}, 0.0, u_max});
  planes.push_back({{0.0, 1.0}, 0.0, u_max});
  planes.push_back({{0.0, 0.0}, 1.0, 0.0});  // s >= 0

  auto ok = [&](const Vec2& z, double s) {
    for (const auto& p : planes) {
      const double scale = std::max(1.0, std::abs(p.a) + norm(p.b) * u_max);
      if (p.a + dot(p.b, z) + p.c * s < -1e-10 * scale) return false;
    }
    return true;
  };

  double best_s = std::numeric_limits<double>::infinity();
  Vec2 best_z;
  const std::size_t n = planes.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const std::array<std::array<double, 3>, 3> m{{{planes[i].b.x, planes[i].b.y, planes[i].c},
                                                      {planes[j].b.x, planes[j].b.y, planes[j].c},
                                                      {planes[k].b.x, planes[k].b.y, planes[k].c}}};
        const std::array<double, 3> rhs{-planes[i].a, -planes[j].a, -planes[k].a};
        auto det3 = [](const std::array<std::array<double, 3>, 3>& a) {
          return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                 a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                 a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        };
        const double d = det3(m);
        if (std::abs(d) < 1e-14) continue;
        std::array<double, 3> x{};
        for (int c = 0; c < 3; ++c) {
          auto mc = m;
          for (int r = 0; r < 3; ++r) mc[r][c] = rhs[r];
          x[c] = det3(mc) / d;
        }
        const Vec2 z{x[0], x[1]};
        if (!is_finite(z) || !std::isfinite(x[2])) continue;
        if (!ok(z, x[2])) continue;
        if (x[2] < best_s || (x[2] == best_s && lex_less(z, best_z))) {
          best_s = x[2];
          best_z = z;
        }
      }
    }
  }
  if (!std::isfinite(best_s)) return {max_violation(cs, Vec2{}), Vec2{}};
  return {std::max(best_s, 0.0), clamp_box(best_z, u_max)};
}

}  // namespace detail

// Minimax fallback. On a feasible problem the hard solution is returned
// unchanged.
inline QpSolution solve_relaxed(const QpProblem& problem) {
  const Vec2 u = problem.nominal;
  const auto hard = detail::with_box(problem.constraints, problem.u_max);
  if (auto z = detail::enumerate(hard, u)) {
    QpSolution sol;
    sol.z = detail::clamp_box(*z, problem.u_max);
    sol.status = QpStatus::optimal;
    detail::fill_active_set(hard, u, sol);
    return sol;
  }

  const auto [s_star, z_lp] = detail::minimax_violation(problem.constraints, problem.u_max);
  auto softened = detail::with_box(problem.constraints, problem.u_max, s_star);
  auto z = detail::enumerate(softened, u);
  if (!z) {
    // rounding left the minimax set empty; pad it
    softened = detail::with_box(problem.constraints, problem.u_max, s_star + 1e-9 * (1.0 + s_star));
    z = detail::enumerate(softened, u);
  }

  QpSolution sol;
  sol.status = QpStatus::relaxed;
  sol.z = z ? detail::clamp_box(*z, problem.u_max) : z_lp;
  detail::fill_active_set(softened, u, sol);
  sol.slack = detail::max_violation(problem.constraints, sol.z);
  return sol;
}

inline QpSolution solve(const QpProblem& problem) {
  const auto hp = detail::with_box(problem.constraints, problem.u_max);
  const Vec2 u = problem.nominal;
  auto z = detail::enumerate(hp, u);
  if (!z) return solve_relaxed(problem);
  QpSolution sol;
  sol.z = (*z == u) ? u : detail::clamp_box(*z, problem.u_max);
  sol.status = QpStatus::optimal;
  detail::fill_active_set(hp, u, sol);
  return sol;
}

// True when u satisfies every barrier constraint and the box.
inline bool is_feasible(const QpProblem& problem, const Vec2& u) {
  return detail::feasible(detail::with_box(problem.constraints, problem.u_max), u);
}

inline double objective(const QpProblem& problem, const Vec2& z) { return 0.5 * squared_norm(z - problem.nominal); }

struct KktReport {
  double stationarity = 0.0;     // |z - u_bar - sum lambda_m b_m|
  double primal = 0.0;           // largest violation of any constraint
  double dual = 0.0;             // largest negative multiplier magnitude
  double complementarity = 0.0;  // largest |lambda_m g_m(z)|

  bool passes(double tol) const {
    return stationarity <= tol && primal <= tol && dual <= tol && complementarity <= tol;
  }
};

// Certificate for an optimal solution, assembled from its active set.
inline KktReport certify(const QpProblem& problem, const QpSolution& sol) {
  const auto hp = detail::with_box(problem.constraints, problem.u_max);
  KktReport rep;
  Vec2 resid = sol.z - problem.nominal;
  for (std::size_t k = 0; k < sol.active.size(); ++k) {
    const double lambda = sol.multipliers.at(k);
    const auto& h = hp.at(sol.active[k]);
    resid -= lambda * h.b;
    rep.dual = std::max(rep.dual, -lambda);
    rep.complementarity = std::max(rep.complementarity, std::abs(lambda * h.eval(sol.z)));
  }
  rep.stationarity = norm(resid);
  for (const auto& h : hp) rep.primal = std::max(rep.primal, -h.eval(sol.z));
  return rep;
}

}  // namespace srfc
