#pragma once
//------------------------------------------------------------------------------
// Nominal (safety-unaware) control for one agent.
//
//   u_bar = 1_in * dv_d - c1 * sum grad Phi_ij - c2 * sum vhat_ij
//           - c3 * region_term - c4 * tracking_term
//
// Everything here is computed from the agent's own state and the relative
// positions of its neighbors; neighbor velocities and controls never enter.
//------------------------------------------------------------------------------
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "srfc/geometry.hpp"
#include "srfc/world.hpp"

namespace srfc {

// A potential was evaluated for a pair at or beyond the sensing radius.
class OutOfRange : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require_in_range(const Vec2& rel, double r) {
  if (!(norm(rel) < r))
    throw OutOfRange("pair separation " + std::to_string(norm(rel)) + " is not below sensing radius " +
                     std::to_string(r));
}
}  // namespace detail

// Phi_ij = |dp - d_ij|^2 / (r^2 - |dp|^2 + mu), dp = p_i - p_j.
inline double potential(const Vec2& p_i, const Vec2& p_j, const Vec2& d_ij, double r, double mu) {
  const Vec2 rel = p_i - p_j;
  detail::require_in_range(rel, r);
  return squared_norm(rel - d_ij) / (r * r - squared_norm(rel) + mu);
}

// Gradient of Phi_ij with respect to p_i:
//   (2 l1 (dp - d_ij) + 2 l2 dp) / l1^2,  l1 = r^2 - |dp|^2 + mu,  l2 = |dp - d_ij|^2.
inline Vec2 potential_gradient(const Vec2& p_i, const Vec2& p_j, const Vec2& d_ij, double r, double mu) {
  const Vec2 rel = p_i - p_j;
  detail::require_in_range(rel, r);
  const Vec2 err = rel - d_ij;
  const double l1 = r * r - squared_norm(rel) + mu;
  const double l2 = squared_norm(err);
  return (2.0 * l1 * err + 2.0 * l2 * rel) / (l1 * l1);
}

// Relative-velocity estimate; the same expression is the estimator state's
// time derivative.
inline Vec2 velocity_estimate(const Vec2& phi_ij, const Vec2& p_i, const Vec2& p_j, double eta) {
  return -eta * (phi_ij - (p_i - p_j));
}

inline Vec2 gamma_derivative(const Vec2& gamma_i, const Vec2& p_i, const Vec2& v_d, double c5) {
  return v_d + c5 * (p_i - gamma_i);
}

// Unit pull toward the target for a leader outside it; zero otherwise.
// Boundary points count as inside, so the normalisation never divides by zero.
inline Vec2 region_term(const Vec2& p_i, const ConvexRegion& target, bool is_leader) {
  if (!is_leader || contains(target, p_i)) return {};
  const Vec2 away = p_i - project(target, p_i);
  return -(away / norm(away));
}

inline Vec2 tracking_term(const Vec2& p_i, const Vec2& gamma_i, double c5, bool in_region, bool is_leader) {
  if (!is_leader || !in_region) return {};
  const Vec2 s = c5 * (p_i - gamma_i);
  return {-std::tanh(s.x), -std::tanh(s.y)};
}

struct NeighborData {
  Vec2 position;      // p_j
  Vec2 phi;           // phi_ij
  Vec2 displacement;  // d_ij
};

struct NominalBreakdown {
  Vec2 u1;           // formation
  Vec2 u2;           // velocity consensus
  Vec2 u3;           // region
  Vec2 u4;           // tracking
  Vec2 feedforward;  // 1_in * dv_d
  Vec2 total;
};

inline NominalBreakdown nominal_control(const AgentState& agent, const std::vector<NeighborData>& neighbors,
                                        const ConvexRegion& target, const ControllerParams& params,
                                        const Vec2& v_d_dot) {
  NominalBreakdown out;
  const Vec2 p = agent.position;
  for (const auto& nb : neighbors) {
    out.u1 -= potential_gradient(p, nb.position, nb.displacement, params.r, params.mu);
    out.u2 -= velocity_estimate(nb.phi, p, nb.position, params.eta);
  }
  out.u3 = region_term(p, target, agent.is_leader);
  if (params.velocity_tracking) {
    const bool inside = contains(target, p);
    if (inside) out.feedforward = v_d_dot;
    out.u4 = tracking_term(p, agent.gamma, params.c5, inside, agent.is_leader);
  }
  out.total = out.feedforward + params.c1 * out.u1 + params.c2 * out.u2 + params.c3 * out.u3 + params.c4 * out.u4;
  return out;
}

}  // namespace srfc
