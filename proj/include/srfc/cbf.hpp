#pragma once
//------------------------------------------------------------------------------
// Exponential control barrier constraints for double-integrator agents.
//
// Each constraint is a half-plane on the agent's own input u: a + b.u >= 0.
//
//   obstacle k:  h = |p_i - s_ik|^2 - delta_ex^2
//                a = 2 (v.n)^2 + 2 k1 (p_i - s_ik).v + k0 h,   b = 2 (p_i - s_ik)
//                with n the unit normal (p_i - s_ik) / |p_i - s_ik|. The closest
//                point slides along the boundary as the agent moves, so only
//                the normal part of v.v is a safe lower bound for h''.
//
//   neighbor j:  h = |p_i - p_j|^2 - delta_in^2, true relative velocity
//                replaced by the estimate vhat with |vhat - dv| <= e = 2 u_max / eta
//                A~ = 2 max(|vhat| - e, 0)^2 + 2 k1 dp.vhat - 2 k1 e |dp| + k0 h
//                a = A~ / 2,  b = 2 dp    (agent i carries half the pair constraint)
//------------------------------------------------------------------------------
#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "srfc/geometry.hpp"
#include "srfc/world.hpp"

namespace srfc {

struct CbfConstraint {
  enum class Kind { external, internal };

  double offset = 0.0;  // a
  Vec2 normal;          // b
  Kind kind = Kind::external;
  AgentId subject = 0;
  int other = 0;  // obstacle index or neighbor id

  double evaluate(const Vec2& u) const { return offset + dot(normal, u); }
};

// Bound on the relative-velocity estimation error.
inline double error_bound(double u_max, double eta) { return 2.0 * u_max / eta; }

inline CbfConstraint external_constraint(const Vec2& p_i, const Vec2& v_i, const Vec2& s_ik, double k0, double k1,
                                         double delta_ex) {
  const Vec2 rel = p_i - s_ik;
  CbfConstraint c;
  const double d2 = squared_norm(rel);
  const double closing = d2 > 0.0 ? dot(rel, v_i) * dot(rel, v_i) / d2 : dot(v_i, v_i);
  c.offset = 2.0 * closing + 2.0 * k1 * dot(rel, v_i) + k0 * (d2 - delta_ex * delta_ex);
  c.normal = 2.0 * rel;
  c.kind = CbfConstraint::Kind::external;
  return c;
}

// The pair quantity A~ before the half split.
inline double internal_pair_offset(const Vec2& p_i, const Vec2& p_j, const Vec2& v_hat_ij,
                                   const ControllerParams& params) {
  const Vec2 rel = p_i - p_j;
  const double e = error_bound(params.u_max, params.eta);
  const double speed_lb = std::max(norm(v_hat_ij) - e, 0.0);
  return 2.0 * speed_lb * speed_lb + 2.0 * params.k1 * dot(rel, v_hat_ij) - 2.0 * params.k1 * e * norm(rel) +
         params.k0 * (squared_norm(rel) - params.delta_in * params.delta_in);
}

inline CbfConstraint internal_constraint(const Vec2& p_i, const Vec2& p_j, const Vec2& v_hat_ij,
                                         const ControllerParams& params) {
  CbfConstraint c;
  c.offset = 0.5 * internal_pair_offset(p_i, p_j, v_hat_ij, params);
  c.normal = 2.0 * (p_i - p_j);
  c.kind = CbfConstraint::Kind::internal;
  return c;
}

// An agent position inside an obstacle.
class CollisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SensedObstacle {
  std::size_t index = 0;
  Vec2 closest;  // s_ik
};

// Obstacles whose nearest point lies strictly inside the sensing radius.
inline std::vector<SensedObstacle> sensed_obstacles(const Vec2& p_i, const std::vector<ConvexRegion>& obstacles,
                                                    double r) {
  std::vector<SensedObstacle> out;
  for (std::size_t k = 0; k < obstacles.size(); ++k) {
    Vec2 s;
    try {
      s = closest_boundary_point(obstacles[k], p_i);
    } catch (const DegenerateInput&) {
      throw CollisionError("agent position inside obstacle " + std::to_string(k));
    }
    if (norm(p_i - s) < r) out.push_back({k, s});
  }
  return out;
}

}  // namespace srfc
