#pragma once
//------------------------------------------------------------------------------
// Planar vector algebra and convex-region queries.
//
// A ConvexRegion is either a disc or a strictly convex, counter-clockwise
// polygon. All queries treat points within kBoundaryTol of the boundary as
// members of the region.
//------------------------------------------------------------------------------
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace srfc {

inline constexpr double kBoundaryTol = 1e-9;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 v) { return v *= s; }
constexpr Vec2 operator*(Vec2 v, double s) { return v *= s; }
constexpr Vec2 operator/(const Vec2& v, double s) { return {v.x / s, v.y / s}; }

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
constexpr double squared_norm(const Vec2& v) { return dot(v, v); }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline double inf_norm(const Vec2& v) { return std::max(std::abs(v.x), std::abs(v.y)); }
inline bool is_finite(const Vec2& v) { return std::isfinite(v.x) && std::isfinite(v.y); }

// Raised by closest_boundary_point when the query point is not strictly outside.
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by shrink when the inward offset leaves nothing.
class EmptyRegion : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Circle {
  Vec2 center;
  double radius = 1.0;
  friend bool operator==(const Circle&, const Circle&) = default;
};

struct Polygon {
  std::vector<Vec2> vertices;  // counter-clockwise
  friend bool operator==(const Polygon&, const Polygon&) = default;
};

class ConvexRegion {
 public:
  ConvexRegion() = default;
  ConvexRegion(Circle c) : shape_(std::move(c)) {}
  ConvexRegion(Polygon p) : shape_(std::move(p)) {}

  static ConvexRegion circle(Vec2 center, double radius) { return Circle{center, radius}; }
  static ConvexRegion polygon(std::vector<Vec2> vertices) { return Polygon{std::move(vertices)}; }

  bool is_circle() const { return std::holds_alternative<Circle>(shape_); }
  bool is_polygon() const { return std::holds_alternative<Polygon>(shape_); }
  const Circle& as_circle() const { return std::get<Circle>(shape_); }
  const Polygon& as_polygon() const { return std::get<Polygon>(shape_); }

  friend bool operator==(const ConvexRegion&, const ConvexRegion&) = default;

 private:
  std::variant<Circle, Polygon> shape_ = Circle{};
};

// Returns an empty string when the region satisfies its invariants,
// otherwise a description of the first violation.
inline std::string region_violation(const ConvexRegion& region) {
  if (region.is_circle()) {
    const auto& c = region.as_circle();
    if (!is_finite(c.center) || !std::isfinite(c.radius)) return "non-finite circle";
    if (!(c.radius > 0.0)) return "circle radius must be > 0";
    return {};
  }
  const auto& v = region.as_polygon().vertices;
  if (v.size() < 3) return "polygon needs at least 3 vertices";
  for (const auto& p : v)
    if (!is_finite(p)) return "non-finite polygon vertex";
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e0 = v[(i + 1) % n] - v[i];
    const Vec2 e1 = v[(i + 2) % n] - v[(i + 1) % n];
    if (!(cross(e0, e1) > 0.0)) return "polygon must be strictly convex and counter-clockwise";
  }
  // A strictly left-turning closed chain can still wind more than once.
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e0 = v[(i + 1) % n] - v[i];
    const Vec2 e1 = v[(i + 2) % n] - v[(i + 1) % n];
    turning += std::atan2(cross(e0, e1), dot(e0, e1));
  }
  if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6) return "polygon winds more than once";
  return {};
}

namespace detail {

inline Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = squared_norm(ab);
  if (len2 == 0.0) return a;
  const double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + s * ab;
}

// Signed distance of p to the supporting line of edge a->b, positive on the
// interior (left) side.
inline double inward_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  return cross(ab, p - a) / norm(ab);
}

inline Vec2 polygon_boundary_nearest(const std::vector<Vec2>& v, const Vec2& p) {
  Vec2 best = v.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 q = closest_on_segment(p, v[i], v[(i + 1) % n]);
    const double d2 = squared_norm(p - q);
    if (d2 < best_d2) {  // strict: lowest-index edge wins ties
      best_d2 = d2;
      best = q;
    }
  }
  return best;
}

}  // namespace detail

inline bool contains(const ConvexRegion& region, const Vec2& p) {
  if (region.is_circle()) {
    const auto& c = region.as_circle();
    return norm(p - c.center) <= c.radius + kBoundaryTol;
  }
  const auto& v = region.as_polygon().vertices;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i)
    if (detail::inward_distance(p, v[i], v[(i + 1) % n]) < -kBoundaryTol) return false;
  return true;
}

// Nearest point of the region to p; p itself when p is a member.
inline Vec2 project(const ConvexRegion& region, const Vec2& p) {
  if (contains(region, p)) return p;
  if (region.is_circle()) {
    const auto& c = region.as_circle();
    const Vec2 d = p - c.center;
    return c.center + (c.radius / norm(d)) * d;
  }
  return detail::polygon_boundary_nearest(region.as_polygon().vertices, p);
}

// Nearest region point to an exterior p. Throws DegenerateInput when p is
// inside or on the boundary.
inline Vec2 closest_boundary_point(const ConvexRegion& region, const Vec2& p) {
  if (contains(region, p)) throw DegenerateInput("query point lies inside or on the region boundary");
  return project(region, p);
}

namespace detail {

// Keeps the part of a convex polygon on the left of the directed line a->b,
// i.e. where cross(b - a, x - a) >= 0.
inline std::vector<Vec2> clip_left(const std::vector<Vec2>& poly, const Vec2& a, const Vec2& b) {
  std::vector<Vec2> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % n];
    const double sc = cross(b - a, cur - a);
    const double sn = cross(b - a, nxt - a);
    if (sc >= 0.0) out.push_back(cur);
    if ((sc >= 0.0) != (sn >= 0.0)) {
      const double s = sc / (sc - sn);
      out.push_back(cur + s * (nxt - cur));
    }
  }
  return out;
}

// Drops repeated and collinear vertices from a convex chain.
inline std::vector<Vec2> simplify(std::vector<Vec2> poly, double scale) {
  const double eps = 1e-12 * std::max(1.0, scale);
  bool changed = true;
  while (changed && poly.size() >= 3) {
    changed = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& prev = poly[(i + n - 1) % n];
      const Vec2& cur = poly[i];
      const Vec2& next = poly[(i + 1) % n];
      const bool duplicate = norm(cur - prev) <= eps;
      const bool flat = cross(cur - prev, next - cur) <= eps * norm(next - prev);
      if (duplicate || flat) {
        poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return poly;
}

}  // namespace detail

// Inward offset of the region by delta >= 0.
inline ConvexRegion shrink(const ConvexRegion& region, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("shrink offset must be non-negative");
  if (region.is_circle()) {
    const auto& c = region.as_circle();
    if (!(c.radius > delta)) throw EmptyRegion("offset annihilates the circle");
    return ConvexRegion::circle(c.center, c.radius - delta);
  }
  const auto& v = region.as_polygon().vertices;
  if (delta == 0.0) return region;

  double extent = 0.0;
  for (const auto& p : v) extent = std::max(extent, inf_norm(p));
  const double big = 4.0 * extent + 1.0;
  std::vector<Vec2> poly{{-big, -big}, {big, -big}, {big, big}, {-big, big}};
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n && !poly.empty(); ++i) {
    const Vec2 a = v[i];
    const Vec2 b = v[(i + 1) % n];
    const Vec2 dir = (b - a) / norm(b - a);
    const Vec2 inward{-dir.y, dir.x};
    poly = detail::clip_left(poly, a + delta * inward, b + delta * inward);
  }
  poly = detail::simplify(std::move(poly), extent);
  if (poly.size() < 3) throw EmptyRegion("offset annihilates the polygon");
  ConvexRegion out = ConvexRegion::polygon(std::move(poly));
  if (!region_violation(out).empty()) throw EmptyRegion("offset leaves a degenerate polygon");
  return out;
}

}  // namespace srfc
