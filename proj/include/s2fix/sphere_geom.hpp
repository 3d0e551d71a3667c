#pragma once

// Spherical geometry kernel: unit points, minimal geodesic arcs, polylines,
// loop areas and the two complementary components of a simple loop.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2fix/error.hpp"

namespace s2fix {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kFourPi = 4.0 * std::numbers::pi;

inline constexpr double kUnitEps = 1e-12;
inline constexpr double kAntipodalEps = 1e-9;
inline constexpr double kIntersectEps = 1e-12;
inline constexpr double kOnCurveEps = 1e-9;
inline constexpr double kAreaEps = 1e-10;

/// A point of the unit sphere. The stored vector is renormalized on
/// construction, so |vec()| = 1 to rounding.
class SpherePoint {
 public:
  explicit SpherePoint(const Vec3& v) : v_(v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw Error(ErrorCode::InvalidArgument, "sphere point from a zero or non-finite vector");
    }
    v_ /= n;
  }
  SpherePoint(double x, double y, double z) : SpherePoint(Vec3(x, y, z)) {}

  const Vec3& vec() const noexcept { return v_; }
  double x() const noexcept { return v_.x(); }
  double y() const noexcept { return v_.y(); }
  double z() const noexcept { return v_.z(); }

  SpherePoint operator-() const { return SpherePoint(-v_); }
  double dot(const SpherePoint& o) const noexcept { return v_.dot(o.v_); }

  friend bool operator==(const SpherePoint& a, const SpherePoint& b) { return a.v_ == b.v_; }

 private:
  Vec3 v_;
};

/// Great-circle distance in radians. Computed as atan2(|a x b|, a.b), which is
/// arccos of the clamped dot product but keeps full precision near 0 and pi.
inline double geodesic_distance(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}
inline double geodesic_distance(const SpherePoint& a, const SpherePoint& b) {
  return geodesic_distance(a.vec(), b.vec());
}

/// Ambient Euclidean distance |a - b|.
inline double chord_distance(const SpherePoint& a, const SpherePoint& b) {
  return (a.vec() - b.vec()).norm();
}

/// Orthonormal basis (e1, e2) of the tangent plane at x, with e1 x e2 = x.
inline std::array<Vec3, 2> tangent_frame(const Vec3& x) {
  Vec3 helper = std::abs(x.x()) < 0.6 ? Vec3::UnitX() : (std::abs(x.y()) < 0.6 ? Vec3::UnitY() : Vec3::UnitZ());
  Vec3 e1 = (helper - helper.dot(x) * x).normalized();
  Vec3 e2 = x.cross(e1);
  return {e1, e2};
}

/// Projection of an ambient vector onto the tangent plane at x.
inline Vec3 project_tangent(const Vec3& x, const Vec3& v) { return v - v.dot(x) * x; }

/// Exponential map: walk from x along tangent vector v for length |v|.
inline SpherePoint exp_map(const SpherePoint& x, const Vec3& v) {
  const double t = v.norm();
  if (t == 0.0) return x;
  return SpherePoint(std::cos(t) * x.vec() + (std::sin(t) / t) * v);
}

/// Inverse of exp_map: the tangent vector at x pointing to y with length d(x,y).
inline Vec3 log_map(const SpherePoint& x, const SpherePoint& y) {
  Vec3 w = project_tangent(x.vec(), y.vec());
  const double s = w.norm();
  if (s == 0.0) return Vec3::Zero();
  return w * (geodesic_distance(x, y) / s);
}

inline Mat3 rotation_matrix(const Vec3& unit_axis, double angle) {
  return Eigen::AngleAxisd(angle, unit_axis).toRotationMatrix();
}

/// Oriented minimal geodesic segment. Endpoints are never antipodal.
class GeodesicArc {
 public:
  const SpherePoint& start() const noexcept { return start_; }
  const SpherePoint& end() const noexcept { return end_; }
  double length() const noexcept { return length_; }
  bool degenerate() const noexcept { return length_ < kUnitEps; }
  /// Unit normal start x end / |start x end|; zero for a degenerate arc.
  const Vec3& normal() const noexcept { return normal_; }

  /// slerp(start, end, t), exact at t = 0 and t = 1.
  SpherePoint point_at(double t) const {
    if (t <= 0.0) return start_;
    if (t >= 1.0) return end_;
    if (degenerate()) return start_;
    const double s = std::sin(length_);
    return SpherePoint((std::sin((1.0 - t) * length_) / s) * start_.vec() +
                       (std::sin(t * length_) / s) * end_.vec());
  }

  /// True when x lies on the great circle of this arc between its endpoints.
  bool spans(const Vec3& x, double eps = kIntersectEps) const {
    if (degenerate()) return (x - start_.vec()).norm() <= eps;
    return start_.vec().cross(x).dot(normal_) >= -eps && x.cross(end_.vec()).dot(normal_) >= -eps;
  }

  // Chord-ball bound: every arc point lies within radius of center.
  const Vec3& bound_center() const noexcept { return center_; }
  double bound_radius() const noexcept { return radius_; }

 private:
  friend GeodesicArc minimal_arc(const SpherePoint& a, const SpherePoint& b);
  GeodesicArc(const SpherePoint& a, const SpherePoint& b) : start_(a), end_(b) {
    length_ = geodesic_distance(a, b);
    Vec3 n = a.vec().cross(b.vec());
    const double nn = n.norm();
    normal_ = nn > 0.0 && length_ >= kUnitEps ? Vec3(n / nn) : Vec3::Zero();
    center_ = 0.5 * (a.vec() + b.vec());
    radius_ = 0.5 * (a.vec() - b.vec()).norm() + kIntersectEps;
  }

  SpherePoint start_;
  SpherePoint end_;
  double length_ = 0.0;
  Vec3 normal_;
  Vec3 center_;
  double radius_ = 0.0;
};

inline GeodesicArc minimal_arc(const SpherePoint& a, const SpherePoint& b) {
  if (a.dot(b) <= -1.0 + kAntipodalEps) {
    throw Error(ErrorCode::AntipodalEndpoints, "minimal arc between (near-)antipodal points is undefined");
  }
  return GeodesicArc(a, b);
}

inline bool bounds_may_touch(const GeodesicArc& a, const GeodesicArc& b) {
  return (a.bound_center() - b.bound_center()).norm() <= a.bound_radius() + b.bound_radius();
}

/// Distance from x to the closed arc.
inline double point_arc_distance(const Vec3& x, const GeodesicArc& arc) {
  const double to_ends = std::min(geodesic_distance(x, arc.start().vec()), geodesic_distance(x, arc.end().vec()));
  if (arc.degenerate()) return to_ends;
  const Vec3& n = arc.normal();
  const double off = n.dot(x);
  Vec3 foot = x - off * n;
  const double fn = foot.norm();
  if (fn < 1e-15) return to_ends;
  foot /= fn;
  if (arc.spans(foot, 0.0)) return std::atan2(std::abs(off), fn);
  return to_ends;
}

namespace detail {

inline std::optional<SpherePoint> overlap_point(const GeodesicArc& a, const GeodesicArc& b) {
  const Vec3& u = a.start().vec();
  const Vec3 w = a.normal().cross(u);
  auto angle = [&](const Vec3& x) { return std::atan2(x.dot(w), x.dot(u)); };
  const bool same_direction = a.normal().dot(b.normal()) > 0.0;
  const SpherePoint& first = same_direction ? b.start() : b.end();
  const double s = angle(first.vec());
  constexpr double kAngleEps = 1e-12;
  std::optional<double> best;
  bool best_is_first = false;
  for (int k = -1; k <= 1; ++k) {
    const double lo_b = s + k * kTwoPi;
    const double lo = std::max(0.0, lo_b);
    const double hi = std::min(a.length(), lo_b + b.length());
    if (lo <= hi + kAngleEps && (!best || lo < *best)) {
      best = lo;
      best_is_first = lo_b >= 0.0;
    }
  }
  if (!best) return std::nullopt;
  if (*best <= 0.0) return a.start();
  if (best_is_first) return first;
  const double t = std::min(*best, a.length());
  return SpherePoint(std::cos(t) * u + std::sin(t) * w);
}

}  // namespace detail

/// Intersection of two closed arcs: the transversal crossing, a shared
/// endpoint, or (for cocircular overlapping arcs) the first overlap point
/// along `a`.
inline std::optional<SpherePoint> arc_intersection(const GeodesicArc& a, const GeodesicArc& b) {
  constexpr double eps = kIntersectEps;
  if (!bounds_may_touch(a, b)) return std::nullopt;
  if (a.degenerate()) {
    if (b.degenerate()) {
      if ((a.start().vec() - b.start().vec()).norm() <= eps) return a.start();
      return std::nullopt;
    }
    if (std::abs(b.normal().dot(a.start().vec())) <= eps && b.spans(a.start().vec())) return a.start();
    return std::nullopt;
  }
  if (b.degenerate()) {
    if (std::abs(a.normal().dot(b.start().vec())) <= eps && a.spans(b.start().vec())) return b.start();
    return std::nullopt;
  }
  const double sb0 = a.normal().dot(b.start().vec());
  const double sb1 = a.normal().dot(b.end().vec());
  if (std::abs(sb0) <= eps && std::abs(sb1) <= eps) return detail::overlap_point(a, b);
  if ((sb0 > eps && sb1 > eps) || (sb0 < -eps && sb1 < -eps)) return std::nullopt;
  const double sa0 = b.normal().dot(a.start().vec());
  const double sa1 = b.normal().dot(a.end().vec());
  if ((sa0 > eps && sa1 > eps) || (sa0 < -eps && sa1 < -eps)) return std::nullopt;

  Vec3 x;
  if (std::abs(sb0) <= eps) {
    x = b.start().vec();
  } else if (std::abs(sb1) <= eps) {
    x = b.end().vec();
  } else {
    x = (std::abs(sb1) * b.start().vec() + std::abs(sb0) * b.end().vec()).normalized();
  }
  if (a.spans(x)) {
    if ((x - a.start().vec()).norm() <= eps) return a.start();
    if ((x - a.end().vec()).norm() <= eps) return a.end();
    return SpherePoint(x);
  }
  if (std::abs(sa0) <= eps && b.spans(a.start().vec())) return a.start();
  if (std::abs(sa1) <= eps && b.spans(a.end().vec())) return a.end();
  return std::nullopt;
}

/// Distance between two closed arcs; zero when they intersect.
inline double arc_arc_distance(const GeodesicArc& a, const GeodesicArc& b) {
  if (arc_intersection(a, b)) return 0.0;
  return std::min({point_arc_distance(a.start().vec(), b), point_arc_distance(a.end().vec(), b),
                   point_arc_distance(b.start().vec(), a), point_arc_distance(b.end().vec(), a)});
}

/// Ordered vertex list joined by minimal arcs. A closed polyline has an
/// implicit edge from the last vertex back to the first.
struct SphericalPolyline {
  std::vector<SpherePoint> vertices;
  bool closed = false;

  std::size_t edge_count() const {
    if (vertices.size() < 2) return 0;
    return closed ? vertices.size() : vertices.size() - 1;
  }
  GeodesicArc edge(std::size_t i) const {
    return minimal_arc(vertices[i], vertices[(i + 1) % vertices.size()]);
  }
  std::vector<GeodesicArc> edges() const {
    std::vector<GeodesicArc> out;
    out.reserve(edge_count());
    for (std::size_t i = 0; i < edge_count(); ++i) out.push_back(edge(i));
    return out;
  }
  double length() const {
    double total = 0.0;
    for (std::size_t i = 0; i < edge_count(); ++i) total += edge(i).length();
    return total;
  }
};

struct SelfIntersection {
  std::size_t edge_i;
  std::size_t edge_j;
  SpherePoint point;
};

/// Earliest intersecting pair of non-adjacent edges, scanning j ascending then
/// i ascending. For an open polyline whose last vertex repeats the first, the
/// closure shows up as an intersection at that shared vertex. For a closed
/// polyline the first and last edges are adjacent and are not compared.
inline std::optional<SelfIntersection> polyline_first_self_intersection(const SphericalPolyline& poly) {
  const auto edges = poly.edges();
  const std::size_t m = edges.size();
  for (std::size_t j = 2; j < m; ++j) {
    for (std::size_t i = 0; i + 1 < j; ++i) {
      if (poly.closed && i == 0 && j == m - 1) continue;
      if (auto x = arc_intersection(edges[i], edges[j])) return SelfIntersection{i, j, *x};
    }
  }
  return std::nullopt;
}

inline double polyline_distance(const Vec3& x, std::span<const GeodesicArc> edges) {
  double best = kPi;
  for (const auto& e : edges) best = std::min(best, point_arc_distance(x, e));
  return best;
}

/// Left-hand area of a closed loop traversed in vertex order, by the
/// Gauss-Bonnet formula 2*pi - sum of signed turning angles.
inline double left_area(std::span<const SpherePoint> loop) {
  const std::size_t n = loop.size();
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& prev = loop[(i + n - 1) % n].vec();
    const Vec3& v = loop[i].vec();
    const Vec3& next = loop[(i + 1) % n].vec();
    Vec3 t_in = prev.dot(v) * v - prev;
    Vec3 t_out = next - next.dot(v) * v;
    turning += std::atan2(t_in.cross(t_out).dot(v), t_in.dot(t_out));
  }
  return kTwoPi - turning;
}

enum class Component : int { Left = 0, Right = 1, OnCurve = -1 };

/// The two complementary components of a simple closed loop. Component 0 lies
/// to the left of the loop's direction of travel (seen from outside the
/// sphere), component 1 to the right.
struct LoopPartition {
  SphericalPolyline loop;
  std::array<double, 2> component_areas{};
  std::array<SpherePoint, 2> representative_points{SpherePoint(0, 0, 1), SpherePoint(0, 0, -1)};
  std::vector<GeodesicArc> edges;

  double area(Component c) const { return component_areas[static_cast<int>(c)]; }
};

inline LoopPartition loop_partition(const SphericalPolyline& input) {
  std::vector<SpherePoint> verts;
  for (const auto& v : input.vertices) {
    if (verts.empty() || (v.vec() - verts.back().vec()).norm() > kUnitEps) verts.push_back(v);
  }
  while (verts.size() > 1 && (verts.back().vec() - verts.front().vec()).norm() <= kUnitEps) verts.pop_back();
  if (verts.size() < 3) throw Error(ErrorCode::DegenerateLoop, "loop needs at least three distinct vertices");

  LoopPartition part;
  part.loop = SphericalPolyline{std::move(verts), true};
  part.edges = part.loop.edges();
  const double left = left_area(part.loop.vertices);
  part.component_areas = {left, kFourPi - left};
  if (std::min(part.component_areas[0], part.component_areas[1]) < kAreaEps) {
    throw Error(ErrorCode::DegenerateLoop, "loop encloses no area on one side");
  }

  std::size_t longest = 0;
  for (std::size_t i = 1; i < part.edges.size(); ++i) {
    if (part.edges[i].length() > part.edges[longest].length()) longest = i;
  }
  const GeodesicArc& e = part.edges[longest];
  const SpherePoint mid = e.point_at(0.5);
  double clearance = kPi;
  for (std::size_t i = 0; i < part.edges.size(); ++i) {
    if (i != longest) clearance = std::min(clearance, point_arc_distance(mid.vec(), part.edges[i]));
  }
  const double offset = std::min({1e-3, 0.5 * clearance, 0.25 * e.length()});
  if (offset <= kOnCurveEps) throw Error(ErrorCode::DegenerateLoop, "no room to place representative points");
  part.representative_points = {exp_map(mid, offset * e.normal()), exp_map(mid, -offset * e.normal())};
  return part;
}

namespace detail {

// Parity of crossings of the path (a sequence of short arcs) with the loop.
// Returns nullopt when the path grazes a loop vertex and parity is ambiguous.
inline std::optional<int> crossing_parity(std::span<const Vec3> path, std::span<const GeodesicArc> loop) {
  constexpr double tiny = 1e-13;
  int count = 0;
  for (std::size_t s = 0; s + 1 < path.size(); ++s) {
    const Vec3& p0 = path[s];
    const Vec3& p1 = path[s + 1];
    Vec3 n = p0.cross(p1);
    const double nn = n.norm();
    if (nn < 1e-9) return std::nullopt;
    n /= nn;
    auto on_path = [&](const Vec3& c) {
      const double u = p0.cross(c).dot(n);
      const double v = c.cross(p1).dot(n);
      if (u > tiny && v > tiny) return 1;
      if (u >= -tiny && v >= -tiny) return -1;
      return 0;
    };
    for (const auto& e : loop) {
      const double s0 = n.dot(e.start().vec());
      const double s1 = n.dot(e.end().vec());
      if (std::abs(s0) <= tiny || std::abs(s1) <= tiny) {
        const Vec3& touch = std::abs(s0) <= tiny ? e.start().vec() : e.end().vec();
        if (on_path(touch) != 0) return std::nullopt;
        continue;
      }
      if ((s0 > 0) == (s1 > 0)) continue;
      const Vec3 c = (std::abs(s1) * e.start().vec() + std::abs(s0) * e.end().vec()).normalized();
      const int hit = on_path(c);
      if (hit < 0) return std::nullopt;
      count += hit;
    }
  }
  return count % 2;
}

}  // namespace detail

/// Component of x: crossing parity of a geodesic path from x to
/// representative_points[0]; OnCurve within kOnCurveEps of the loop.
inline Component point_component(const LoopPartition& part, const SpherePoint& x) {
  if (polyline_distance(x.vec(), part.edges) <= kOnCurveEps) return Component::OnCurve;
  const Vec3& target = part.representative_points[0].vec();
  static const std::array<Vec3, 6> detours = {Vec3(0.31, 0.77, -0.55), Vec3(-0.62, 0.18, 0.76),
                                              Vec3(0.84, -0.41, 0.35), Vec3(-0.27, -0.88, -0.39),
                                              Vec3(0.49, 0.52, 0.70), Vec3(-0.71, 0.60, -0.36)};
  if (x.dot(part.representative_points[0]) > -0.5) {
    const std::array<Vec3, 2> path = {x.vec(), target};
    if (auto parity = detail::crossing_parity(path, part.edges)) {
      return *parity == 0 ? Component::Left : Component::Right;
    }
  }
  for (const auto& d : detours) {
    Vec3 w = x.vec() + target + d;
    if (w.norm() < 0.5) continue;
    w.normalize();
    if (w.dot(x.vec()) < -0.5 || w.dot(target) < -0.5) continue;
    const std::array<Vec3, 3> path = {x.vec(), w, target};
    if (auto parity = detail::crossing_parity(path, part.edges)) {
      return *parity == 0 ? Component::Left : Component::Right;
    }
  }
  throw Error(ErrorCode::DegenerateLoop, "could not classify point against loop");
}

inline Component opposite(Component c) {
  if (c == Component::Left) return Component::Right;
  if (c == Component::Right) return Component::Left;
  return c;
}

}  // namespace s2fix
