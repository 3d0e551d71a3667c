#pragma once

// Character curves: the polyline through consecutive orbit points joined by
// minimal arcs, the simple closed loop it first closes, and the checks run on
// pairs of such curves.

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "s2fix/diffeo.hpp"
#include "s2fix/dynamics.hpp"
#include "s2fix/sphere_geom.hpp"

namespace s2fix {

enum class ClosureKind { SelfIntersection, ExactPeriod, Truncated };

inline std::string_view to_string(ClosureKind k) {
  switch (k) {
    case ClosureKind::SelfIntersection: return "SelfIntersection";
    case ClosureKind::ExactPeriod: return "ExactPeriod";
    case ClosureKind::Truncated: return "Truncated";
  }
  return "?";
}

struct CharacterTrace {
  SphericalPolyline polyline;  // open, vertices f^i(p); closed for an exact period
  ClosureKind closure = ClosureKind::Truncated;
  // For a self-intersection: the new edge `hit_edge_j` meets the earlier edge
  // `hit_edge_i` at `hit_point`.
  std::size_t hit_edge_i = 0;
  std::size_t hit_edge_j = 0;
  std::optional<SpherePoint> hit_point;
};

namespace detail {

inline void check_step(const SpherePoint& a, const SpherePoint& b, std::size_t i) {
  if (a.dot(b) <= -1.0 + kAntipodalEps) {
    throw Error(ErrorCode::AntipodalOrbitStep, "orbit step " + std::to_string(i) + " joins antipodal points");
  }
}

}  // namespace detail

/// Orbit polyline of p under f, grown one edge at a time until it closes
/// exactly, first crosses itself, or reaches max_segments edges. When the new
/// edge meets several earlier edges the hit nearest to its start is kept, so
/// the enclosed loop is simple.
inline CharacterTrace trace_character_polyline(const MapExpr& f, const SpherePoint& p, int max_segments) {
  if (max_segments < 1) throw Error(ErrorCode::InvalidArgument, "max_segments must be positive");
  SpherePoint x = evaluate(f, p);
  if (geodesic_distance(p, x) <= kOnCurveEps) throw Error(ErrorCode::FixedBasePoint, "base point is fixed by the map");

  CharacterTrace out;
  auto& verts = out.polyline.vertices;
  verts = {p};
  std::vector<GeodesicArc> edges;
  for (int j = 0; j < max_segments; ++j) {
    if (j > 0) x = evaluate(f, verts.back());
    detail::check_step(verts.back(), x, static_cast<std::size_t>(j));
    const bool closes = geodesic_distance(x, p) < kExactPeriodEps && j >= 2;
    const GeodesicArc e = minimal_arc(verts.back(), closes ? p : x);

    std::optional<std::size_t> hit;
    SpherePoint hit_at = p;
    double hit_dist = std::numeric_limits<double>::infinity();
    const std::size_t first = closes ? 1 : 0;
    for (std::size_t i = first; i + 1 < edges.size(); ++i) {
      if (!bounds_may_touch(edges[i], e)) continue;
      if (auto q = arc_intersection(edges[i], e)) {
        const double d = geodesic_distance(e.start(), *q);
        if (d < hit_dist) {
          hit_dist = d;
          hit = i;
          hit_at = *q;
        }
      }
    }
    if (hit) {
      verts.push_back(x);
      out.closure = ClosureKind::SelfIntersection;
      out.hit_edge_i = *hit;
      out.hit_edge_j = edges.size();
      out.hit_point = hit_at;
      return out;
    }
    if (closes) {
      out.polyline.closed = true;
      out.closure = ClosureKind::ExactPeriod;
      return out;
    }
    edges.push_back(e);
    verts.push_back(x);
  }
  out.closure = ClosureKind::Truncated;
  return out;
}

/// Polyline part of trace_character_polyline.
inline SphericalPolyline build_character_polyline(const MapExpr& f, const SpherePoint& p, int max_segments) {
  return trace_character_polyline(f, p, max_segments).polyline;
}

struct CharacterCurve {
  SpherePoint base{1.0, 0.0, 0.0};
  std::string map_id;
  SphericalPolyline polyline;
  SphericalPolyline loop;  // closed, simple
  ClosureKind closure_kind = ClosureKind::Truncated;
  LoopPartition partition;
};

/// Character curve with its first closed loop and the loop's partition of the
/// sphere. Throws TruncationBeforeClosure when the budget runs out first.
inline CharacterCurve extract_character_curve(const MapExpr& f, const SpherePoint& p, int max_segments,
                                              std::string map_id = {}) {
  auto trace = trace_character_polyline(f, p, max_segments);
  if (trace.closure == ClosureKind::Truncated) {
    throw Error(ErrorCode::TruncationBeforeClosure,
                "orbit polyline did not close within " + std::to_string(max_segments) + " segments");
  }
  CharacterCurve c;
  c.base = p;
  c.map_id = std::move(map_id);
  c.closure_kind = trace.closure;
  if (trace.closure == ClosureKind::ExactPeriod) {
    c.loop = trace.polyline;
  } else {
    // hit point, then v_{i+1} .. v_j, closing back along edge j.
    const auto& v = trace.polyline.vertices;
    std::vector<SpherePoint> lv{*trace.hit_point};
    for (std::size_t k = trace.hit_edge_i + 1; k <= trace.hit_edge_j; ++k) lv.push_back(v[k]);
    c.loop = SphericalPolyline{std::move(lv), true};
  }
  c.polyline = std::move(trace.polyline);
  c.partition = loop_partition(c.loop);
  c.loop = c.partition.loop;
  return c;
}

// ---------------------------------------------------------------------------

struct BallExclusionReport {
  double radius = 0.0;
  double nearest_fixed_distance = kPi;
  bool holds = false;
  Verdict membership = Verdict::Inside;
};

/// No fixed point of f within 4 d(p, f(p)) of p, checked against the fixed
/// points located on a mesh. Borderline membership is accepted.
inline BallExclusionReport verify_ball_exclusion(const MapExpr& f, const SpherePoint& p, int mesh_level = 4,
                                                 double tol = 1e-10) {
  const auto m = in_neighborhood_vk(f, 1, mesh_level);
  if (m.verdict == Verdict::Outside) throw Error(ErrorCode::NotInV1, "map is outside V_1");
  const double step = geodesic_distance(p, evaluate(f, p));
  if (step <= kOnCurveEps) throw Error(ErrorCode::FixedBasePoint, "base point is fixed by the map");
  BallExclusionReport r;
  r.membership = m.verdict;
  r.radius = 4.0 * step;
  for (const auto& q : fixed_points_of_map(f, mesh_level, tol).points) {
    r.nearest_fixed_distance = std::min(r.nearest_fixed_distance, geodesic_distance(p, q));
  }
  r.holds = r.nearest_fixed_distance >= r.radius - 1e-9;
  return r;
}

namespace detail {

inline bool edge_sets_intersect(const std::vector<GeodesicArc>& a, const std::vector<GeodesicArc>& b) {
  for (const auto& ea : a) {
    for (const auto& eb : b) {
      if (bounds_may_touch(ea, eb) && arc_intersection(ea, eb)) return true;
    }
  }
  return false;
}

}  // namespace detail

/// True iff no edge of one polyline meets an edge of the other.
inline bool polylines_disjoint(const SphericalPolyline& a, const SphericalPolyline& b) {
  return !detail::edge_sets_intersect(a.edges(), b.edges());
}

inline bool curves_disjoint(const CharacterCurve& c1, const CharacterCurve& c2) {
  return polylines_disjoint(c1.polyline, c2.polyline);
}

/// Minimum arc-to-arc geodesic distance between two polylines.
inline double polyline_distance(const SphericalPolyline& a, const SphericalPolyline& b) {
  const auto ea = a.edges();
  const auto eb = b.edges();
  double best = kPi;
  for (const auto& x : ea) {
    for (const auto& y : eb) {
      // chord lower bound from the bounding balls; geodesic >= chord.
      const double gap = (x.bound_center() - y.bound_center()).norm() - x.bound_radius() - y.bound_radius();
      if (gap > 0.0 && gap >= best) continue;
      best = std::min(best, arc_arc_distance(x, y));
      if (best == 0.0) return 0.0;
    }
  }
  return best;
}

inline double curve_distance(const CharacterCurve& c1, const CharacterCurve& c2) {
  return polyline_distance(c1.polyline, c2.polyline);
}

/// Whether the whole polyline lies in component `side` of the partition: its
/// first vertex classifies to `side` and no edge meets the loop.
inline bool polyline_in_disk(const SphericalPolyline& poly, const LoopPartition& partition, Component side) {
  if (poly.vertices.empty()) return false;
  if (point_component(partition, poly.vertices.front()) != side) return false;
  if (poly.vertices.size() == 1) return true;
  return !detail::edge_sets_intersect(poly.edges(), partition.edges);
}

inline bool curve_in_disk(const CharacterCurve& c, const LoopPartition& partition, Component side) {
  return polyline_in_disk(c.polyline, partition, side);
}

/// `count` points spread over the edges in proportion to edge length, one
/// at the center of each stratum.
inline std::vector<SpherePoint> sample_polyline(const SphericalPolyline& poly, int count) {
  std::vector<SpherePoint> out;
  const auto edges = poly.edges();
  const double total = poly.length();
  if (edges.empty() || count < 1) return out;
  if (total <= 0.0) return {poly.vertices.front()};
  double acc = 0.0;
  std::size_t e = 0;
  for (int s = 0; s < count; ++s) {
    const double target = (s + 0.5) * total / count;
    while (e + 1 < edges.size() && acc + edges[e].length() < target) acc += edges[e++].length();
    const double len = edges[e].length();
    const double t = len > 0.0 ? std::clamp((target - acc) / len, 0.0, 1.0) : 0.0;
    out.push_back(edges[e].point_at(t));
  }
  return out;
}

}  // namespace s2fix
