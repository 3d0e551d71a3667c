#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "s2fix/sphere_geom.hpp"

using namespace s2fix;

namespace {

#define EXPECT_S2_ERROR(stmt, expected)                  \
  do {                                                   \
    try {                                                \
      stmt;                                              \
      ADD_FAILURE() << "no error from " #stmt;           \
    } catch (const Error& e) {                           \
      EXPECT_EQ(e.code(), expected) << e.what();         \
    }                                                    \
  } while (0)

SphericalPolyline regular_polygon(int n, double z, bool closed) {
  const double r = std::sqrt(1.0 - z * z);
  SphericalPolyline p;
  for (int i = 0; i < n; ++i) {
    const double t = kTwoPi * i / n;
    p.vertices.emplace_back(r * std::cos(t), r * std::sin(t), z);
  }
  p.closed = closed;
  return p;
}

// Crossing of two minimal arcs, found by checking both candidate points on the
// two great circles against the arc length sums.
bool brute_arcs_cross(const SpherePoint& a0, const SpherePoint& a1, const SpherePoint& b0, const SpherePoint& b1) {
  const Vec3 n = a0.vec().cross(a1.vec()).cross(b0.vec().cross(b1.vec()));
  if (n.norm() < 1e-14) return false;
  for (double s : {1.0, -1.0}) {
    const Vec3 x = s * n.normalized();
    auto on = [&](const SpherePoint& p, const SpherePoint& q) {
      return std::abs(geodesic_distance(p.vec(), x) + geodesic_distance(x, q.vec()) - geodesic_distance(p, q)) < 1e-10;
    };
    if (on(a0, a1) && on(b0, b1)) return true;
  }
  return false;
}

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const Vec3 axis = Vec3(g(rng), g(rng), g(rng)).normalized();
  return rotation_matrix(axis, std::uniform_real_distribution<double>(0.0, kTwoPi)(rng));
}

}  // namespace

TEST(GeodesicDistance, Examples) {
  EXPECT_NEAR(geodesic_distance(SpherePoint(1, 0, 0), SpherePoint(0, 1, 0)), kPi / 2, 1e-15);
  EXPECT_EQ(geodesic_distance(SpherePoint(0, 0, 1), SpherePoint(0, 0, 1)), 0.0);
  EXPECT_NEAR(geodesic_distance(SpherePoint(0, 0, 1), SpherePoint(0, 0, -1)), kPi, 1e-15);
}

TEST(GeodesicDistance, SmallAnglesKeepPrecision) {
  const double t = 1e-9;
  EXPECT_NEAR(geodesic_distance(SpherePoint(1, 0, 0), SpherePoint(std::cos(t), std::sin(t), 0)), t, 1e-20);
}

TEST(SpherePoint, RejectsZeroVector) {
  EXPECT_S2_ERROR(SpherePoint(0, 0, 0), ErrorCode::InvalidArgument);
}

TEST(GeodesicArc, SlerpMidpoint) {
  const auto arc = minimal_arc(SpherePoint(1, 0, 0), SpherePoint(0, 1, 0));
  const auto m = arc.point_at(0.5);
  EXPECT_NEAR(m.x(), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(m.y(), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(m.z(), 0.0, 1e-15);
  EXPECT_EQ(arc.point_at(0.0), arc.start());
  EXPECT_EQ(arc.point_at(1.0), arc.end());
}

TEST(GeodesicArc, DegenerateArc) {
  const auto arc = minimal_arc(SpherePoint(0, 0, 1), SpherePoint(0, 0, 1));
  EXPECT_TRUE(arc.degenerate());
  EXPECT_EQ(arc.length(), 0.0);
  EXPECT_EQ(arc.point_at(0.3), SpherePoint(0, 0, 1));
}

TEST(GeodesicArc, AntipodalEndpoints) {
  EXPECT_S2_ERROR(minimal_arc(SpherePoint(0, 0, 1), SpherePoint(0, 0, -1)), ErrorCode::AntipodalEndpoints);
}

TEST(ArcIntersection, Crossing) {
  const auto a = minimal_arc(SpherePoint(1, 0, 0), SpherePoint(0, 1, 0));
  const auto b = minimal_arc(SpherePoint(1, 1, 1), SpherePoint(1, 1, -1));
  const auto x = arc_intersection(a, b);
  ASSERT_TRUE(x);
  EXPECT_NEAR(x->x(), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(x->y(), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(x->z(), 0.0, 1e-12);
}

TEST(ArcIntersection, DisjointHemispheres) {
  const auto a = minimal_arc(SpherePoint(1, 0, 1), SpherePoint(0, 1, 1));
  const auto b = minimal_arc(SpherePoint(1, 0, -1), SpherePoint(0, 1, -1));
  EXPECT_FALSE(arc_intersection(a, b));
}

TEST(ArcIntersection, SharedEndpoint) {
  const auto a = minimal_arc(SpherePoint(1, 0, 0), SpherePoint(0, 1, 0));
  const auto b = minimal_arc(SpherePoint(0, 1, 0), SpherePoint(0, 0, 1));
  const auto x = arc_intersection(a, b);
  ASSERT_TRUE(x);
  EXPECT_EQ(*x, SpherePoint(0, 1, 0));
}

TEST(ArcIntersection, CocircularOverlap) {
  const auto a = minimal_arc(SpherePoint(1, 0, 0), SpherePoint(0, 1, 0));
  const auto b = minimal_arc(SpherePoint(1, 1, 0), SpherePoint(-1, 1, 0));
  const auto x = arc_intersection(a, b);
  ASSERT_TRUE(x);
  EXPECT_NEAR(geodesic_distance(*x, SpherePoint(1, 1, 0)), 0.0, 1e-12);
}

TEST(ArcIntersection, AgreesWithBruteForceOnRandomArcs) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  int crossings = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const SpherePoint a0(g(rng), g(rng), g(rng)), a1(g(rng), g(rng), g(rng));
    const SpherePoint b0(g(rng), g(rng), g(rng)), b1(g(rng), g(rng), g(rng));
    if (a0.dot(a1) < -0.99 || b0.dot(b1) < -0.99) continue;
    const bool expected = brute_arcs_cross(a0, a1, b0, b1);
    crossings += expected;
    EXPECT_EQ(arc_intersection(minimal_arc(a0, a1), minimal_arc(b0, b1)).has_value(), expected);
  }
  EXPECT_GT(crossings, 50);
}

TEST(ArcDistance, PointToArcAndArcToArc) {
  const auto eq = minimal_arc(SpherePoint(1, 0, 0), SpherePoint(0, 1, 0));
  EXPECT_NEAR(point_arc_distance(SpherePoint(1, 1, std::sqrt(2.0)).vec(), eq), kPi / 4, 1e-12);
  EXPECT_NEAR(point_arc_distance(SpherePoint(0, 0, 1).vec(), eq), kPi / 2, 1e-12);
  EXPECT_NEAR(point_arc_distance(SpherePoint(-1, 0, 0).vec(), eq), kPi / 2, 1e-12);
  const double z = std::sin(0.3);
  const auto up = minimal_arc(SpherePoint(std::cos(0.3), 0, z), SpherePoint(0, std::cos(0.3), z));
  EXPECT_NEAR(arc_arc_distance(eq, up), 0.3, 1e-12);
}

TEST(FirstSelfIntersection, HexagonClosure) {
  auto hex = regular_polygon(6, 0.0, false);
  hex.vertices.push_back(hex.vertices.front());
  const auto hit = polyline_first_self_intersection(hex);
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->edge_i, 0u);
  EXPECT_EQ(hit->edge_j, 5u);
  EXPECT_NEAR(geodesic_distance(hit->point, hex.vertices.front()), 0.0, 1e-12);
  EXPECT_FALSE(polyline_first_self_intersection(regular_polygon(6, 0.0, true)));
}

TEST(FirstSelfIntersection, FigureEightMatchesBruteForce) {
  // A lemniscate-shaped path around (1,0,0), sampled coarsely.
  SphericalPolyline path;
  for (int i = 0; i <= 40; ++i) {
    const double t = kTwoPi * i / 40.0 + 0.05;
    path.vertices.emplace_back(1.0, 0.3 * std::sin(t), 0.3 * std::sin(t) * std::cos(t));
  }
  std::optional<std::pair<std::size_t, std::size_t>> brute;
  const auto n = path.edge_count();
  for (std::size_t j = 2; j < n && !brute; ++j) {
    for (std::size_t i = 0; i + 1 < j && !brute; ++i) {
      if (brute_arcs_cross(path.vertices[i], path.vertices[i + 1], path.vertices[j], path.vertices[j + 1])) {
        brute = std::make_pair(i, j);
      }
    }
  }
  ASSERT_TRUE(brute);
  const auto hit = polyline_first_self_intersection(path);
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->edge_i, brute->first);
  EXPECT_EQ(hit->edge_j, brute->second);
}

TEST(FirstSelfIntersection, SpiralHasNone) {
  SphericalPolyline spiral;
  for (int i = 0; i < 200; ++i) {
    const double t = 0.2 * i;
    const double colat = 0.05 + 0.004 * i;
    spiral.vertices.emplace_back(std::sin(colat) * std::cos(t), std::sin(colat) * std::sin(t), std::cos(colat));
  }
  EXPECT_FALSE(polyline_first_self_intersection(spiral));
}

TEST(LoopPartition, EquatorialHexagon) {
  const auto part = loop_partition(regular_polygon(6, 0.0, true));
  EXPECT_NEAR(part.component_areas[0], kTwoPi, 1e-12);
  EXPECT_NEAR(part.component_areas[1], kTwoPi, 1e-12);
  EXPECT_EQ(point_component(part, SpherePoint(0, 0, 1)), Component::Left);
  EXPECT_EQ(point_component(part, SpherePoint(0, 0, -1)), Component::Right);
}

TEST(LoopPartition, OctantTriangle) {
  const auto part = loop_partition(SphericalPolyline{{SpherePoint(1, 0, 0), SpherePoint(0, 1, 0), SpherePoint(0, 0, 1)}, true});
  EXPECT_NEAR(part.component_areas[0], kPi / 2, 1e-12);
  EXPECT_NEAR(part.component_areas[1], 3.5 * kPi, 1e-12);
  EXPECT_EQ(point_component(part, SpherePoint(1, 1, 1)), Component::Left);
  EXPECT_EQ(point_component(part, SpherePoint(-1, -1, -1)), Component::Right);
}

TEST(LoopPartition, DegenerateLoops) {
  EXPECT_S2_ERROR(loop_partition(SphericalPolyline{{SpherePoint(1, 0, 0), SpherePoint(0, 1, 0)}, true}),
                  ErrorCode::DegenerateLoop);
  EXPECT_S2_ERROR(loop_partition(SphericalPolyline{{SpherePoint(1, 0, 0), SpherePoint(0, 1, 0), SpherePoint(1, 1, 0)}, true}),
                  ErrorCode::DegenerateLoop);
}

TEST(PointComponent, RepresentativesAndVertices) {
  const auto part = loop_partition(regular_polygon(12, 0.4, true));
  EXPECT_EQ(point_component(part, part.representative_points[0]), Component::Left);
  EXPECT_EQ(point_component(part, part.representative_points[1]), Component::Right);
  EXPECT_EQ(point_component(part, part.loop.vertices[3]), Component::OnCurve);
  EXPECT_EQ(point_component(part, SpherePoint(0, 0, 1)), Component::Left);
  EXPECT_EQ(point_component(part, SpherePoint(0.2, 0.1, -1)), Component::Right);
}

TEST(PointComponent, AgreesWithLatitudeOnRandomPoints) {
  const double z0 = -0.3;
  const auto part = loop_partition(regular_polygon(400, z0, true));
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int i = 0; i < 500; ++i) {
    const SpherePoint x(g(rng), g(rng), g(rng));
    // The 400-gon sits within 1.3e-5 of its latitude circle.
    if (std::abs(x.z() - z0) < 1e-3) continue;
    EXPECT_EQ(point_component(part, x), x.z() > z0 ? Component::Left : Component::Right);
  }
}

TEST(LoopPartition, AreasSumToSphereAndAreRotationInvariant) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_real_distribution<double> u(0.05, 1.4);
    const double colat = u(rng);
    auto poly = regular_polygon(5 + trial, std::cos(colat), true);
    // Jitter the radius so the polygon is not regular.
    for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
      const Vec3 v = poly.vertices[i].vec();
      poly.vertices[i] = SpherePoint(v.x() * (1.0 + 0.1 * std::sin(3.0 * i)), v.y() * (1.0 + 0.1 * std::sin(3.0 * i)), v.z());
    }
    const auto a = loop_partition(poly);
    EXPECT_NEAR(a.component_areas[0] + a.component_areas[1], kFourPi, 1e-12);
    const Mat3 R = random_rotation(rng);
    SphericalPolyline rotated{{}, true};
    for (const auto& v : poly.vertices) rotated.vertices.emplace_back(R * v.vec());
    const auto b = loop_partition(rotated);
    EXPECT_NEAR(a.component_areas[0], b.component_areas[0], 1e-9);
    EXPECT_NEAR(a.component_areas[1], b.component_areas[1], 1e-9);
  }
}

TEST(GeodesicDistance, TriangleInequalityAndRotationInvariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 1000; ++i) {
    const SpherePoint a(g(rng), g(rng), g(rng)), b(g(rng), g(rng), g(rng)), c(g(rng), g(rng), g(rng));
    EXPECT_LE(geodesic_distance(a, c), geodesic_distance(a, b) + geodesic_distance(b, c) + 1e-12);
    const Mat3 R = random_rotation(rng);
    EXPECT_NEAR(geodesic_distance(SpherePoint(R * a.vec()), SpherePoint(R * b.vec())), geodesic_distance(a, b), 1e-12);
  }
}

TEST(ExpLog, RoundTrip) {
  const SpherePoint x(0.3, -0.2, 0.9);
  const SpherePoint y(-0.1, 0.5, 0.7);
  const Vec3 v = log_map(x, y);
  EXPECT_NEAR(v.dot(x.vec()), 0.0, 1e-14);
  EXPECT_NEAR(v.norm(), geodesic_distance(x, y), 1e-14);
  EXPECT_NEAR(geodesic_distance(exp_map(x, v), y), 0.0, 1e-12);
}
