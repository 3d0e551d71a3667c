#include <gtest/gtest.h>

#include <cmath>

#include "s2fix/dynamics.hpp"

using namespace s2fix;

namespace {

std::shared_ptr<FieldRegistry> polar_cap() {
  auto reg = std::make_shared<FieldRegistry>();
  reg->emplace("cap", localized_rotation_field(SpherePoint(0, 0, 1), 1.2, 0.01));
  return reg;
}

MapExpr cap_flow(const std::shared_ptr<FieldRegistry>& reg, double time) {
  return make_flow("cap", reg, time, choose_flow_steps(reg->at("cap"), time));
}

// z -> 1.2 z in the chart: every point except the poles drifts from one pole to the other.
MapExpr dilation() { return make_mobius(std::sqrt(1.2), 0.0, 0.0, 1.0 / std::sqrt(1.2)); }

}  // namespace

TEST(Semiorbit, HexagonPeriod) {
  const auto rec = semiorbit(make_rotation(Vec3::UnitZ(), kTwoPi / 6), SpherePoint(1, 0, 0), 6);
  ASSERT_EQ(rec.points.size(), 7u);
  ASSERT_TRUE(rec.exact_period);
  EXPECT_EQ(*rec.exact_period, 6);
  for (int i = 0; i < 6; ++i) {
    const double t = kTwoPi * i / 6;
    EXPECT_NEAR(geodesic_distance(rec.points[i], SpherePoint(std::cos(t), std::sin(t), 0)), 0.0, 1e-14);
  }
  EXPECT_NEAR(rec.min_step, kPi / 3, 1e-14);
  EXPECT_NEAR(rec.max_step, kPi / 3, 1e-14);
}

TEST(Semiorbit, IdentityHasPeriodOne) {
  const SpherePoint p(0.3, 0.1, 0.2);
  const auto rec = semiorbit(MapExpr::identity(), p, 5);
  ASSERT_TRUE(rec.exact_period);
  EXPECT_EQ(*rec.exact_period, 1);
  for (const auto& x : rec.points) EXPECT_EQ(x, p);
}

TEST(Semiorbit, IrrationalRotationHasNoPeriod) {
  const auto rec = semiorbit(make_rotation(Vec3::UnitZ(), 1.0), SpherePoint(1, 0, 0), 100);
  EXPECT_FALSE(rec.exact_period);
  // Closest return of n * 1 rad to a multiple of 2 pi for n <= 100 is at n = 44.
  double best = kPi;
  int at = 0;
  for (int n = 1; n <= 100; ++n) {
    const double d = std::abs(std::remainder(static_cast<double>(n), kTwoPi));
    if (d < best) {
      best = d;
      at = n;
    }
  }
  EXPECT_EQ(rec.min_return_index, at);
  EXPECT_NEAR(rec.min_return_distance, best, 1e-12);
  EXPECT_GT(rec.min_return_distance, 0.0);
}

TEST(Semiorbit, MatchesRecomputation) {
  const auto f = make_twist(Vec3(0.2, 0.1, 1.0), 0.3, 0.0, 0.8);
  const SpherePoint p(0.5, 0.2, 0.3);
  const auto rec = semiorbit(f, p, 50);
  SpherePoint x = p;
  for (int i = 0; i <= 50; ++i) {
    EXPECT_LT(geodesic_distance(rec.points[i], x), 1e-12);
    x = evaluate(f, x);
  }
}

TEST(Recurrence, RationalRotation) {
  const auto r = recurrence_scan(make_rotation(Vec3::UnitZ(), kTwoPi / 2000), SpherePoint(1, 0, 0), 2000, 1e-6);
  EXPECT_TRUE(r.recurrent);
  ASSERT_TRUE(r.witness_index);
  EXPECT_EQ(*r.witness_index, 2000);
  EXPECT_LT(r.witness_distance, 1e-9);
}

TEST(Recurrence, FlowOnInvariantCircle) {
  auto reg = polar_cap();
  const auto f = cap_flow(reg, 1.0);
  const SpherePoint p(std::sin(0.6), 0, std::cos(0.6));
  const auto r = recurrence_scan(f, p, 10000, 1e-3);
  EXPECT_TRUE(r.recurrent);
  // The orbit stays on its latitude.
  EXPECT_NEAR(evaluate(f, p).z(), p.z(), 1e-10);
}

TEST(Recurrence, PointOutsideTwistSupport) {
  const auto r = recurrence_scan(make_twist(Vec3::UnitZ(), 0.1, 0.5, 0.2), SpherePoint(1, 0, 0), 10, 1e-6);
  EXPECT_TRUE(r.recurrent);
  ASSERT_TRUE(r.witness_index);
  EXPECT_EQ(*r.witness_index, 1);
}

TEST(Recurrence, MonotoneInDelta) {
  const auto f = make_rotation(Vec3::UnitZ(), 1.0);
  const SpherePoint p(1, 0, 0);
  bool seen = false;
  for (double delta : {1e-4, 1e-3, 1e-2, 3e-2, 1e-1, 1.0}) {
    const bool rec = recurrence_scan(f, p, 200, delta).recurrent;
    if (seen) {
      EXPECT_TRUE(rec) << delta;
    }
    seen = seen || rec;
  }
  EXPECT_TRUE(seen);
}

TEST(Recurrence, DriftingPointIsNotRecurrent) {
  EXPECT_FALSE(recurrence_scan(dilation(), SpherePoint(1, 0, 0), 500, 1e-3).recurrent);
  // The forward orbit accumulates only at the attracting pole, so the
  // recurrent proxy from its closure sits next to that pole.
  const auto q = recurrent_point_in_closure(dilation(), SpherePoint(1, 0, 0), 500, 1e-3);
  EXPECT_LT(std::hypot(q.x(), q.y()), 1e-3);
  try {
    recurrent_point_in_closure(dilation(), SpherePoint(1, 0, 0), 10, 1e-6);
    ADD_FAILURE() << "expected NoRecurrenceFound";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoRecurrenceFound);
  }
}

TEST(RecurrentPoint, Examples) {
  const auto rot = make_rotation(Vec3::UnitZ(), kTwoPi / 50);
  const auto q = recurrent_point_in_closure(rot, SpherePoint(1, 0, 0), 200, 1e-6);
  EXPECT_LT(recurrence_scan(rot, q, 200, 1e-6).witness_distance, 1e-9);
  EXPECT_NEAR(q.z(), 0.0, 1e-14);

  const SpherePoint pole(0, 0, 1);
  EXPECT_EQ(recurrent_point_in_closure(rot, pole, 100, 1e-6), pole);

  auto reg = polar_cap();
  const auto flow = cap_flow(reg, 1.0);
  const SpherePoint p(std::sin(0.9), 0, std::cos(0.9));
  const auto c = recurrent_point_in_closure(flow, p, 10000, 1e-3);
  EXPECT_NEAR(c.z(), p.z(), 1e-9);
}

TEST(FixedPoints, RotationPoles) {
  const auto fix = fixed_points_of_map(make_rotation(Vec3::UnitZ(), 0.004), 3, 1e-10);
  EXPECT_FALSE(fix.degenerate);
  ASSERT_EQ(fix.points.size(), 2u);
  for (const auto& x : fix.points) EXPECT_LT(std::hypot(x.x(), x.y()), 1e-12);
  EXPECT_GT(fix.points[0].z() * fix.points[1].z(), -1.0 - 1e-12);
  EXPECT_LT(fix.points[0].z() * fix.points[1].z(), 0.0);
}

TEST(FixedPoints, IdentityIsDegenerate) {
  const auto fix = fixed_points_of_map(MapExpr::identity(), 3, 1e-10);
  EXPECT_TRUE(fix.degenerate);
  EXPECT_FALSE(fix.points.empty());
  for (const auto& x : fix.points) EXPECT_EQ(evaluate(MapExpr::identity(), x), x);
}

TEST(FixedPoints, TwistBandComplement) {
  const auto f = make_twist(Vec3::UnitZ(), 0.01, 0.35, 0.15);
  const double tol = 1e-10;
  const auto fix = fixed_points_of_map(f, 3, tol);
  ASSERT_FALSE(fix.points.empty());
  for (const auto& x : fix.points) {
    const double d = geodesic_distance(x, evaluate(f, x));
    EXPECT_LT(d, tol);
    // Inside the band the displacement is 0.01 bump(z) sin(colatitude).
    if (x.z() > 0.2 && x.z() < 0.5) {
      const Bump bump{0.35, 0.15};
      EXPECT_LT(0.01 * bump.value(x.z()) * std::sqrt(1 - x.z() * x.z()), 2 * tol);
    }
  }
}

TEST(Invariance, SharedAxisRotations) {
  const std::vector<MapExpr> g = {make_rotation(Vec3::UnitZ(), 0.003)};
  const auto r = invariance_check(g, make_rotation(Vec3::UnitZ(), 0.7), 20, 1e-10, 3);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.fixed_points.size(), 2u);
  EXPECT_LT(r.max_violation, 1e-12);
}

TEST(Invariance, TwistAgainstCoaxialRotation) {
  const std::vector<MapExpr> g = {make_twist(Vec3::UnitZ(), 0.01, 0.0, 0.4)};
  const auto r = invariance_check(g, make_rotation(Vec3::UnitZ(), 0.37), 20, 1e-10, 3);
  EXPECT_TRUE(r.holds);
  EXPECT_LT(r.max_violation, 1e-10);
}

TEST(Invariance, MapInItsOwnSet) {
  const auto f = make_twist(Vec3(1, 0, 1), 0.02, 0.1, 0.5);
  const std::vector<MapExpr> g = {f};
  const auto r = invariance_check(g, f, 20, 1e-10, 3);
  EXPECT_TRUE(r.holds);
}

TEST(Refine, ConvergesToRotationAxis) {
  const std::vector<MapExpr> maps = {make_rotation(Vec3(1, 1, 1), 0.01), make_rotation(Vec3(1, 1, 1), -0.03)};
  const auto r = refine_common_fixed_point(maps, SpherePoint(0.7, 0.5, 0.4), 1e-12);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(geodesic_distance(r.point, SpherePoint(1, 1, 1)), 1e-9);
}
