#pragma once

// Forward orbits, finite-budget recurrence, and numerical fixed points of one
// map or of a finite family of maps.

#include <algorithm>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2fix/diffeo.hpp"
#include "s2fix/mesh.hpp"
#include "s2fix/sphere_geom.hpp"

namespace s2fix {

inline constexpr double kExactPeriodEps = 1e-9;

struct OrbitRecord {
  SpherePoint base{1.0, 0.0, 0.0};
  std::string map_id;
  std::vector<SpherePoint> points;  // points[i] = f^i(base), i = 0..N
  int min_return_index = 0;
  double min_return_distance = 0.0;
  std::optional<int> exact_period;
  double min_step = 0.0;  // min over i of d(points[i], points[i+1])
  double max_step = 0.0;
};

/// f^i(p) for i = 0..N.
inline OrbitRecord semiorbit(const MapExpr& f, const SpherePoint& p, int N, std::string map_id = {}) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "orbit length must be at least 1");
  OrbitRecord rec;
  rec.base = p;
  rec.map_id = std::move(map_id);
  rec.points.reserve(static_cast<std::size_t>(N) + 1);
  rec.points.push_back(p);
  rec.min_return_distance = std::numeric_limits<double>::infinity();
  rec.min_step = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= N; ++i) {
    rec.points.push_back(evaluate(f, rec.points.back()));
    const double step = geodesic_distance(rec.points[i - 1], rec.points[i]);
    rec.min_step = std::min(rec.min_step, step);
    rec.max_step = std::max(rec.max_step, step);
    const double d = geodesic_distance(rec.points[i], p);
    if (d < rec.min_return_distance) {
      rec.min_return_distance = d;
      rec.min_return_index = i;
    }
    if (!rec.exact_period && d < kExactPeriodEps) rec.exact_period = i;
  }
  return rec;
}

struct RecurrenceReport {
  bool recurrent = false;
  std::optional<int> witness_index;
  double witness_distance = std::numeric_limits<double>::infinity();
  double threshold = 0.0;
};

/// Recurrent iff some 1 <= i <= N has d(f^i(p), p) < delta; the witness is
/// the first index attaining the minimum return distance.
inline RecurrenceReport recurrence_scan(const MapExpr& f, const SpherePoint& p, int N, double delta) {
  if (N < 1 || !(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "recurrence scan needs N >= 1 and delta > 0");
  RecurrenceReport r;
  r.threshold = delta;
  SpherePoint x = p;
  for (int i = 1; i <= N; ++i) {
    x = evaluate(f, x);
    const double d = geodesic_distance(x, p);
    if (d < r.witness_distance) {
      r.witness_distance = d;
      r.witness_index = i;
    }
  }
  r.recurrent = r.witness_distance < delta;
  return r;
}

/// Proxy for a point of a minimal set inside the closure of the forward
/// orbit of p: among the last N/2 iterates, the one that comes back closest
/// to itself later in the window. Throws NoRecurrenceFound if that point
/// fails its own recurrence scan.
inline SpherePoint recurrent_point_in_closure(const MapExpr& f, const SpherePoint& p, int N, double delta) {
  if (N < 2 || !(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "recurrence search needs N >= 2 and delta > 0");
  if (geodesic_distance(p, evaluate(f, p)) < kUnitEps) return p;
  const auto orbit = semiorbit(f, p, N);
  const int start = N / 2;
  int best = -1;
  double best_score = std::numeric_limits<double>::infinity();
  for (int i = start; i < N; ++i) {
    const Vec3& xi = orbit.points[i].vec();
    double score = std::numeric_limits<double>::infinity();
    for (int j = i + 1; j <= N; ++j) score = std::min(score, (orbit.points[j].vec() - xi).squaredNorm());
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  const SpherePoint candidate = orbit.points[best];
  const auto check = recurrence_scan(f, candidate, N, delta);
  if (!check.recurrent) {
    throw Error(ErrorCode::NoRecurrenceFound, "no return within " + std::to_string(delta) + " after " +
                                                  std::to_string(N) + " iterates (closest " +
                                                  std::to_string(check.witness_distance) + ")");
  }
  return candidate;
}

// ---------------------------------------------------------------------------
// Fixed points.

/// max over maps of d(x, g(x)); zero for an empty family.
inline double displacement(std::span<const MapExpr> maps, const SpherePoint& x) {
  double r = 0.0;
  for (const auto& g : maps) r = std::max(r, geodesic_distance(x, evaluate(g, x)));
  return r;
}

struct RefineResult {
  SpherePoint point{1.0, 0.0, 0.0};
  double residual = 0.0;
  bool converged = false;
};

namespace detail {

inline SpherePoint pattern_descent(std::span<const MapExpr> maps, SpherePoint x, double& value, double step,
                                   double floor_value) {
  for (int iter = 0; iter < 2000 && step > 1e-15 && value > floor_value; ++iter) {
    const auto frame = tangent_frame(x.vec());
    const std::array<Vec3, 8> dirs = {frame[0],  -frame[0], frame[1], -frame[1],
                                      (frame[0] + frame[1]).normalized(),  (frame[0] - frame[1]).normalized(),
                                      (-frame[0] + frame[1]).normalized(), (-frame[0] - frame[1]).normalized()};
    double best = value;
    std::optional<SpherePoint> best_x;
    for (const auto& d : dirs) {
      const SpherePoint y = exp_map(x, step * d);
      const double v = displacement(maps, y);
      if (v < best) {
        best = v;
        best_x = y;
      }
    }
    if (best_x) {
      x = *best_x;
      value = best;
    } else {
      step *= 0.5;
    }
  }
  return x;
}

}  // namespace detail

/// Drives max_g d(x, g(x)) toward zero from x0 by damped Gauss-Newton on the
/// stacked residuals g(x) - x in the tangent chart at the current iterate.
/// After three consecutive rejected steps it switches to pattern search.
inline RefineResult refine_common_fixed_point(std::span<const MapExpr> maps, const SpherePoint& x0, double tol,
                                              double initial_step = 1e-2) {
  RefineResult out;
  out.point = x0;
  out.residual = displacement(maps, x0);
  const double target = tol * 1e-4;
  double lambda = 1e-12;
  int rejected = 0;
  for (int iter = 0; iter < 100 && out.residual > target && rejected < 3; ++iter) {
    const auto frame = tangent_frame(out.point.vec());
    const std::size_t m = maps.size();
    Eigen::VectorXd F(3 * m);
    Eigen::MatrixXd J(3 * m, 2);
    for (std::size_t i = 0; i < m; ++i) {
      const Jet j = evaluate_jet(maps[i], out.point);
      F.segment<3>(3 * i) = j.image.vec() - out.point.vec();
      J.block<3, 1>(3 * i, 0) = j.jacobian * frame[0] - frame[0];
      J.block<3, 1>(3 * i, 1) = j.jacobian * frame[1] - frame[1];
    }
    const Eigen::Matrix2d JtJ = J.transpose() * J;
    const Eigen::Vector2d g = J.transpose() * F;
    bool accepted = false;
    for (int tries = 0; tries < 8 && !accepted; ++tries) {
      const Eigen::Matrix2d A = JtJ + lambda * (JtJ.diagonal().maxCoeff() + 1e-300) * Eigen::Matrix2d::Identity();
      const Eigen::Vector2d delta = A.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const SpherePoint y = exp_map(out.point, delta[0] * frame[0] + delta[1] * frame[1]);
      const double r = displacement(maps, y);
      if (r < out.residual) {
        out.point = y;
        out.residual = r;
        lambda = std::max(lambda * 0.1, 1e-15);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }
    rejected = accepted ? 0 : rejected + 1;
  }
  if (out.residual > target) {
    out.point = detail::pattern_descent(maps, out.point, out.residual, initial_step, target);
  }
  out.converged = out.residual < tol;
  return out;
}

struct FixedPointSet {
  std::vector<SpherePoint> points;
  bool degenerate = false;  // every mesh vertex is already fixed; points are a coarse sample
};

/// Numerical common fixed points of a family of maps. Seeds are mesh
/// vertices whose displacement is a local minimum over their neighbors;
/// each is refined and kept if its residual is below tol. Results closer
/// than 10 tol are merged, in mesh-index order.
inline FixedPointSet common_fixed_points(std::span<const MapExpr> maps, int mesh_level, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  const auto mesh = icosphere(mesh_level);
  const std::size_t n = mesh->vertices.size();
  std::vector<double> disp(n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    disp[i] = displacement(maps, SpherePoint(mesh->vertices[i]));
    worst = std::max(worst, disp[i]);
  }
  FixedPointSet out;
  if (worst < tol) {
    out.degenerate = true;
    for (std::size_t i = 0; i < mesh->level_sizes[0]; ++i) out.points.emplace_back(mesh->vertices[i]);
    return out;
  }
  auto keep = [&](const SpherePoint& x) {
    for (const auto& q : out.points) {
      if (geodesic_distance(q, x) < 10.0 * tol) return;
    }
    out.points.push_back(x);
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (disp[i] < tol) {
      keep(SpherePoint(mesh->vertices[i]));
      continue;
    }
    bool local_min = true;
    for (auto nb : mesh->neighbors[i]) {
      if (disp[nb] < disp[i] || (disp[nb] == disp[i] && nb < i)) {
        local_min = false;
        break;
      }
    }
    if (!local_min) continue;
    const auto r = refine_common_fixed_point(maps, SpherePoint(mesh->vertices[i]), tol, mesh_spacing(mesh_level));
    if (r.converged) keep(r.point);
  }
  return out;
}

inline FixedPointSet fixed_points_of_map(const MapExpr& f, int mesh_level, double tol) {
  return common_fixed_points(std::span<const MapExpr>(&f, 1), mesh_level, tol);
}

struct InvarianceReport {
  std::vector<SpherePoint> fixed_points;  // sampled common fixed points of g_set
  double max_violation = 0.0;             // max over them of the g_set displacement of f(x)
  bool holds = false;                     // max_violation <= 10 tol
};

/// Checks that f carries common fixed points of g_set to common fixed points.
inline InvarianceReport invariance_check(std::span<const MapExpr> g_set, const MapExpr& f, int samples, double tol,
                                         int mesh_level = 4) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be positive");
  const auto fix = common_fixed_points(g_set, mesh_level, tol);
  if (fix.points.empty()) throw Error(ErrorCode::NoFixedPointsFound, "no common fixed points located");
  InvarianceReport r;
  const std::size_t total = fix.points.size();
  const std::size_t count = std::min<std::size_t>(total, static_cast<std::size_t>(samples));
  for (std::size_t s = 0; s < count; ++s) r.fixed_points.push_back(fix.points[s * total / count]);
  for (const auto& x : r.fixed_points) r.max_violation = std::max(r.max_violation, displacement(g_set, evaluate(f, x)));
  r.holds = r.max_violation <= 10.0 * tol;
  return r;
}

}  // namespace s2fix
