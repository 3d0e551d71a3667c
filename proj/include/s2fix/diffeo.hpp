#pragma once

// C1 sphere diffeomorphisms: closed-form primitives, flow maps of named
// vector fields, and words over them. A word is evaluated right to left: the
// last listed factor is applied first, so [f, g] = f g f^-1 g^-1 moves a point
// by g^-1 first and by f last.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "s2fix/mesh.hpp"
#include "s2fix/sphere_geom.hpp"

namespace s2fix {

using Complex = std::complex<double>;

/// C2 polynomial bump (1 - ((t - center)/half_width)^2)^3 on |t - center| < half_width.
struct Bump {
  double center = 0.0;
  double half_width = 1.0;

  double value(double t) const {
    const double u = (t - center) / half_width;
    if (std::abs(u) >= 1.0) return 0.0;
    const double q = 1.0 - u * u;
    return q * q * q;
  }
  double derivative(double t) const {
    const double u = (t - center) / half_width;
    if (std::abs(u) >= 1.0) return 0.0;
    const double q = 1.0 - u * u;
    return -6.0 * u * q * q / half_width;
  }
  bool operator==(const Bump&) const = default;
};

struct Rotation {
  Vec3 axis = Vec3::UnitZ();
  double angle = 0.0;
  friend bool operator==(const Rotation& a, const Rotation& b) { return a.axis == b.axis && a.angle == b.angle; }
};

/// Rotates x about `axis` by amplitude * bump(axis . x).
struct Twist {
  Vec3 axis = Vec3::UnitZ();
  double amplitude = 0.0;
  Bump bump;

  double profile(double t) const { return amplitude * bump.value(t); }
  double profile_derivative(double t) const { return amplitude * bump.derivative(t); }
  friend bool operator==(const Twist& a, const Twist& b) {
    return a.axis == b.axis && a.amplitude == b.amplitude && a.bump == b.bump;
  }
};

/// z -> (a z + b) / (c z + d) in the stereographic chart from the north pole.
struct MobiusStereo {
  Complex a{1.0, 0.0}, b{0.0, 0.0}, c{0.0, 0.0}, d{1.0, 0.0};
  bool operator==(const MobiusStereo&) const = default;
};

/// Rotation field about `axis` with angular speed amplitude * bump(axis . x).
/// Both field kinds accepted in scenario files reduce to this form.
struct VectorField {
  enum class Kind { LocalizedRotation, LatitudeBand };
  Kind kind = Kind::LocalizedRotation;
  Vec3 axis = Vec3::UnitZ();
  double amplitude = 0.0;
  Bump bump;
  // Source parameters, kept for reporting.
  double radius = 0.0;
  std::array<double, 2> band{0.0, 0.0};

  Vec3 operator()(const Vec3& y) const {
    const double r = y.norm();
    return amplitude * bump.value(axis.dot(y) / r) * axis.cross(y);
  }
  Mat3 jacobian(const Vec3& y) const {
    const double r = y.norm();
    const double u = axis.dot(y) / r;
    const Vec3 grad_u = axis / r - (axis.dot(y) / (r * r * r)) * y;
    Mat3 skew;
    skew << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
    return amplitude * (bump.value(u) * skew + bump.derivative(u) * axis.cross(y) * grad_u.transpose());
  }
  friend bool operator==(const VectorField& a, const VectorField& b) {
    return a.kind == b.kind && a.axis == b.axis && a.amplitude == b.amplitude && a.bump == b.bump;
  }
};

inline VectorField localized_rotation_field(const SpherePoint& center, double radius, double amplitude) {
  if (!(radius > 0.0) || radius >= kPi) throw Error(ErrorCode::InvalidArgument, "field radius must lie in (0, pi)");
  VectorField f;
  f.kind = VectorField::Kind::LocalizedRotation;
  f.axis = center.vec();
  f.amplitude = amplitude;
  f.bump = Bump{1.0, 1.0 - std::cos(radius)};
  f.radius = radius;
  return f;
}

inline VectorField latitude_band_field(double z_low, double z_high, double amplitude) {
  if (!(z_low < z_high) || z_low < -1.0 || z_high > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "latitude band must satisfy -1 <= low < high <= 1");
  }
  VectorField f;
  f.kind = VectorField::Kind::LatitudeBand;
  f.axis = Vec3::UnitZ();
  f.amplitude = amplitude;
  f.bump = Bump{0.5 * (z_low + z_high), 0.5 * (z_high - z_low)};
  f.band = {z_low, z_high};
  return f;
}

using FieldRegistry = std::map<std::string, VectorField>;

/// Time-`time` map of a registered field, integrated by `steps` fixed RK4 steps.
struct FlowMap {
  std::string field;
  std::shared_ptr<const FieldRegistry> fields;
  double time = 0.0;
  int steps = 1;
  friend bool operator==(const FlowMap& a, const FlowMap& b) {
    return a.field == b.field && a.fields == b.fields && a.time == b.time && a.steps == b.steps;
  }
};

class MapExpr;

struct Factor {
  std::string id;
  std::shared_ptr<const MapExpr> map;
  int exponent = 1;
};

struct MapWord {
  std::vector<Factor> factors;
};

class MapExpr {
 public:
  using Node = std::variant<Rotation, Twist, MobiusStereo, FlowMap, MapWord>;

  MapExpr() : node_(MapWord{}) {}
  MapExpr(Rotation r) : node_(std::move(r)) {}
  MapExpr(Twist t) : node_(std::move(t)) {}
  MapExpr(MobiusStereo m) : node_(std::move(m)) {}
  MapExpr(FlowMap f) : node_(std::move(f)) {}
  MapExpr(MapWord w) : node_(std::move(w)) {}

  static MapExpr identity() { return MapExpr(MapWord{}); }

  const Node& node() const noexcept { return node_; }
  template <class T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&node_);
  }

 private:
  Node node_;
};

bool operator==(const MapExpr& a, const MapExpr& b);

inline bool same_factor_map(const Factor& a, const Factor& b) {
  if (a.id != b.id) return false;
  if (a.map == b.map) return true;
  return a.map && b.map && *a.map == *b.map;
}

inline bool operator==(const MapWord& a, const MapWord& b) {
  if (a.factors.size() != b.factors.size()) return false;
  for (std::size_t i = 0; i < a.factors.size(); ++i) {
    if (a.factors[i].exponent != b.factors[i].exponent || !same_factor_map(a.factors[i], b.factors[i])) return false;
  }
  return true;
}

inline bool operator==(const MapExpr& a, const MapExpr& b) { return a.node() == b.node(); }

// ---------------------------------------------------------------------------
// Constructors with invariant checks.

inline MapExpr make_rotation(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "rotation axis must be nonzero");
  return Rotation{axis / n, angle};
}

inline MapExpr make_twist(const Vec3& axis, double amplitude, double center, double half_width) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "twist axis must be nonzero");
  if (!(half_width > 0.0) || center - half_width <= -1.0 || center + half_width >= 1.0) {
    throw Error(ErrorCode::InvalidArgument, "twist support must lie inside (-1, 1)");
  }
  return Twist{axis / n, amplitude, Bump{center, half_width}};
}

inline MapExpr make_mobius(Complex a, Complex b, Complex c, Complex d) {
  if (std::abs(a * d - b * c - Complex(1.0, 0.0)) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "Mobius coefficients must satisfy ad - bc = 1");
  }
  return MobiusStereo{a, b, c, d};
}

inline MapExpr make_flow(std::string field, std::shared_ptr<const FieldRegistry> fields, double time, int steps) {
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "flow steps must be positive");
  return FlowMap{std::move(field), std::move(fields), time, steps};
}

/// Word of named factors applied right to left.
inline MapExpr make_word(std::vector<Factor> factors) {
  for (const auto& f : factors) {
    if (!f.map) throw Error(ErrorCode::UnknownGenerator, "word factor '" + f.id + "' has no map");
    if (f.exponent != 1 && f.exponent != -1) throw Error(ErrorCode::InvalidArgument, "word exponents must be +1 or -1");
  }
  return MapWord{std::move(factors)};
}

// ---------------------------------------------------------------------------
// Inverse and commutators.

inline MapExpr inverse(const MapExpr& f) {
  return std::visit(
      [](const auto& node) -> MapExpr {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Rotation>) {
          return Rotation{node.axis, -node.angle};
        } else if constexpr (std::is_same_v<T, Twist>) {
          return Twist{node.axis, -node.amplitude, node.bump};
        } else if constexpr (std::is_same_v<T, MobiusStereo>) {
          return MobiusStereo{node.d, -node.b, -node.c, node.a};
        } else if constexpr (std::is_same_v<T, FlowMap>) {
          return FlowMap{node.field, node.fields, -node.time, node.steps};
        } else {
          MapWord out;
          for (auto it = node.factors.rbegin(); it != node.factors.rend(); ++it) {
            out.factors.push_back(Factor{it->id, it->map, -it->exponent});
          }
          return out;
        }
      },
      f.node());
}

namespace detail {

inline std::vector<Factor> factors_of(const MapExpr& f) {
  if (const auto* w = f.get_if<MapWord>()) return w->factors;
  return {Factor{"", std::make_shared<const MapExpr>(f), 1}};
}

inline std::vector<Factor> cancel_adjacent(const std::vector<Factor>& in) {
  std::vector<Factor> out;
  for (const auto& f : in) {
    if (!out.empty() && out.back().exponent == -f.exponent && same_factor_map(out.back(), f)) {
      out.pop_back();
    } else {
      out.push_back(f);
    }
  }
  return out;
}

}  // namespace detail

/// Word product f . g (g applied first), flattened and freely reduced.
inline MapExpr compose(const MapExpr& f, const MapExpr& g) {
  auto factors = detail::factors_of(f);
  auto tail = detail::factors_of(g);
  factors.insert(factors.end(), tail.begin(), tail.end());
  return MapWord{detail::cancel_adjacent(factors)};
}

/// [f, g] = f g f^-1 g^-1 as a flattened, freely reduced word.
inline MapExpr commutator_map(const MapExpr& f, const MapExpr& g) {
  std::vector<Factor> all;
  for (const auto& part : {f, g, inverse(f), inverse(g)}) {
    auto fs = detail::factors_of(part);
    all.insert(all.end(), fs.begin(), fs.end());
  }
  return MapWord{detail::cancel_adjacent(all)};
}

/// R f R^-1.
inline MapExpr conjugate(const MapExpr& f, const MapExpr& r) {
  auto all = detail::factors_of(r);
  auto mid = detail::factors_of(f);
  auto tail = detail::factors_of(inverse(r));
  all.insert(all.end(), mid.begin(), mid.end());
  all.insert(all.end(), tail.begin(), tail.end());
  return MapWord{detail::cancel_adjacent(all)};
}

// ---------------------------------------------------------------------------
// Evaluation and differentials.

/// Image and ambient Jacobian of a map at a point. The Jacobian carries the
/// tangent plane at the point into the tangent plane at the image.
struct Jet {
  SpherePoint image;
  Mat3 jacobian;
};

namespace detail {

inline const VectorField& lookup_field(const FlowMap& f) {
  if (!f.fields) throw Error(ErrorCode::UnknownField, "flow map '" + f.field + "' has no field registry");
  auto it = f.fields->find(f.field);
  if (it == f.fields->end()) throw Error(ErrorCode::UnknownField, "unknown vector field '" + f.field + "'");
  return it->second;
}

inline Vec3 rodrigues(const Vec3& axis, double angle, const Vec3& x) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return c * x + s * axis.cross(x) + (1.0 - c) * axis.dot(x) * axis;
}

inline Vec3 rk4_flow(const VectorField& field, Vec3 y, double time, int steps) {
  const double h = time / steps;
  for (int i = 0; i < steps; ++i) {
    const Vec3 k1 = field(y);
    const Vec3 k2 = field(y + 0.5 * h * k1);
    const Vec3 k3 = field(y + 0.5 * h * k2);
    const Vec3 k4 = field(y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

// RK4 on the state together with its variational equation J' = DX(y) J. The
// result is the exact Jacobian of the discrete RK4 map.
inline std::pair<Vec3, Mat3> rk4_flow_jet(const VectorField& field, Vec3 y, double time, int steps) {
  const double h = time / steps;
  Mat3 J = Mat3::Identity();
  for (int i = 0; i < steps; ++i) {
    const Vec3 k1 = field(y);
    const Mat3 K1 = field.jacobian(y) * J;
    const Vec3 y2 = y + 0.5 * h * k1;
    const Vec3 k2 = field(y2);
    const Mat3 K2 = field.jacobian(y2) * (J + 0.5 * h * K1);
    const Vec3 y3 = y + 0.5 * h * k2;
    const Vec3 k3 = field(y3);
    const Mat3 K3 = field.jacobian(y3) * (J + 0.5 * h * K2);
    const Vec3 y4 = y + h * k3;
    const Vec3 k4 = field(y4);
    const Mat3 K4 = field.jacobian(y4) * (J + h * K3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    J += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
  }
  return {y, J};
}

// Stereographic charts: 0 projects from the north pole, 1 from the south pole
// (coordinate 1/z). The chart is picked so its denominator is at least 1.
inline int chart_for(const Vec3& x) { return x.z() <= 0.0 ? 0 : 1; }

inline Complex to_chart(int chart, const Vec3& x) {
  return chart == 0 ? Complex(x.x(), x.y()) / (1.0 - x.z()) : Complex(x.x(), -x.y()) / (1.0 + x.z());
}

inline Vec3 from_chart(int chart, Complex w) {
  const double s = std::norm(w) + 1.0;
  if (chart == 0) return Vec3(2.0 * w.real() / s, 2.0 * w.imag() / s, 1.0 - 2.0 / s);
  return Vec3(2.0 * w.real() / s, -2.0 * w.imag() / s, 2.0 / s - 1.0);
}

inline Eigen::Matrix<double, 2, 3> chart_jacobian(int chart, const Vec3& x) {
  Eigen::Matrix<double, 2, 3> J;
  if (chart == 0) {
    const double q = 1.0 - x.z();
    J << 1.0 / q, 0.0, x.x() / (q * q), 0.0, 1.0 / q, x.y() / (q * q);
  } else {
    const double q = 1.0 + x.z();
    J << 1.0 / q, 0.0, -x.x() / (q * q), 0.0, -1.0 / q, x.y() / (q * q);
  }
  return J;
}

inline Eigen::Matrix<double, 3, 2> inverse_chart_jacobian(int chart, Complex w) {
  const double u = w.real();
  const double v = w.imag();
  const double s = std::norm(w) + 1.0;
  const double s2 = s * s;
  Eigen::Matrix<double, 3, 2> J;
  if (chart == 0) {
    J << 2.0 / s - 4.0 * u * u / s2, -4.0 * u * v / s2, -4.0 * u * v / s2, 2.0 / s - 4.0 * v * v / s2,
        4.0 * u / s2, 4.0 * v / s2;
  } else {
    J << 2.0 / s - 4.0 * u * u / s2, -4.0 * u * v / s2, 4.0 * u * v / s2, -2.0 / s + 4.0 * v * v / s2,
        -4.0 * u / s2, -4.0 * v / s2;
  }
  return J;
}

struct MobiusStep {
  int out_chart;
  Complex w;
  Complex derivative;
};

inline MobiusStep mobius_in_charts(const MobiusStereo& m, int in_chart, Complex z) {
  // Coefficients of the map from the input chart into chart 0.
  Complex al = m.a, be = m.b, ga = m.c, de = m.d;
  if (in_chart == 1) {  // z0 = 1/z1
    std::swap(al, be);
    std::swap(ga, de);
  }
  const Complex num = al * z + be;
  const Complex den = ga * z + de;
  const Complex det = al * de - be * ga;
  if (std::abs(num) <= std::abs(den)) return {0, num / den, det / (den * den)};
  return {1, den / num, -det / (num * num)};
}

inline Eigen::Matrix2d complex_as_real(Complex c) {
  Eigen::Matrix2d M;
  M << c.real(), -c.imag(), c.imag(), c.real();
  return M;
}

inline SpherePoint apply_primitive(const MapExpr::Node& node, const SpherePoint& x);

inline SpherePoint apply(const MapExpr& f, const SpherePoint& x, int sign);

inline SpherePoint apply_node(const MapExpr::Node& node, const SpherePoint& x, int sign) {
  if (const auto* w = std::get_if<MapWord>(&node)) {
    SpherePoint y = x;
    if (sign > 0) {
      for (auto it = w->factors.rbegin(); it != w->factors.rend(); ++it) {
        if (!it->map) throw Error(ErrorCode::UnknownGenerator, "unresolved generator '" + it->id + "'");
        y = apply(*it->map, y, it->exponent);
      }
    } else {
      for (const auto& fac : w->factors) {
        if (!fac.map) throw Error(ErrorCode::UnknownGenerator, "unresolved generator '" + fac.id + "'");
        y = apply(*fac.map, y, -fac.exponent);
      }
    }
    return y;
  }
  if (sign > 0) return apply_primitive(node, x);
  return apply_primitive(inverse(MapExpr(std::visit([](const auto& n) { return MapExpr(n); }, node))).node(), x);
}

inline SpherePoint apply(const MapExpr& f, const SpherePoint& x, int sign) { return apply_node(f.node(), x, sign); }

inline SpherePoint apply_primitive(const MapExpr::Node& node, const SpherePoint& x) {
  return std::visit(
      [&](const auto& n) -> SpherePoint {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Rotation>) {
          return SpherePoint(rodrigues(n.axis, n.angle, x.vec()));
        } else if constexpr (std::is_same_v<T, Twist>) {
          return SpherePoint(rodrigues(n.axis, n.profile(n.axis.dot(x.vec())), x.vec()));
        } else if constexpr (std::is_same_v<T, MobiusStereo>) {
          const int chart = chart_for(x.vec());
          const auto step = mobius_in_charts(n, chart, to_chart(chart, x.vec()));
          return SpherePoint(from_chart(step.out_chart, step.w));
        } else if constexpr (std::is_same_v<T, FlowMap>) {
          return SpherePoint(rk4_flow(lookup_field(n), x.vec(), n.time, n.steps));
        } else {
          return x;
        }
      },
      node);
}

inline Jet jet_primitive(const MapExpr::Node& node, const SpherePoint& x) {
  return std::visit(
      [&](const auto& n) -> Jet {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Rotation>) {
          const Mat3 R = rotation_matrix(n.axis, n.angle);
          return {SpherePoint(R * x.vec()), R};
        } else if constexpr (std::is_same_v<T, Twist>) {
          const double t = n.axis.dot(x.vec());
          const Mat3 R = rotation_matrix(n.axis, n.profile(t));
          const Vec3 rx = R * x.vec();
          return {SpherePoint(rx), R + n.profile_derivative(t) * n.axis.cross(rx) * n.axis.transpose()};
        } else if constexpr (std::is_same_v<T, MobiusStereo>) {
          const int chart = chart_for(x.vec());
          const auto step = mobius_in_charts(n, chart, to_chart(chart, x.vec()));
          const Mat3 D = inverse_chart_jacobian(step.out_chart, step.w) * complex_as_real(step.derivative) *
                         chart_jacobian(chart, x.vec());
          return {SpherePoint(from_chart(step.out_chart, step.w)), D};
        } else if constexpr (std::is_same_v<T, FlowMap>) {
          const auto [y, J] = rk4_flow_jet(lookup_field(n), x.vec(), n.time, n.steps);
          const double r = y.norm();
          const Vec3 yh = y / r;
          const Mat3 P = (Mat3::Identity() - yh * yh.transpose()) / r;
          return {SpherePoint(yh), P * J};
        } else {
          return {x, Mat3::Identity()};
        }
      },
      node);
}

inline Jet jet(const MapExpr& f, const SpherePoint& x, int sign);

inline Jet jet_node(const MapExpr::Node& node, const SpherePoint& x, int sign) {
  if (const auto* w = std::get_if<MapWord>(&node)) {
    Jet acc{x, Mat3::Identity()};
    auto step = [&](const Factor& fac, int e) {
      if (!fac.map) throw Error(ErrorCode::UnknownGenerator, "unresolved generator '" + fac.id + "'");
      Jet j = jet(*fac.map, acc.image, e);
      acc = Jet{j.image, j.jacobian * acc.jacobian};
    };
    if (sign > 0) {
      for (auto it = w->factors.rbegin(); it != w->factors.rend(); ++it) step(*it, it->exponent);
    } else {
      for (const auto& fac : w->factors) step(fac, -fac.exponent);
    }
    return acc;
  }
  if (sign > 0) return jet_primitive(node, x);
  return jet_primitive(inverse(MapExpr(std::visit([](const auto& n) { return MapExpr(n); }, node))).node(), x);
}

inline Jet jet(const MapExpr& f, const SpherePoint& x, int sign) { return jet_node(f.node(), x, sign); }

}  // namespace detail

/// f(x). Words apply their last factor first.
inline SpherePoint evaluate(const MapExpr& f, const SpherePoint& x) { return detail::apply(f, x, 1); }

/// f(x) together with the ambient Jacobian Df(x).
inline Jet evaluate_jet(const MapExpr& f, const SpherePoint& x) { return detail::jet(f, x, 1); }

/// Df(x) v for a tangent vector v at x, as a tangent vector at f(x).
/// Closed form for rotations, twists and Mobius maps, the chain rule for
/// words, and the RK4 variational equation for flow maps.
inline Vec3 differential(const MapExpr& f, const SpherePoint& x, const Vec3& v) {
  const Jet j = evaluate_jet(f, x);
  return project_tangent(j.image.vec(), j.jacobian * v);
}

/// Central difference of f along the geodesic through x in direction v.
inline Vec3 finite_difference_differential(const MapExpr& f, const SpherePoint& x, const Vec3& v, double h = 1e-6) {
  const SpherePoint fx = evaluate(f, x);
  const Vec3 plus = evaluate(f, exp_map(x, h * v)).vec();
  const Vec3 minus = evaluate(f, exp_map(x, -h * v)).vec();
  return project_tangent(fx.vec(), (plus - minus) / (2.0 * h));
}

/// Rotation matrix of f when f is built from rotations alone.
inline std::optional<Mat3> as_rotation(const MapExpr& f) {
  if (const auto* r = f.get_if<Rotation>()) return rotation_matrix(r->axis, r->angle);
  if (const auto* w = f.get_if<MapWord>()) {
    Mat3 total = Mat3::Identity();
    for (const auto& fac : w->factors) {
      if (!fac.map) return std::nullopt;
      auto m = as_rotation(*fac.map);
      if (!m) return std::nullopt;
      total = total * (fac.exponent > 0 ? *m : Mat3(m->transpose()));
    }
    return total;
  }
  return std::nullopt;
}

/// Rotation angle in [0, pi], accurate for tiny angles.
inline double rotation_angle(const Mat3& R) {
  const Vec3 skew(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * skew.norm(), 0.5 * (R.trace() - 1.0));
}

/// Number of RK4 steps for which the Richardson estimate of the integration
/// error at a fixed set of probe points falls below `target`.
inline int choose_flow_steps(const VectorField& field, double time, double target = 1e-10, int max_steps = 1 << 14) {
  const auto mesh = icosphere(1);
  int steps = 1;
  while (steps < max_steps) {
    double err = 0.0;
    for (const auto& p : mesh->vertices) {
      const Vec3 coarse = detail::rk4_flow(field, p, time, steps);
      const Vec3 fine = detail::rk4_flow(field, p, time, 2 * steps);
      err = std::max(err, (coarse - fine).norm() / 15.0);
    }
    if (err < target) return steps;
    steps *= 2;
  }
  return max_steps;
}

// ---------------------------------------------------------------------------
// The C1 distance to the identity.

/// Pointwise integrand |f(x) - x| + sup_{|v|=1} |Df(x) v - v| of the C1 norm.
/// The inner sup is the largest singular value of the 3x2 matrix whose
/// columns are (Df - I) applied to an orthonormal tangent frame at x.
inline double c1_integrand(const MapExpr& f, const Vec3& x) {
  const SpherePoint p(x);
  const Jet j = evaluate_jet(f, p);
  const auto frame = tangent_frame(p.vec());
  const Vec3 c1 = j.jacobian * frame[0] - frame[0];
  const Vec3 c2 = j.jacobian * frame[1] - frame[1];
  const double a = c1.squaredNorm();
  const double b = c1.dot(c2);
  const double c = c2.squaredNorm();
  const double half = 0.5 * (a - c);
  const double lambda = 0.5 * (a + c) + std::sqrt(half * half + b * b);
  return (j.image.vec() - p.vec()).norm() + std::sqrt(std::max(0.0, lambda));
}

struct C1Estimate {
  double sampled_sup = 0.0;
  int mesh_level = 0;
  bool refined = false;
  double margin = 0.0;
  bool exact = false;
  Vec3 argmax = Vec3::UnitX();
};

/// Closed-form |f - Id|_1 for maps that are rotations: 4 sin(theta / 2).
inline std::optional<double> exact_c1_deviation(const MapExpr& f) {
  if (auto R = as_rotation(f)) return 4.0 * std::sin(0.5 * rotation_angle(*R));
  return std::nullopt;
}

namespace detail {

inline std::pair<Vec3, double> pattern_ascent(const MapExpr& f, Vec3 x, double value, double step) {
  for (int iter = 0; iter < 400 && step > 1e-7; ++iter) {
    const auto frame = tangent_frame(x);
    const std::array<Vec3, 8> dirs = {frame[0],  -frame[0], frame[1], -frame[1],
                                      (frame[0] + frame[1]).normalized(),  (frame[0] - frame[1]).normalized(),
                                      (-frame[0] + frame[1]).normalized(), (-frame[0] - frame[1]).normalized()};
    double best = value;
    Vec3 best_x = x;
    for (const auto& d : dirs) {
      const Vec3 y = exp_map(SpherePoint(x), step * d).vec();
      const double val = c1_integrand(f, y);
      if (val > best) {
        best = val;
        best_x = y;
      }
    }
    if (best > value) {
      value = best;
      x = best_x;
    } else {
      step *= 0.5;
    }
  }
  return {x, value};
}

}  // namespace detail

/// Sampled estimate of |f - Id|_1: the integrand over every vertex of a
/// level-`mesh_level` icosphere, followed by a local pattern-search ascent
/// from the top 1% of samples of every coarser level. The result is a lower
/// bound for the true sup and is nondecreasing in mesh_level.
inline C1Estimate c1_deviation(const MapExpr& f, int mesh_level) {
  const auto mesh = icosphere(mesh_level);
  const std::size_t n = mesh->vertices.size();
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = c1_integrand(f, mesh->vertices[i]);

  C1Estimate est;
  est.mesh_level = mesh_level;
  est.refined = true;
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (values[i] > values[best]) best = i;
  }
  est.sampled_sup = values[best];
  est.argmax = mesh->vertices[best];

  std::vector<std::size_t> seeds;
  for (int l = 0; l <= mesh_level; ++l) {
    const std::size_t count = mesh->level_sizes[l];
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    const std::size_t top = std::max<std::size_t>(1, (count + 99) / 100);
    std::partial_sort(idx.begin(), idx.begin() + top, idx.end(), [&](std::size_t a, std::size_t b) {
      return values[a] != values[b] ? values[a] > values[b] : a < b;
    });
    seeds.insert(seeds.end(), idx.begin(), idx.begin() + top);
  }
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  for (auto s : seeds) {
    const auto [x, v] = detail::pattern_ascent(f, mesh->vertices[s], values[s], 0.5 * mesh_spacing(mesh_level));
    if (v > est.sampled_sup) {
      est.sampled_sup = v;
      est.argmax = x;
    }
  }
  return est;
}

/// Exact value where available, otherwise the sampled estimate.
inline C1Estimate c1_norm(const MapExpr& f, int mesh_level) {
  if (auto exact = exact_c1_deviation(f)) {
    C1Estimate est;
    est.sampled_sup = *exact;
    est.mesh_level = mesh_level;
    est.exact = true;
    return est;
  }
  return c1_deviation(f, mesh_level);
}

/// Radius 1 / (5^((k-1)k/2) * 60) of the C1 neighborhood V_k of the identity.
inline double vk_bound(int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  return 1.0 / (std::pow(5.0, static_cast<double>((k - 1) * k / 2)) * 60.0);
}

enum class Verdict { Inside, Outside, Borderline };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Inside: return "Inside";
    case Verdict::Outside: return "Outside";
    case Verdict::Borderline: return "Borderline";
  }
  return "?";
}

struct VkMembership {
  int k = 1;
  double bound = 0.0;
  C1Estimate estimate;
  Verdict verdict = Verdict::Outside;
};

/// V_k membership. Sampled estimates are only lower bounds, so a sampled
/// value within the safety margin of the bound is Borderline. Rotations use
/// their exact norm (V_1 is the open ball, V_k for k >= 2 the closed one).
inline VkMembership in_neighborhood_vk(const MapExpr& f, int k, int mesh_level = 4, double margin = 0.05) {
  VkMembership m;
  m.k = k;
  m.bound = vk_bound(k);
  m.estimate = c1_norm(f, mesh_level);
  const double v = m.estimate.sampled_sup;
  if (m.estimate.exact) {
    const bool inside = k == 1 ? v < m.bound : v <= m.bound;
    m.verdict = inside ? Verdict::Inside : Verdict::Outside;
  } else {
    m.estimate.margin = margin;
    if (v * (1.0 + margin) < m.bound) {
      m.verdict = Verdict::Inside;
    } else if (v > m.bound) {
      m.verdict = Verdict::Outside;
    } else {
      m.verdict = Verdict::Borderline;
    }
  }
  return m;
}

struct CommutatorBoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double norm_f = 0.0;
  double norm_g = 0.0;
  bool holds = false;
};

/// |[f,g] - Id|_1 <= 5 max(|f - Id|_1, |g - Id|_1), checked with 5% slack
/// for the sampled left-hand side. Both maps must be in V_1.
inline CommutatorBoundReport verify_commutator_bound(const MapExpr& f, const MapExpr& g, int mesh_level,
                                                     double slack = 0.05) {
  const auto mf = in_neighborhood_vk(f, 1, mesh_level);
  const auto mg = in_neighborhood_vk(g, 1, mesh_level);
  if (mf.verdict == Verdict::Outside || mg.verdict == Verdict::Outside) {
    throw Error(ErrorCode::NotInV1, "commutator bound requires both maps in V_1");
  }
  CommutatorBoundReport r;
  r.norm_f = mf.estimate.sampled_sup;
  r.norm_g = mg.estimate.sampled_sup;
  r.lhs = c1_norm(commutator_map(f, g), mesh_level).sampled_sup;
  r.rhs = 5.0 * std::max(r.norm_f, r.norm_g);
  r.holds = r.lhs <= r.rhs * (1.0 + slack);
  return r;
}

/// Named generators, indexed in insertion order.
class GeneratorTable {
 public:
  std::size_t add(std::string name, MapExpr map) {
    if (index_.count(name)) throw Error(ErrorCode::InvalidArgument, "duplicate generator '" + name + "'");
    index_.emplace(name, names_.size());
    names_.push_back(std::move(name));
    maps_.push_back(std::make_shared<const MapExpr>(std::move(map)));
    return names_.size() - 1;
  }
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const MapExpr& map(std::size_t i) const { return *maps_.at(i); }
  std::shared_ptr<const MapExpr> shared(std::size_t i) const { return maps_.at(i); }
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error(ErrorCode::UnknownGenerator, "unknown generator '" + name + "'");
    return it->second;
  }
  const MapExpr& at(const std::string& name) const { return map(index(name)); }

  /// Word over named generators with exponents +1 / -1.
  MapExpr word(const std::vector<std::pair<std::string, int>>& letters) const {
    std::vector<Factor> factors;
    for (const auto& [id, e] : letters) factors.push_back(Factor{id, maps_.at(index(id)), e});
    return make_word(std::move(factors));
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::shared_ptr<const MapExpr>> maps_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace s2fix
