#pragma once

// Static figures of a report's "figure" section: orbits as dots, character
// polylines, loops with one enclosed disk shaded, and marked points. Output
// depends only on the report, with coordinates printed to three decimals.

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "s2fix/harness/scenario.hpp"
#include "s2fix/sphere_geom.hpp"

namespace s2fix::harness {

struct Projection {
  enum class Kind { StereographicNorth, StereographicSouth, Orthographic };
  Kind kind = Kind::StereographicNorth;
  Vec3 axis = Vec3::UnitZ();  // view direction for Orthographic

  static Projection stereographic_north() { return {Kind::StereographicNorth, Vec3::UnitZ()}; }
  static Projection stereographic_south() { return {Kind::StereographicSouth, -Vec3::UnitZ()}; }
  static Projection orthographic(const Vec3& axis) { return {Kind::Orthographic, axis.normalized()}; }

  /// Half-width of the plotted square in projected units.
  double window() const { return kind == Kind::Orthographic ? 1.1 : 2.5; }

  /// Plane coordinates of x, or nothing when x is the projection pole or on
  /// the hidden hemisphere.
  std::optional<std::array<double, 2>> operator()(const Vec3& x) const {
    switch (kind) {
      case Kind::StereographicNorth: {
        const double d = 1.0 + x.z();
        if (d < 1e-12) return std::nullopt;
        return std::array<double, 2>{x.x() / d, x.y() / d};
      }
      case Kind::StereographicSouth: {
        const double d = 1.0 - x.z();
        if (d < 1e-12) return std::nullopt;
        return std::array<double, 2>{x.x() / d, -x.y() / d};
      }
      case Kind::Orthographic: {
        if (x.dot(axis) < 0.0) return std::nullopt;
        const auto f = tangent_frame(axis);
        return std::array<double, 2>{x.dot(f[0]), x.dot(f[1])};
      }
    }
    return std::nullopt;
  }

  /// The point of the sphere sent to infinity, if any.
  std::optional<Vec3> pole() const {
    if (kind == Kind::Orthographic) return std::nullopt;
    return -axis;
  }
};

/// Parses "stereographic_north", "stereographic_south" or
/// "orthographic:x,y,z".
inline Projection parse_projection(const std::string& name) {
  if (name == "stereographic_north") return Projection::stereographic_north();
  if (name == "stereographic_south") return Projection::stereographic_south();
  if (name.rfind("orthographic", 0) == 0) {
    if (name == "orthographic") return Projection::orthographic(Vec3::UnitZ());
    double a = 0, b = 0, c = 0;
    if (std::sscanf(name.c_str(), "orthographic:%lf,%lf,%lf", &a, &b, &c) == 3 && Vec3(a, b, c).norm() > 0.0) {
      return Projection::orthographic(Vec3(a, b, c));
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown projection '" + name + "'");
}

namespace detail {

class SvgCanvas {
 public:
  static constexpr double kSize = 600.0;
  static constexpr double kPad = 20.0;

  explicit SvgCanvas(const Projection& proj) : proj_(proj), scale_((kSize - 2 * kPad) / (2 * proj.window())) {}

  std::string num(double v) const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", std::abs(v) < 5e-4 ? 0.0 : v);
    return buf;
  }

  // Canvas position of a plane point.
  std::array<double, 2> px(const std::array<double, 2>& w) const {
    return {kSize / 2 + scale_ * w[0], kSize / 2 - scale_ * w[1]};
  }

  // Canvas position, or nothing if hidden or far outside the frame.
  std::optional<std::array<double, 2>> place(const Vec3& x) const {
    const auto w = proj_(x);
    if (!w) return std::nullopt;
    const double lim = 20.0 * proj_.window();
    if (std::abs((*w)[0]) > lim || std::abs((*w)[1]) > lim) return std::nullopt;
    return px(*w);
  }

  // Path data through the points; runs are broken where a point cannot be placed.
  std::string path(const std::vector<Vec3>& pts, bool closed) const {
    std::string d;
    bool pen = false;
    bool all = true;
    for (const auto& x : pts) {
      const auto p = place(x);
      if (!p) {
        pen = false;
        all = false;
        continue;
      }
      d += (pen ? "L" : "M") + num((*p)[0]) + " " + num((*p)[1]);
      pen = true;
    }
    if (closed && all && !d.empty()) d += "Z";
    return d;
  }

  double scale() const { return scale_; }

 private:
  Projection proj_;
  double scale_;
};

inline std::vector<Vec3> json_points(const Json& pts) {
  std::vector<Vec3> out;
  if (!pts.is_array()) return out;
  for (const auto& p : pts) {
    if (p.is_array() && p.size() == 3) out.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  }
  return out;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// SVG document for the report's figure section under the given projection.
inline std::string render_svg(const Json& report, const Projection& proj) {
  detail::SvgCanvas cv(proj);
  const double S = detail::SvgCanvas::kSize;
  const double P = detail::SvgCanvas::kPad;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << S << "\" height=\"" << S << "\" viewBox=\"0 0 " << S
      << " " << S << "\">\n";
  out << "<rect x=\"" << P << "\" y=\"" << P << "\" width=\"" << S - 2 * P << "\" height=\"" << S - 2 * P
      << "\" fill=\"white\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<circle cx=\"" << cv.num(S / 2) << "\" cy=\"" << cv.num(S / 2) << "\" r=\"" << cv.num(cv.scale())
      << "\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n";

  static const Json kEmpty = Json::object();
  const Json& fig = report.contains("figure") ? report["figure"] : kEmpty;
  auto section = [&](const char* key) -> const Json& {
    static const Json none = Json::array();
    return fig.contains(key) && fig[key].is_array() ? fig[key] : none;
  };

  // Loops first so that everything else is drawn on top of the shading.
  for (const auto& loop : section("loops")) {
    const auto pts = detail::json_points(loop.value("points", Json::array()));
    if (pts.size() < 3) continue;
    const int side = loop.value("shaded_side", 0);
    const std::string d = cv.path(pts, true);
    if (d.empty()) continue;
    // Filling the projected polygon shades the component away from the
    // projection pole; shade the complement when the chosen side holds it.
    bool outside = false;
    if (const auto pole = proj.pole()) {
      try {
        std::vector<SpherePoint> sp;
        for (const auto& x : pts) sp.emplace_back(x);
        const auto part = loop_partition(SphericalPolyline{sp, true});
        outside = static_cast<int>(point_component(part, SpherePoint(*pole))) == side;
      } catch (const Error&) {
        outside = false;
      }
    }
    std::string fill = d;
    if (outside) {
      fill = "M" + cv.num(P) + " " + cv.num(P) + "H" + cv.num(S - P) + "V" + cv.num(S - P) + "H" + cv.num(P) + "Z" + d;
    }
    out << "<path d=\"" << fill << "\" fill=\"#4a90d9\" fill-opacity=\"0.15\" fill-rule=\"evenodd\" stroke=\"none\"/>\n";
    out << "<path d=\"" << d << "\" fill=\"none\" stroke=\"#1f4e8c\" stroke-width=\"1.5\"><title>"
        << detail::xml_escape(loop.value("id", "")) << "</title></path>\n";
  }
  for (const auto& poly : section("polylines")) {
    const std::string d = cv.path(detail::json_points(poly.value("points", Json::array())), false);
    if (d.empty()) continue;
    out << "<path d=\"" << d << "\" fill=\"none\" stroke=\"#888888\" stroke-width=\"0.5\"><title>"
        << detail::xml_escape(poly.value("id", "")) << "</title></path>\n";
  }
  for (const auto& orbit : section("orbits")) {
    std::string d;
    for (const auto& x : detail::json_points(orbit.value("points", Json::array()))) {
      if (const auto p = cv.place(x)) d += "M" + cv.num((*p)[0]) + " " + cv.num((*p)[1]) + "h0";
    }
    if (d.empty()) continue;
    out << "<path d=\"" << d << "\" stroke=\"#d9534f\" stroke-width=\"2\" stroke-linecap=\"round\"><title>"
        << detail::xml_escape(orbit.value("id", "")) << "</title></path>\n";
  }
  for (const auto& mark : section("points")) {
    const auto pts = detail::json_points(Json::array({mark.value("point", Json::array())}));
    if (pts.empty()) continue;
    // Points off the frame are pinned to its edge and drawn hollow.
    std::array<double, 2> at{S - P, P};
    bool pinned = true;
    if (const auto w = proj(pts[0])) {
      at = cv.px(*w);
      pinned = at[0] < P || at[0] > S - P || at[1] < P || at[1] > S - P;
      at[0] = std::clamp(at[0], P, S - P);
      at[1] = std::clamp(at[1], P, S - P);
    }
    out << "<circle cx=\"" << cv.num(at[0]) << "\" cy=\"" << cv.num(at[1]) << "\" r=\"4\" fill=\""
        << (pinned ? "none" : "black") << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    const bool flip = at[0] > S - P - 80;
    out << "<text x=\"" << cv.num(flip ? at[0] - 6 : at[0] + 6) << "\" y=\"" << cv.num(at[1] < P + 14 ? at[1] + 14 : at[1] - 6)
        << "\"" << (flip ? " text-anchor=\"end\"" : "") << " font-family=\"sans-serif\" font-size=\"10\">"
        << detail::xml_escape(mark.value("label", "")) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace s2fix::harness
