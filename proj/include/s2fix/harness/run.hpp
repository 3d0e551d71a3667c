#pragma once

// Runs the task of a scenario and assembles the JSON report. Every task is a
// pure function of the scenario and its seed; wall time is only recorded on
// request so that reports stay byte-identical across runs.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "s2fix/curves.hpp"
#include "s2fix/diffeo.hpp"
#include "s2fix/dynamics.hpp"
#include "s2fix/finite_group.hpp"
#include "s2fix/group_words.hpp"
#include "s2fix/harness/scenario.hpp"
#include "s2fix/solver.hpp"
#include "s2fix/version.hpp"

namespace s2fix::harness {

struct RunOptions {
  bool timing = false;
};

/// Uniform doubles in [0, 1) from the top 53 bits of a 64-bit Mersenne
/// twister, so a seed gives the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  Vec3 unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, kTwoPi);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

inline Json point_json(const SpherePoint& p) { return vec_json(p.vec()); }

inline Json points_json(const std::vector<SpherePoint>& pts) {
  Json out = Json::array();
  for (const auto& p : pts) out.push_back(point_json(p));
  return out;
}

// Accumulates the drawable part of a report.
struct Figure {
  Json orbits = Json::array();
  Json polylines = Json::array();
  Json loops = Json::array();
  Json points = Json::array();

  void orbit(const std::string& id, const std::vector<SpherePoint>& pts) {
    orbits.push_back(Json{{"id", id}, {"points", points_json(pts)}});
  }
  void polyline(const std::string& id, const SphericalPolyline& poly) {
    polylines.push_back(Json{{"id", id}, {"points", points_json(poly.vertices)}});
  }
  void loop(const std::string& id, const SphericalPolyline& loop, int shaded_side) {
    loops.push_back(Json{{"id", id}, {"points", points_json(loop.vertices)}, {"shaded_side", shaded_side}});
  }
  void point(const std::string& label, const SpherePoint& p) {
    points.push_back(Json{{"label", label}, {"point", point_json(p)}});
  }
  Json json() const {
    return Json{{"orbits", orbits}, {"polylines", polylines}, {"loops", loops}, {"points", points}};
  }
};

class Params {
 public:
  Params(const Json& j, std::initializer_list<const char*> allowed) : j_(j) {
    require_keys(j_, "task.params", {}, allowed);
  }
  bool has(const char* key) const { return j_.contains(key); }
  double number(const char* key, double fallback) const { return get_number(j_, "task.params", key, fallback); }
  long long integer(const char* key, long long fallback) const {
    return get_integer(j_, "task.params", key, fallback);
  }
  std::string string(const char* key, const std::string& fallback) const {
    return has(key) ? get_string(j_, "task.params", key) : fallback;
  }
  SpherePoint point(const char* key, const SpherePoint& fallback) const {
    return has(key) ? SpherePoint(get_vec3(j_[key], std::string("task.params.") + key)) : fallback;
  }
  std::vector<std::string> strings(const char* key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const auto& v = j_[key];
    if (!v.is_array()) schema_error(std::string("task.params.") + key, "expected an array of strings");
    for (const auto& s : v) {
      if (!s.is_string()) schema_error(std::string("task.params.") + key, "expected an array of strings");
      out.push_back(s.get<std::string>());
    }
    return out;
  }
  const Json& raw(const char* key) const { return j_[key]; }

 private:
  const Json& j_;
};

inline std::size_t resolve(const Scenario& s, const std::string& id, const std::string& path) {
  if (!s.generators.contains(id)) {
    throw Error(ErrorCode::DanglingReference, path + ": unknown generator '" + id + "'");
  }
  return s.generators.index(id);
}

inline std::string first_generator(const Scenario& s) {
  if (s.generators.size() == 0) schema_error("generators", "task needs at least one generator");
  return s.generators.name(0);
}

inline std::vector<std::size_t> selected(const Scenario& s, const std::vector<std::string>& ids) {
  std::vector<std::size_t> out;
  if (ids.empty()) {
    for (std::size_t i = 0; i < s.generators.size(); ++i) out.push_back(i);
  }
  for (const auto& id : ids) out.push_back(resolve(s, id, "task.params.generators"));
  return out;
}

inline ActionSpec action_spec(const Scenario& s, const std::vector<std::string>& ids) {
  GeneratorTable table;
  for (auto i : selected(s, ids)) table.add(s.generators.name(i), s.generators.map(i));
  if (table.size() == 0) schema_error("generators", "task needs at least one generator");
  return make_action_spec(std::move(table), s.k, s.config.eps_nil, s.config.mesh_level);
}

inline Json estimate_json(const C1Estimate& e) {
  Json j{{"value", e.sampled_sup}, {"exact", e.exact}, {"mesh_level", e.mesh_level}};
  if (!e.exact) {
    j["refined"] = e.refined;
    j["argmax"] = vec_json(e.argmax);
  }
  return j;
}

inline Json membership_json(const VkMembership& m) {
  return Json{{"k", m.k},
              {"bound", m.bound},
              {"estimate", estimate_json(m.estimate)},
              {"margin", m.estimate.exact ? 0.0 : m.estimate.margin},
              {"verdict", std::string(to_string(m.verdict))}};
}

inline Json spec_json(const ActionSpec& spec) {
  Json verdicts = Json::array();
  for (std::size_t i = 0; i < spec.verdicts.size(); ++i) {
    Json v = membership_json(spec.verdicts[i]);
    v["id"] = spec.generators.name(i);
    verdicts.push_back(std::move(v));
  }
  Json cert = Json::array();
  for (const auto& [word, dev] : spec.certificate) cert.push_back(Json{{"word", word}, {"deviation", dev}});
  return Json{{"k", spec.k},
              {"eps_nil", spec.eps_nil},
              {"verdicts", std::move(verdicts)},
              {"certificate", std::move(cert)},
              {"verdicts_ok", spec.verdicts_ok()},
              {"certificate_ok", spec.certificate_ok()}};
}

inline Json curve_summary(const CharacterCurve& c) {
  return Json{{"map_id", c.map_id},
              {"base", point_json(c.base)},
              {"closure_kind", std::string(to_string(c.closure_kind))},
              {"polyline_vertices", c.polyline.vertices.size()},
              {"loop_vertices", c.loop.vertices.size()},
              {"component_areas", Json::array({c.partition.component_areas[0], c.partition.component_areas[1]})},
              {"representative_points", Json::array({point_json(c.partition.representative_points[0]),
                                                     point_json(c.partition.representative_points[1])})}};
}

inline Json fix_json(const FixReport& r) {
  Json trace = Json::array();
  for (const auto& d : r.trace) {
    Json t{{"parent", d.parent},
           {"map_id", d.map_id},
           {"base", point_json(d.base)},
           {"recurrent_point", point_json(d.recurrent_point)},
           {"recurrence_fallback", d.recurrence_fallback},
           {"side", static_cast<int>(d.side)},
           {"area", d.area},
           {"min_step", d.min_step}};
    if (d.curve) t["curve"] = curve_summary(*d.curve);
    trace.push_back(std::move(t));
  }
  Json notes = Json::array();
  for (const auto& n : r.notes) notes.push_back(n);
  return Json{{"point", point_json(r.point)},
              {"residual", r.residual},
              {"method", std::string(to_string(r.method))},
              {"trace", std::move(trace)},
              {"notes", std::move(notes)}};
}

inline void draw_fix(Figure& fig, const FixReport& r, const std::string& label) {
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const auto& d = r.trace[i];
    if (!d.curve) continue;
    const std::string id = label + ".disk" + std::to_string(i);
    fig.polyline(id, d.curve->polyline);
    fig.loop(id, d.curve->loop, static_cast<int>(d.side));
  }
  fig.point(label, r.point);
}

// ---------------------------------------------------------------------------
// Tasks.

inline Json task_norm(const Scenario& s, Figure&) {
  const Params p(s.task_params, {"generators"});
  Json out = Json::array();
  for (auto i : selected(s, p.strings("generators"))) {
    const auto& f = s.generators.map(i);
    Json j{{"id", s.generators.name(i)}, {"sampled", estimate_json(c1_deviation(f, s.config.mesh_level))}};
    if (auto exact = exact_c1_deviation(f)) j["exact_value"] = *exact;
    out.push_back(std::move(j));
  }
  return Json{{"norms", std::move(out)}};
}

inline Json task_check_vk(const Scenario& s, Figure&) {
  const Params p(s.task_params, {"generators", "k"});
  const int k = static_cast<int>(p.integer("k", s.k));
  if (k < 1) schema_error("task.params.k", "must be positive");
  Json out = Json::array();
  for (auto i : selected(s, p.strings("generators"))) {
    Json j = membership_json(in_neighborhood_vk(s.generators.map(i), k, s.config.mesh_level));
    j["id"] = s.generators.name(i);
    out.push_back(std::move(j));
  }
  return Json{{"k", k}, {"bound", vk_bound(k)}, {"memberships", std::move(out)}};
}

inline Json task_orbit(const Scenario& s, Figure& fig) {
  const Params p(s.task_params, {"generator", "point", "N", "delta"});
  const std::string id = p.string("generator", first_generator(s));
  const auto& f = s.generators.map(resolve(s, id, "task.params.generator"));
  const SpherePoint base = p.point("point", s.config.start);
  const int N = static_cast<int>(p.integer("N", s.config.N));
  const double delta = p.number("delta", s.config.delta);
  const auto rec = semiorbit(f, base, N, id);
  const auto scan = recurrence_scan(f, base, N, delta);
  fig.orbit(id, rec.points);
  Json j{{"map_id", id},
         {"base", point_json(base)},
         {"N", N},
         {"min_return_index", rec.min_return_index},
         {"min_return_distance", rec.min_return_distance},
         {"exact_period", rec.exact_period ? Json(*rec.exact_period) : Json(nullptr)},
         {"min_step", rec.min_step},
         {"max_step", rec.max_step},
         {"recurrence", Json{{"recurrent", scan.recurrent},
                             {"threshold", scan.threshold},
                             {"witness_index", scan.witness_index ? Json(*scan.witness_index) : Json(nullptr)},
                             {"witness_distance", scan.witness_distance}}}};
  return j;
}

inline Json task_curve(const Scenario& s, Figure& fig) {
  const Params p(s.task_params, {"generator", "point", "max_segments", "samples"});
  const std::string id = p.string("generator", first_generator(s));
  const auto& f = s.generators.map(resolve(s, id, "task.params.generator"));
  const SpherePoint base = p.point("point", s.config.start);
  const int max_segments = static_cast<int>(p.integer("max_segments", s.config.max_segments));
  const int samples = static_cast<int>(p.integer("samples", 1000));
  const auto c = extract_character_curve(f, base, max_segments, id);

  double min_disp = kPi;
  for (const auto& x : sample_polyline(c.loop, samples)) min_disp = std::min(min_disp, geodesic_distance(x, evaluate(f, x)));
  const bool simple = !polyline_first_self_intersection(c.loop).has_value();

  fig.polyline(id, c.polyline);
  fig.loop(id, c.loop, 0);
  fig.point(id + ".base", base);
  Json j = curve_summary(c);
  j["loop_simple"] = simple;
  j["loop_samples"] = samples;
  j["min_loop_displacement"] = min_disp;
  return j;
}

inline Json task_fix(const Scenario& s, Figure& fig) {
  const Params p(s.task_params, {"method", "generators"});
  const std::string method = p.string("method", "nested");
  if (method != "nested" && method != "direct" && method != "both") {
    schema_error("task.params.method", "expected 'nested', 'direct' or 'both'");
  }
  const ActionSpec spec = action_spec(s, p.strings("generators"));
  check_hypotheses(spec);
  Json j{{"action", spec_json(spec)}, {"method", method}};
  std::optional<FixReport> nested;
  if (method != "direct") {
    nested = find_common_fixed_point(spec, s.config);
    j["nested"] = fix_json(*nested);
    draw_fix(fig, *nested, "nested");
  }
  if (method != "nested") {
    // With a nested result, search the first disk it used so that both
    // methods look for the same fixed point.
    const DiskRecord* disk = nested && !nested->trace.empty() && nested->trace[0].curve ? &nested->trace[0] : nullptr;
    const auto direct = disk ? direct_minimize(spec, &disk->curve->partition, disk->side, s.config)
                             : direct_minimize(spec, s.config);
    j["direct"] = fix_json(direct);
    j["direct_restricted"] = disk != nullptr;
    fig.point("direct", direct.point);
    if (nested) {
      const double d = geodesic_distance(nested->point, direct.point);
      j["agreement_distance"] = d;
      j["agree"] = d <= 10.0 * s.config.tol;
    }
  }
  return j;
}

inline Json task_fix2(const Scenario& s, Figure& fig) {
  const Params p(s.task_params, {"point", "generators"});
  const ActionSpec spec = action_spec(s, p.strings("generators"));
  const SpherePoint base = p.point("point", s.config.start);
  const auto [a, b] = find_two_fixed_points(spec, base, s.config);
  const auto& curve = *a.trace.front().curve;
  const Component ca = point_component(curve.partition, a.point);
  const Component cb = point_component(curve.partition, b.point);
  draw_fix(fig, a, "side0");
  fig.point("side1", b.point);
  fig.point("base", base);
  return Json{{"action", spec_json(spec)},
              {"base", point_json(base)},
              {"curve", curve_summary(curve)},
              {"fixed_points", Json::array({fix_json(a), fix_json(b)})},
              {"components", Json::array({static_cast<int>(ca), static_cast<int>(cb)})},
              {"opposite", ca != Component::OnCurve && cb != Component::OnCurve && ca != cb},
              {"separation", geodesic_distance(a.point, b.point)}};
}

template <class G>
Json algebra_json(const FiniteGroupOracle<G>& oracle) {
  const auto r = oracle.verify_commutator_generation();
  Json orders = Json::array();
  for (auto o : r.chain_orders) orders.push_back(o);
  return Json{{"order", oracle.elements().size()},
              {"nilpotency_length", r.nilpotency_length},
              {"chain_orders", std::move(orders)},
              {"commutator_identities", r.commutator_identities},
              {"last_level_generates", r.last_level_generates},
              {"derived_generates", r.derived_generates},
              {"all", r.all()}};
}

inline Json task_verify_algebra(const Scenario& s, Figure&) {
  const Params p(s.task_params, {"group", "n", "m", "generators"});
  const std::string group = p.string("group", "unitriangular");
  const int n = static_cast<int>(p.integer("n", 3));
  if (!p.has("generators") || !p.raw("generators").is_array() || p.raw("generators").empty()) {
    schema_error("task.params.generators", "expected a nonempty array");
  }
  const auto& gens = p.raw("generators");
  auto int_list = [&](const Json& v, std::size_t i) {
    const std::string path = "task.params.generators[" + std::to_string(i) + "]";
    if (!v.is_array()) schema_error(path, "expected an array of integers");
    std::vector<int> out;
    for (const auto& x : v) {
      if (!x.is_number_integer()) schema_error(path, "expected an array of integers");
      out.push_back(x.get<int>());
    }
    return out;
  };
  Json j{{"group", group}, {"n", n}};
  try {
    if (group == "unitriangular") {
      const int m = static_cast<int>(p.integer("m", 2));
      j["m"] = m;
      UnitriangularGroup g(n, m);
      std::vector<UnitriangularGroup::Element> elems;
      for (std::size_t i = 0; i < gens.size(); ++i) {
        const auto ij = int_list(gens[i], i);
        if (ij.size() != 2) schema_error("task.params.generators[" + std::to_string(i) + "]", "expected [i, j]");
        elems.push_back(g.elementary(ij[0], ij[1]));
      }
      j["report"] = algebra_json(FiniteGroupOracle<UnitriangularGroup>(g, elems));
    } else if (group == "symmetric") {
      PermutationGroup g(n);
      std::vector<PermutationGroup::Element> elems;
      for (std::size_t i = 0; i < gens.size(); ++i) {
        auto perm = int_list(gens[i], i);
        auto sorted = perm;
        std::sort(sorted.begin(), sorted.end());
        if (static_cast<int>(perm.size()) != n || sorted != g.identity()) {
          schema_error("task.params.generators[" + std::to_string(i) + "]", "expected a permutation of 0..n-1");
        }
        elems.push_back(std::move(perm));
      }
      j["report"] = algebra_json(FiniteGroupOracle<PermutationGroup>(g, elems));
    } else {
      schema_error("task.params.group", "expected 'unitriangular' or 'symmetric'");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) schema_error("task.params", e.what());
    throw;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Lemma campaigns and checks.

// A random rotation or twist whose C1 deviation is Inside V_1.
inline MapExpr random_small_map(Rng& rng, int mesh_level, std::string& kind) {
  for (;;) {
    const Vec3 axis = rng.unit_vector();
    MapExpr f;
    if (rng.uniform() < 0.5) {
      kind = "rotation";
      f = make_rotation(axis, rng.uniform(5e-4, 8e-3));
    } else {
      kind = "twist";
      const double hw = rng.uniform(0.3, 0.6);
      const double center = rng.uniform(-0.35, 0.35);
      f = make_twist(axis, rng.uniform(2e-4, 2e-3), center, hw);
    }
    if (in_neighborhood_vk(f, 1, mesh_level).verdict == Verdict::Inside) return f;
  }
}

// A point moved by f: anywhere for a rotation, inside the support band for a twist.
inline SpherePoint random_moved_point(Rng& rng, const MapExpr& f) {
  for (;;) {
    SpherePoint x(rng.unit_vector());
    if (const auto* t = f.get_if<Twist>()) {
      const double height = t->bump.center + 0.9 * t->bump.half_width * rng.uniform(-1.0, 1.0);
      const auto frame = tangent_frame(t->axis);
      const double phi = rng.uniform(0.0, kTwoPi);
      const double r = std::sqrt(std::max(0.0, 1.0 - height * height));
      x = SpherePoint(height * t->axis + r * (std::cos(phi) * frame[0] + std::sin(phi) * frame[1]));
    }
    if (geodesic_distance(x, evaluate(f, x)) > 1e-7) return x;
  }
}

inline Json check_commutator_bound(const Scenario& s, const Json& c, Rng& rng) {
  require_keys(c, "task.params.checks[]", {"kind"}, {"pairs"});
  const int pairs = static_cast<int>(get_integer(c, "task.params.checks[]", "pairs", 100));
  const int level = s.config.mesh_level;
  int failures = 0;
  double worst_ratio = 0.0;
  Json cases = Json::array();
  for (int i = 0; i < pairs; ++i) {
    std::string kf, kg;
    const MapExpr f = random_small_map(rng, level, kf);
    const MapExpr g = random_small_map(rng, level, kg);
    const auto r = verify_commutator_bound(f, g, level);
    if (!r.holds) ++failures;
    worst_ratio = std::max(worst_ratio, r.lhs / r.rhs);
    cases.push_back(Json{{"f", kf}, {"g", kg}, {"norm_f", r.norm_f}, {"norm_g", r.norm_g}, {"lhs", r.lhs},
                         {"rhs", r.rhs}, {"holds", r.holds}});
  }
  return Json{{"kind", "commutator_bound"}, {"pairs", pairs},     {"slack", 0.05},
              {"failures", failures},       {"worst_ratio", worst_ratio}, {"holds", failures == 0},
              {"cases", std::move(cases)}};
}

inline Json check_ball_exclusion(const Scenario& s, const Json& c, Rng& rng) {
  require_keys(c, "task.params.checks[]", {"kind"}, {"pairs"});
  const int pairs = static_cast<int>(get_integer(c, "task.params.checks[]", "pairs", 50));
  int failures = 0;
  Json cases = Json::array();
  for (int i = 0; i < pairs; ++i) {
    std::string kind;
    const MapExpr f = random_small_map(rng, s.config.mesh_level, kind);
    const SpherePoint x = random_moved_point(rng, f);
    const auto r = verify_ball_exclusion(f, x, s.config.mesh_level, s.config.tol);
    if (!r.holds) ++failures;
    cases.push_back(Json{{"map", kind}, {"point", point_json(x)}, {"radius", r.radius},
                         {"nearest_fixed_distance", r.nearest_fixed_distance}, {"holds", r.holds}});
  }
  return Json{{"kind", "ball_exclusion"}, {"pairs", pairs}, {"slack", 1e-9}, {"failures", failures},
              {"holds", failures == 0},     {"cases", std::move(cases)}};
}

struct CurvePair {
  std::string a, b;
  CharacterCurve ca, cb;
};

inline CurvePair curve_pair(const Scenario& s, const Json& c, const char* kind) {
  const std::string path = std::string("task.params.checks[") + kind + "]";
  require_keys(c, path, {"kind", "a", "b", "point_a", "point_b"}, {"max_segments"});
  const int budget = static_cast<int>(get_integer(c, path, "max_segments", s.config.max_segments));
  CurvePair out;
  out.a = get_string(c, path, "a");
  out.b = get_string(c, path, "b");
  const auto& fa = s.generators.map(resolve(s, out.a, path + ".a"));
  const auto& fb = s.generators.map(resolve(s, out.b, path + ".b"));
  out.ca = extract_character_curve(fa, SpherePoint(get_vec3(c["point_a"], path + ".point_a")), budget, out.a);
  out.cb = extract_character_curve(fb, SpherePoint(get_vec3(c["point_b"], path + ".point_b")), budget, out.b);
  return out;
}

inline Json check_curves_disjoint(const Scenario& s, const Json& c, Figure& fig) {
  const auto p = curve_pair(s, c, "curves_disjoint");
  const bool disjoint = curves_disjoint(p.ca, p.cb);
  fig.polyline(p.a, p.ca.polyline);
  fig.polyline(p.b, p.cb.polyline);
  return Json{{"kind", "curves_disjoint"}, {"a", curve_summary(p.ca)}, {"b", curve_summary(p.cb)},
              {"disjoint", disjoint},      {"holds", disjoint}};
}

inline Json check_curve_distance(const Scenario& s, const Json& c, Figure& fig) {
  const auto p = curve_pair(s, c, "curve_distance");
  // r is the smallest step of either orbit over the stretch the curves use.
  const int na = static_cast<int>(p.ca.polyline.edge_count());
  const int nb = static_cast<int>(p.cb.polyline.edge_count());
  const auto oa = semiorbit(s.generators.at(p.a), p.ca.base, std::max(na, 1), p.a);
  const auto ob = semiorbit(s.generators.at(p.b), p.cb.base, std::max(nb, 1), p.b);
  const double r = std::min(oa.min_step, ob.min_step);
  const double d = curve_distance(p.ca, p.cb);
  fig.polyline(p.a, p.ca.polyline);
  fig.polyline(p.b, p.cb.polyline);
  return Json{{"kind", "curve_distance"}, {"a", curve_summary(p.ca)}, {"b", curve_summary(p.cb)},
              {"r", r},                    {"distance", d},            {"slack", 1e-9},
              {"holds", d >= r - 1e-9}};
}

inline Json check_invariance(const Scenario& s, const Json& c) {
  const std::string path = "task.params.checks[invariance]";
  require_keys(c, path, {"kind", "g_set", "f"}, {"samples"});
  std::vector<MapExpr> g_set;
  if (!c["g_set"].is_array() || c["g_set"].empty()) schema_error(path + ".g_set", "expected a nonempty array");
  Json ids = Json::array();
  for (const auto& id : c["g_set"]) {
    if (!id.is_string()) schema_error(path + ".g_set", "expected generator ids");
    g_set.push_back(s.generators.map(resolve(s, id.get<std::string>(), path + ".g_set")));
    ids.push_back(id);
  }
  const std::string f = get_string(c, path, "f");
  const int samples = static_cast<int>(get_integer(c, path, "samples", 20));
  const auto r = invariance_check(g_set, s.generators.map(resolve(s, f, path + ".f")), samples, s.config.tol,
                                  s.config.mesh_level);
  return Json{{"kind", "invariance"}, {"g_set", std::move(ids)}, {"f", f},
              {"samples", r.fixed_points.size()}, {"max_violation", r.max_violation}, {"holds", r.holds}};
}

inline Json check_nested_commutators(const Scenario& s, const Json& c) {
  const std::string path = "task.params.checks[nested_commutators]";
  require_keys(c, path, {"kind"}, {"generators"});
  std::vector<std::string> ids;
  if (c.contains("generators")) {
    if (!c["generators"].is_array()) schema_error(path + ".generators", "expected an array of strings");
    for (const auto& id : c["generators"]) {
      if (!id.is_string()) schema_error(path + ".generators", "expected an array of strings");
      ids.push_back(id.get<std::string>());
    }
  }
  const auto spec = action_spec(s, ids);
  return Json{{"kind", "nested_commutators"}, {"action", spec_json(spec)}, {"holds", spec.certificate_ok()}};
}

inline Json task_verify_lemmas(const Scenario& s, Figure& fig) {
  const Params p(s.task_params, {"checks"});
  if (!p.has("checks") || !p.raw("checks").is_array()) schema_error("task.params.checks", "expected an array");
  Rng rng(s.seed);
  Json results = Json::array();
  bool all = true;
  for (const auto& c : p.raw("checks")) {
    if (!c.is_object() || !c.contains("kind") || !c["kind"].is_string()) {
      schema_error("task.params.checks[]", "expected an object with a 'kind'");
    }
    const std::string kind = c["kind"].get<std::string>();
    Json r;
    if (kind == "commutator_bound") {
      r = check_commutator_bound(s, c, rng);
    } else if (kind == "ball_exclusion") {
      r = check_ball_exclusion(s, c, rng);
    } else if (kind == "curves_disjoint") {
      r = check_curves_disjoint(s, c, fig);
    } else if (kind == "curve_distance") {
      r = check_curve_distance(s, c, fig);
    } else if (kind == "invariance") {
      r = check_invariance(s, c);
    } else if (kind == "nested_commutators") {
      r = check_nested_commutators(s, c);
    } else {
      schema_error("task.params.checks[].kind", "unknown check '" + kind + "'");
    }
    all = all && r["holds"].get<bool>();
    results.push_back(std::move(r));
  }
  return Json{{"checks", std::move(results)}, {"all_hold", all}};
}

inline Json dispatch(const Scenario& s, Figure& fig) {
  const auto& t = s.task_kind;
  if (t == "norm") return task_norm(s, fig);
  if (t == "check-vk") return task_check_vk(s, fig);
  if (t == "orbit") return task_orbit(s, fig);
  if (t == "curve") return task_curve(s, fig);
  if (t == "fix") return task_fix(s, fig);
  if (t == "fix2") return task_fix2(s, fig);
  if (t == "verify-algebra") return task_verify_algebra(s, fig);
  if (t == "verify-lemmas") return task_verify_lemmas(s, fig);
  schema_error("task.kind", "unknown task '" + t + "'");
}

}  // namespace detail

inline Json tolerances_json(const SolverConfig& c) {
  Json j = config_json(c);
  j["vk_margin"] = 0.05;
  j["unit_eps"] = kUnitEps;
  j["antipodal_eps"] = kAntipodalEps;
  j["on_curve_eps"] = kOnCurveEps;
  j["exact_period_eps"] = kExactPeriodEps;
  return j;
}

/// Runs the scenario's task. Library errors are caught and reported with
/// their code; the report's "status" says which happened.
inline Json run(const Scenario& s, const RunOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  Json report = Json::object();
  report["schema_version"] = kSchemaVersion;
  report["library_version"] = std::string(kLibraryVersion);
  report["task"] = s.task_kind;
  report["seed"] = s.seed;
  report["scenario"] = canonical_json(s);
  report["tolerances"] = tolerances_json(s.config);
  detail::Figure fig;
  try {
    Json result = detail::dispatch(s, fig);
    report["status"] = "ok";
    report["result"] = std::move(result);
  } catch (const Error& e) {
    report["status"] = "error";
    report["error"] = Json{{"code", std::string(to_string(e.code()))},
                           {"exit_status", exit_status(e.code())},
                           {"message", e.what()}};
  }
  report["figure"] = fig.json();
  if (opts.timing) {
    report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return report;
}

/// Process exit status for a report: 0 on success, otherwise the error's.
inline int report_exit_status(const Json& report) {
  if (report.value("status", "") == "ok") return 0;
  return report.contains("error") ? report["error"].value("exit_status", 4) : 4;
}

}  // namespace s2fix::harness
