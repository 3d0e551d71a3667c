#pragma once

// Scenario files: generator and field definitions, the claimed nilpotency
// length, solver configuration and one task descriptor. Loading validates
// every field and resolves cross references; canonical_json writes the
// scenario back with all defaults filled in, so load -> canonical_json is
// idempotent.

#include <cstdint>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "s2fix/diffeo.hpp"
#include "s2fix/error.hpp"
#include "s2fix/solver.hpp"
#include "s2fix/version.hpp"

namespace s2fix::harness {

using Json = nlohmann::ordered_json;

inline const std::set<std::string>& task_kinds() {
  static const std::set<std::string> kinds = {"norm",  "check-vk", "orbit",          "curve",
                                              "fix",   "fix2",     "verify-algebra", "verify-lemmas"};
  return kinds;
}

struct Scenario {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  int k = 1;
  SolverConfig config;
  std::shared_ptr<FieldRegistry> fields = std::make_shared<FieldRegistry>();
  GeneratorTable generators;
  std::string task_kind = "norm";
  Json task_params = Json::object();

  // Canonical definitions, in file order.
  Json fields_json = Json::object();
  Json generators_json = Json::object();
};

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaError, path + ": " + what);
}

inline void require_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  std::set<std::string> known;
  for (const char* k : required) {
    known.insert(k);
    if (!obj.contains(k)) schema_error(path, std::string("missing field '") + k + "'");
  }
  for (const char* k : optional) known.insert(k);
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) schema_error(path, "unknown field '" + key + "'");
  }
}

inline double get_number(const Json& obj, const std::string& path, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number()) schema_error(path + "." + key, "expected a number");
  return v.get<double>();
}

inline double get_number(const Json& obj, const std::string& path, const char* key, double fallback) {
  return obj.contains(key) ? get_number(obj, path, key) : fallback;
}

inline long long get_integer(const Json& obj, const std::string& path, const char* key, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) schema_error(path + "." + key, "expected an integer");
  return v.get<long long>();
}

inline std::string get_string(const Json& obj, const std::string& path, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) schema_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline Vec3 get_vec3(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) schema_error(path, "expected an array of three numbers");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) schema_error(path, "expected an array of three numbers");
    out[i] = v[i].get<double>();
  }
  if (!(out.norm() > 0.0) || !out.allFinite()) schema_error(path, "vector must be finite and nonzero");
  return out;
}

inline Complex get_complex(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    schema_error(path, "expected [re, im]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

inline Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

// Rethrows construction failures of the library as schema errors at `path`.
template <class F>
auto at_path(const std::string& path, F&& make) {
  try {
    return make();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) schema_error(path, e.what());
    throw;
  }
}

inline void parse_config(const Json& j, Scenario& s) {
  const std::string path = "config";
  require_keys(j, path, {},
               {"tol", "N", "delta", "mesh_level", "max_segments", "eps_nil", "start", "rho", "stall_rounds",
                "max_disks", "orbit_cap"});
  auto& c = s.config;
  c.tol = get_number(j, path, "tol", c.tol);
  c.N = static_cast<int>(get_integer(j, path, "N", c.N));
  c.delta = get_number(j, path, "delta", c.delta);
  c.mesh_level = static_cast<int>(get_integer(j, path, "mesh_level", c.mesh_level));
  c.max_segments = static_cast<int>(get_integer(j, path, "max_segments", c.max_segments));
  c.eps_nil = get_number(j, path, "eps_nil", c.eps_nil);
  c.rho = get_number(j, path, "rho", c.rho);
  c.stall_rounds = static_cast<int>(get_integer(j, path, "stall_rounds", c.stall_rounds));
  c.max_disks = static_cast<int>(get_integer(j, path, "max_disks", c.max_disks));
  c.orbit_cap = static_cast<int>(get_integer(j, path, "orbit_cap", c.orbit_cap));
  if (j.contains("start")) c.start = SpherePoint(get_vec3(j["start"], path + ".start"));
  if (!(c.tol > 0.0)) schema_error(path + ".tol", "must be positive");
  if (c.N < 2) schema_error(path + ".N", "must be at least 2");
  if (!(c.delta > 0.0)) schema_error(path + ".delta", "must be positive");
  if (c.mesh_level < 0 || c.mesh_level > 8) schema_error(path + ".mesh_level", "must lie in [0, 8]");
  if (c.max_segments < 1) schema_error(path + ".max_segments", "must be positive");
  if (!(c.eps_nil > 0.0)) schema_error(path + ".eps_nil", "must be positive");
  if (!(c.rho > 0.0 && c.rho < 1.0)) schema_error(path + ".rho", "must lie in (0, 1)");
  if (c.stall_rounds < 1 || c.max_disks < 1 || c.orbit_cap < 2) schema_error(path, "solver budgets must be positive");
}

inline void parse_field(const std::string& id, const Json& j, Scenario& s) {
  const std::string path = "fields." + id;
  if (!j.is_object() || !j.contains("type")) schema_error(path, "expected an object with a 'type'");
  const std::string type = get_string(j, path, "type");
  Json canon = Json::object();
  canon["type"] = type;
  VectorField field;
  if (type == "localized_rotation") {
    require_keys(j, path, {"type", "center", "radius", "amplitude"}, {});
    const Vec3 center = get_vec3(j["center"], path + ".center");
    const double radius = get_number(j, path, "radius");
    const double amplitude = get_number(j, path, "amplitude");
    field = at_path(path, [&] { return localized_rotation_field(SpherePoint(center), radius, amplitude); });
    canon["center"] = vec_json(center);
    canon["radius"] = radius;
    canon["amplitude"] = amplitude;
  } else if (type == "latitude_band") {
    require_keys(j, path, {"type", "band", "amplitude"}, {});
    const auto& band = j["band"];
    if (!band.is_array() || band.size() != 2 || !band[0].is_number() || !band[1].is_number()) {
      schema_error(path + ".band", "expected [z_low, z_high]");
    }
    const double lo = band[0].get<double>(), hi = band[1].get<double>();
    const double amplitude = get_number(j, path, "amplitude");
    field = at_path(path, [&] { return latitude_band_field(lo, hi, amplitude); });
    canon["band"] = Json::array({lo, hi});
    canon["amplitude"] = amplitude;
  } else {
    schema_error(path + ".type", "unknown field type '" + type + "'");
  }
  s.fields->emplace(id, field);
  s.fields_json[id] = std::move(canon);
}

inline void parse_generator(const std::string& id, const Json& j, Scenario& s) {
  const std::string path = "generators." + id;
  if (!j.is_object() || !j.contains("type")) schema_error(path, "expected an object with a 'type'");
  const std::string type = get_string(j, path, "type");
  Json canon = Json::object();
  canon["type"] = type;
  MapExpr map;
  if (type == "rotation") {
    require_keys(j, path, {"type", "axis", "angle"}, {});
    const Vec3 axis = get_vec3(j["axis"], path + ".axis");
    const double angle = get_number(j, path, "angle");
    map = make_rotation(axis, angle);
    canon["axis"] = vec_json(axis);
    canon["angle"] = angle;
  } else if (type == "twist") {
    require_keys(j, path, {"type", "axis", "amplitude", "center", "half_width"}, {});
    const Vec3 axis = get_vec3(j["axis"], path + ".axis");
    const double amplitude = get_number(j, path, "amplitude");
    const double center = get_number(j, path, "center");
    const double half_width = get_number(j, path, "half_width");
    map = at_path(path, [&] { return make_twist(axis, amplitude, center, half_width); });
    canon["axis"] = vec_json(axis);
    canon["amplitude"] = amplitude;
    canon["center"] = center;
    canon["half_width"] = half_width;
  } else if (type == "mobius") {
    require_keys(j, path, {"type", "a", "b", "c", "d"}, {});
    Complex coef[4];
    const char* names[4] = {"a", "b", "c", "d"};
    for (int i = 0; i < 4; ++i) coef[i] = get_complex(j[names[i]], path + "." + names[i]);
    map = at_path(path, [&] { return make_mobius(coef[0], coef[1], coef[2], coef[3]); });
    for (int i = 0; i < 4; ++i) canon[names[i]] = Json::array({coef[i].real(), coef[i].imag()});
  } else if (type == "flow") {
    require_keys(j, path, {"type", "field", "time"}, {"steps"});
    const std::string field = get_string(j, path, "field");
    auto it = s.fields->find(field);
    if (it == s.fields->end()) {
      throw Error(ErrorCode::DanglingReference, path + ".field: unknown field '" + field + "'");
    }
    const double time = get_number(j, path, "time");
    long long steps = get_integer(j, path, "steps", 0);
    if (!j.contains("steps")) steps = choose_flow_steps(it->second, time);
    if (steps < 1) schema_error(path + ".steps", "must be positive");
    map = at_path(path, [&] { return make_flow(field, s.fields, time, static_cast<int>(steps)); });
    canon["field"] = field;
    canon["time"] = time;
    canon["steps"] = steps;
  } else if (type == "word") {
    require_keys(j, path, {"type", "letters"}, {});
    const auto& letters = j["letters"];
    if (!letters.is_array() || letters.empty()) schema_error(path + ".letters", "expected a nonempty array");
    std::vector<std::pair<std::string, int>> parsed;
    Json canon_letters = Json::array();
    for (std::size_t i = 0; i < letters.size(); ++i) {
      const auto& l = letters[i];
      const std::string lpath = path + ".letters[" + std::to_string(i) + "]";
      if (!l.is_array() || l.size() != 2 || !l[0].is_string() || !l[1].is_number_integer()) {
        schema_error(lpath, "expected [generator, +1 or -1]");
      }
      const std::string ref = l[0].get<std::string>();
      const int e = l[1].get<int>();
      if (e != 1 && e != -1) schema_error(lpath, "exponent must be +1 or -1");
      if (!s.generators.contains(ref)) {
        throw Error(ErrorCode::DanglingReference, lpath + ": generator '" + ref + "' is not defined before this word");
      }
      parsed.emplace_back(ref, e);
      canon_letters.push_back(Json::array({ref, e}));
    }
    map = s.generators.word(parsed);
    canon["letters"] = std::move(canon_letters);
  } else {
    schema_error(path + ".type", "unknown generator type '" + type + "'");
  }
  s.generators.add(id, std::move(map));
  s.generators_json[id] = std::move(canon);
}

}  // namespace detail

/// Validated scenario from a JSON document.
inline Scenario parse_scenario(const Json& root) {
  using namespace detail;
  require_keys(root, "scenario", {"schema_version", "generators", "task"}, {"seed", "k", "config", "fields"});
  Scenario s;
  const auto& sv = root["schema_version"];
  if (!sv.is_number_integer() || sv.get<long long>() != kSchemaVersion) {
    schema_error("schema_version", "unsupported schema version " + sv.dump() + " (expected " +
                                       std::to_string(kSchemaVersion) + ")");
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) schema_error("seed", "expected a nonnegative integer");
    s.seed = root["seed"].get<std::uint64_t>();
  }
  s.k = static_cast<int>(get_integer(root, "scenario", "k", 1));
  if (s.k < 1) schema_error("k", "must be positive");
  if (root.contains("config")) parse_config(root["config"], s);

  if (root.contains("fields")) {
    if (!root["fields"].is_object()) schema_error("fields", "expected an object");
    for (const auto& [id, def] : root["fields"].items()) parse_field(id, def, s);
  }
  const auto& gens = root["generators"];
  if (!gens.is_object()) schema_error("generators", "expected an object");
  for (const auto& [id, def] : gens.items()) parse_generator(id, def, s);

  const auto& task = root["task"];
  require_keys(task, "task", {"kind"}, {"params"});
  s.task_kind = get_string(task, "task", "kind");
  if (!task_kinds().count(s.task_kind)) schema_error("task.kind", "unknown task '" + s.task_kind + "'");
  if (task.contains("params")) {
    if (!task["params"].is_object()) schema_error("task.params", "expected an object");
    s.task_params = task["params"];
  }
  return s;
}

inline Scenario parse_scenario_text(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return parse_scenario(root);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

inline Json config_json(const SolverConfig& c) {
  Json j = Json::object();
  j["tol"] = c.tol;
  j["N"] = c.N;
  j["delta"] = c.delta;
  j["mesh_level"] = c.mesh_level;
  j["max_segments"] = c.max_segments;
  j["eps_nil"] = c.eps_nil;
  j["start"] = detail::vec_json(c.start.vec());
  j["rho"] = c.rho;
  j["stall_rounds"] = c.stall_rounds;
  j["max_disks"] = c.max_disks;
  j["orbit_cap"] = c.orbit_cap;
  return j;
}

/// The scenario with every default made explicit, keys in a fixed order.
inline Json canonical_json(const Scenario& s) {
  Json j = Json::object();
  j["schema_version"] = s.schema_version;
  j["seed"] = s.seed;
  j["k"] = s.k;
  j["config"] = config_json(s.config);
  j["fields"] = s.fields_json;
  j["generators"] = s.generators_json;
  j["task"] = Json{{"kind", s.task_kind}, {"params", s.task_params}};
  return j;
}

}  // namespace s2fix::harness
