#pragma once

// Common fixed points of finitely generated actions near the identity.
//
// The constructive path follows the double induction: on the nilpotency
// length k (the commutator subgroup G_(1) together with one generator spans
// an action of smaller length) and on the number of generators handled so
// far. Adding a generator f to a point p fixed by the processed maps means:
// take a recurrent point of f near the orbit of p, close its character curve,
// and search for a common fixed point inside the enclosed disk. If the direct
// search in the disk fails, two generators alternate, each new curve bounding
// a disk strictly inside the previous one.

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "s2fix/curves.hpp"
#include "s2fix/diffeo.hpp"
#include "s2fix/dynamics.hpp"
#include "s2fix/group_words.hpp"
#include "s2fix/mesh.hpp"

namespace s2fix {

struct SolverConfig {
  double tol = 1e-8;
  int N = 10000;          // recurrence budget
  double delta = 1e-6;    // recurrence threshold
  int max_segments = 20000;
  int mesh_level = 4;
  double eps_nil = 1e-9;
  double rho = 0.9;       // required area shrink factor ...
  int stall_rounds = 50;  // ... within this many nested disks
  int max_disks = 200;
  int orbit_cap = 100000;
  int polish_seeds = 12;
  SpherePoint start{1.0, 0.0, 0.0};
};

/// Generators with a claimed nilpotency length, their V_k verdicts, and the
/// numerical nilpotency certificate (C1 deviation of every depth-k commutator).
struct ActionSpec {
  GeneratorTable generators;
  int k = 1;
  double eps_nil = 1e-9;
  std::vector<VkMembership> verdicts;
  std::vector<std::pair<std::string, double>> certificate;

  bool verdicts_ok() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.verdict != Verdict::Outside; });
  }
  bool certificate_ok() const {
    return std::all_of(certificate.begin(), certificate.end(), [&](const auto& c) { return c.second < eps_nil; });
  }
};

/// MapExpr of a symbolic word over the table's generator indices.
inline MapExpr word_map(const GeneratorTable& table, const Word& w) {
  std::vector<Factor> factors;
  for (const auto& l : w.letters()) {
    if (l.gen < 0 || static_cast<std::size_t>(l.gen) >= table.size()) {
      throw Error(ErrorCode::UnknownGenerator, "generator index " + std::to_string(l.gen) + " out of range");
    }
    factors.push_back(Factor{table.name(l.gen), table.shared(l.gen), l.exp});
  }
  return make_word(std::move(factors));
}

inline std::vector<std::string> generator_names(const GeneratorTable& table) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < table.size(); ++i) names.push_back(table.name(i));
  return names;
}

inline ActionSpec make_action_spec(GeneratorTable table, int k, double eps_nil = 1e-9, int mesh_level = 4) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "nilpotency length must be positive");
  ActionSpec spec;
  spec.generators = std::move(table);
  spec.k = k;
  spec.eps_nil = eps_nil;
  for (std::size_t i = 0; i < spec.generators.size(); ++i) {
    spec.verdicts.push_back(in_neighborhood_vk(spec.generators.map(i), k, mesh_level));
  }
  if (spec.generators.size() > 0) {
    std::vector<int> ids(spec.generators.size());
    std::iota(ids.begin(), ids.end(), 0);
    const auto names = generator_names(spec.generators);
    const auto sets = level_sets(ids, k);
    for (const auto& w : sets.levels[k]) {
      spec.certificate.emplace_back(to_string(w, names),
                                    c1_norm(word_map(spec.generators, w), mesh_level).sampled_sup);
    }
  }
  return spec;
}

inline void check_hypotheses(const ActionSpec& spec) {
  for (std::size_t i = 0; i < spec.verdicts.size(); ++i) {
    if (spec.verdicts[i].verdict == Verdict::Outside) {
      throw Error(ErrorCode::HypothesisViolation,
                  "generator '" + spec.generators.name(i) + "' is outside V_" + std::to_string(spec.k));
    }
  }
  for (const auto& [word, dev] : spec.certificate) {
    if (!(dev < spec.eps_nil)) {
      throw Error(ErrorCode::HypothesisViolation, "depth-" + std::to_string(spec.k) + " commutator " + word +
                                                      " has C1 deviation " + std::to_string(dev));
    }
  }
}

inline std::vector<MapExpr> generator_maps(const ActionSpec& spec) {
  std::vector<MapExpr> out;
  for (std::size_t i = 0; i < spec.generators.size(); ++i) out.push_back(spec.generators.map(i));
  return out;
}

/// max over generators of d(x, f(x)).
inline double residual(const ActionSpec& spec, const SpherePoint& x) {
  const auto maps = generator_maps(spec);
  return displacement(maps, x);
}

enum class FixMethod { NestedDisk, DirectMinimize, Hybrid };

inline std::string_view to_string(FixMethod m) {
  switch (m) {
    case FixMethod::NestedDisk: return "NestedDisk";
    case FixMethod::DirectMinimize: return "DirectMinimize";
    case FixMethod::Hybrid: return "Hybrid";
  }
  return "?";
}

/// One enclosed disk of the refinement.
struct DiskRecord {
  int parent = -1;  // enclosing disk in the trace, -1 for the whole sphere
  std::string map_id;
  SpherePoint base{1.0, 0.0, 0.0};             // point handed to the stage
  SpherePoint recurrent_point{1.0, 0.0, 0.0};  // curve base point
  bool recurrence_fallback = false;            // no recurrent point found; base used directly
  std::shared_ptr<const CharacterCurve> curve;
  Component side = Component::Left;
  double area = 0.0;
  double min_step = 0.0;  // smallest orbit step along the curve
};

struct FixReport {
  SpherePoint point{1.0, 0.0, 0.0};
  double residual = 0.0;
  FixMethod method = FixMethod::NestedDisk;
  std::vector<DiskRecord> trace;
  std::vector<std::string> notes;
};

namespace detail {

struct NamedMap {
  std::string id;
  MapExpr map;
};

inline std::vector<MapExpr> maps_only(const std::vector<NamedMap>& v) {
  std::vector<MapExpr> out;
  out.reserve(v.size());
  for (const auto& m : v) out.push_back(m.map);
  return out;
}

// Recursive nested-disk search. A chain is a list of trace indices, each
// naming a disk nested in the previous one.
class NestedDiskSolver {
 public:
  explicit NestedDiskSolver(SolverConfig cfg) : cfg_(std::move(cfg)), mesh_(icosphere(cfg_.mesh_level)) {}

  std::vector<DiskRecord> trace;
  std::vector<std::string> notes;
  bool hybrid = false;

  bool inside_chain(const std::vector<int>& chain, const SpherePoint& x) const {
    for (int idx : chain) {
      const auto& rec = trace[idx];
      if (point_component(rec.curve->partition, x) != rec.side) return false;
    }
    return true;
  }

  // Damped Gauss-Newton from a few seeds inside the chain; best converged
  // result that stays inside, ties broken by seed order.
  std::optional<RefineResult> polish_in_chain(const std::vector<MapExpr>& maps, const std::vector<int>& chain,
                                              const std::optional<SpherePoint>& hint) const {
    std::vector<SpherePoint> seeds;
    if (hint && inside_chain(chain, *hint)) seeds.push_back(*hint);
    if (!chain.empty()) {
      const auto& rec = trace[chain.back()];
      seeds.push_back(rec.curve->partition.representative_points[static_cast<int>(rec.side)]);
    }
    const std::size_t n = mesh_->vertices.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = displacement(maps, SpherePoint(mesh_->vertices[i]));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });
    int taken = 0;
    for (std::size_t i : order) {
      if (taken >= cfg_.polish_seeds) break;
      const SpherePoint v(mesh_->vertices[i]);
      if (!inside_chain(chain, v)) continue;
      seeds.push_back(v);
      ++taken;
    }
    std::optional<RefineResult> best;
    for (const auto& s : seeds) {
      auto res = refine_common_fixed_point(maps, s, cfg_.tol, mesh_spacing(cfg_.mesh_level));
      if (!res.converged || !inside_chain(chain, res.point)) continue;
      if (!best || res.residual < best->residual) best = res;
      if (best->residual == 0.0) break;
    }
    return best;
  }

  // Character curve of f from p (fixed by the processed maps), and the disk
  // it encloses inside the innermost disk of the chain. Returns the new
  // trace index.
  int add_disk(const NamedMap& f, const SpherePoint& p, const std::vector<int>& chain) {
    DiskRecord rec;
    rec.parent = chain.empty() ? -1 : chain.back();
    rec.map_id = f.id;
    rec.base = p;
    try {
      rec.recurrent_point = recurrent_point_in_closure(f.map, p, cfg_.N, cfg_.delta);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoRecurrenceFound) throw;
      rec.recurrent_point = p;
      rec.recurrence_fallback = true;
      notes.push_back("stage " + std::to_string(trace.size()) + " (" + f.id +
                      "): no recurrent point within budget; curve built from the stage point");
    }
    auto curve =
        std::make_shared<const CharacterCurve>(extract_character_curve(f.map, rec.recurrent_point, cfg_.max_segments, f.id));
    if (chain.empty()) {
      rec.side = curve->partition.component_areas[0] <= curve->partition.component_areas[1] ? Component::Left
                                                                                              : Component::Right;
    } else {
      const auto& parent = trace[chain.back()];
      if (!polyline_in_disk(curve->loop, parent.curve->partition, parent.side)) {
        throw Error(ErrorCode::NoConvergence, "curve of " + f.id + " leaves the enclosing disk");
      }
      // The component holding the parent's boundary is the outer one.
      std::optional<Component> outer;
      for (const auto& v : parent.curve->loop.vertices) {
        const auto c = point_component(curve->partition, v);
        if (c != Component::OnCurve) {
          outer = c;
          break;
        }
      }
      rec.side = outer ? opposite(*outer) : Component::Left;
    }
    rec.area = curve->partition.area(rec.side);
    rec.min_step = kPi;
    for (const auto& e : curve->polyline.edges()) rec.min_step = std::min(rec.min_step, e.length());
    rec.curve = std::move(curve);
    if (static_cast<int>(trace.size()) >= cfg_.max_disks) {
      throw Error(ErrorCode::NoConvergence, "disk budget of " + std::to_string(cfg_.max_disks) + " exhausted");
    }
    trace.push_back(std::move(rec));
    return static_cast<int>(trace.size()) - 1;
  }

  // A common fixed point of base ∪ fs ∪ {f} inside the innermost disk of
  // `chain`, where that disk comes from a curve of f at a point fixed by
  // base ∪ fs.
  std::optional<SpherePoint> find_in_disk(const std::vector<NamedMap>& base, const std::vector<NamedMap>& fs,
                                          const NamedMap& f, std::vector<int> chain) {
    auto all = base;
    all.insert(all.end(), fs.begin(), fs.end());
    all.push_back(f);
    const auto all_maps = maps_only(all);
    if (auto r = polish_in_chain(all_maps, chain, std::nullopt)) return r->point;
    if (fs.empty()) return std::nullopt;

    // Alternate the last processed map and f, each new disk inside the last.
    std::vector<NamedMap> rest(fs.begin(), fs.end() - 1);
    NamedMap mover = fs.back();
    NamedMap other = f;
    auto y = find_in_disk(base, rest, f, chain);
    if (!y) return std::nullopt;
    std::vector<double> areas;
    for (int round = 0;; ++round) {
      if (displacement(all_maps, *y) < cfg_.tol) return y;
      const int idx = add_disk(mover, *y, chain);
      chain.push_back(idx);
      areas.push_back(trace[idx].area);
      if (round >= cfg_.stall_rounds &&
          areas[round] > cfg_.rho * areas[round - cfg_.stall_rounds]) {
        throw Error(ErrorCode::NoConvergence, "nested disks stopped shrinking");
      }
      y = find_in_disk(base, rest, mover, chain);
      if (!y) return std::nullopt;
      std::swap(mover, other);
    }
  }

  // Point fixed by `processed` and f, starting from p fixed by `processed`.
  SpherePoint extend(const std::vector<NamedMap>& base, const std::vector<NamedMap>& fs, const NamedMap& f,
                     const SpherePoint& p, const std::vector<int>& chain) {
    auto all = base;
    all.insert(all.end(), fs.begin(), fs.end());
    all.push_back(f);
    const auto all_maps = maps_only(all);
    std::optional<Error> failure;
    try {
      const int idx = add_disk(f, p, chain);
      auto inner = chain;
      inner.push_back(idx);
      if (auto x = find_in_disk(base, fs, f, inner)) return *x;
      notes.push_back("no common fixed point located inside the disk of " + f.id);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TruncationBeforeClosure && e.code() != ErrorCode::NoConvergence &&
          e.code() != ErrorCode::DegenerateLoop) {
        throw;
      }
      notes.push_back(std::string("nested search for ") + f.id + " stopped: " + e.what());
      failure = e;
    }
    hybrid = true;
    if (auto r = polish_in_chain(all_maps, chain, p)) return r->point;
    if (failure) throw *failure;
    throw Error(ErrorCode::NoConvergence, "no common fixed point after adding " + f.id);
  }

  // Common fixed point of the generators `gens` of a k-step action, inside
  // the chain.
  SpherePoint solve(const std::vector<NamedMap>& gens, int k, const SpherePoint& start, const std::vector<int>& chain) {
    if (gens.empty()) return start;
    std::vector<NamedMap> base;
    if (k >= 2) base = derived_maps(gens, k);

    SpherePoint p = start;
    if (!base.empty()) {
      // <G_(1), f_1> has nilpotency length at most k - 1.
      std::vector<NamedMap> sub{gens[0]};
      sub.insert(sub.end(), base.begin(), base.end());
      p = solve(sub, k - 1, start, chain);
    } else if (chain.empty()) {
      if (displacement(std::vector<MapExpr>{gens[0].map}, p) >= cfg_.tol) p = extend({}, {}, gens[0], p, chain);
    } else {
      auto r = polish_in_chain({gens[0].map}, chain, start);
      if (!r) throw Error(ErrorCode::NoConvergence, "no fixed point of " + gens[0].id + " inside the disk");
      p = r->point;
    }
    std::vector<NamedMap> processed{gens[0]};
    for (std::size_t i = 1; i < gens.size(); ++i) {
      if (displacement(std::vector<MapExpr>{gens[i].map}, p) >= cfg_.tol) p = extend(base, processed, gens[i], p, chain);
      processed.push_back(gens[i]);
    }
    return p;
  }

  // Words of S_(1), ..., S_(k) that are not numerically trivial.
  std::vector<NamedMap> derived_maps(const std::vector<NamedMap>& gens, int k) const {
    GeneratorTable table;
    std::vector<std::string> names;
    for (const auto& g : gens) {
      table.add(g.id, g.map);
      names.push_back(g.id);
    }
    std::vector<int> ids(gens.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<NamedMap> out;
    for (const auto& w : derived_generators(ids, k)) {
      MapExpr m = word_map(table, w);
      if (c1_norm(m, cfg_.mesh_level).sampled_sup < cfg_.eps_nil) continue;
      out.push_back({"[" + to_string(w, names) + "]", std::move(m)});
    }
    return out;
  }

 private:
  SolverConfig cfg_;
  std::shared_ptr<const IcoMesh> mesh_;
};

inline std::vector<NamedMap> named_generators(const ActionSpec& spec) {
  std::vector<NamedMap> out;
  for (std::size_t i = 0; i < spec.generators.size(); ++i) out.push_back({spec.generators.name(i), spec.generators.map(i)});
  return out;
}

}  // namespace detail

/// Common fixed point of all generators by nested-disk refinement.
inline FixReport find_common_fixed_point(const ActionSpec& spec, const SolverConfig& cfg = {}) {
  check_hypotheses(spec);
  detail::NestedDiskSolver solver(cfg);
  FixReport rep;
  rep.point = solver.solve(detail::named_generators(spec), spec.k, cfg.start, {});
  rep.residual = residual(spec, rep.point);
  rep.method = solver.hybrid ? FixMethod::Hybrid : FixMethod::NestedDisk;
  rep.trace = std::move(solver.trace);
  rep.notes = std::move(solver.notes);
  if (!(rep.residual < cfg.tol)) {
    throw Error(ErrorCode::NoConvergence, "best candidate has residual " + std::to_string(rep.residual));
  }
  return rep;
}

struct OrbitClosure {
  std::vector<SpherePoint> points;
  bool finite = false;
};

/// Orbit of p under the group generated by the maps, merged at resolution
/// delta, explored breadth first until it stops growing or exceeds cap.
inline OrbitClosure group_orbit(std::span<const MapExpr> maps, const SpherePoint& p, double delta, int cap) {
  OrbitClosure out;
  std::vector<MapExpr> steps;
  for (const auto& m : maps) {
    steps.push_back(m);
    steps.push_back(inverse(m));
  }
  const double cell = std::max(delta, 1e-12);
  auto key = [&](const Vec3& v, int dx, int dy, int dz) {
    const auto q = [&](double c, int d) { return static_cast<long long>(std::floor(c / cell)) + d; };
    const long long a = q(v.x(), dx), b = q(v.y(), dy), c = q(v.z(), dz);
    return (a * 73856093LL) ^ (b * 19349663LL) ^ (c * 83492791LL);
  };
  std::unordered_multimap<long long, std::size_t> grid;
  auto find = [&](const Vec3& v) {
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          auto range = grid.equal_range(key(v, dx, dy, dz));
          for (auto it = range.first; it != range.second; ++it) {
            if ((out.points[it->second].vec() - v).norm() < delta) return true;
          }
        }
    return false;
  };
  auto insert = [&](const SpherePoint& x) {
    grid.emplace(key(x.vec(), 0, 0, 0), out.points.size());
    out.points.push_back(x);
  };
  insert(p);
  for (std::size_t head = 0; head < out.points.size(); ++head) {
    for (const auto& s : steps) {
      const SpherePoint y = evaluate(s, out.points[head]);
      if (find(y.vec())) continue;
      if (static_cast<int>(out.points.size()) >= cap) return out;
      insert(y);
    }
  }
  out.finite = true;
  return out;
}

/// A fixed point of the whole action in each of the two disks bounded by the
/// character curve of a generator that moves p, when p has a finite orbit.
inline std::pair<FixReport, FixReport> find_two_fixed_points(const ActionSpec& spec, const SpherePoint& p,
                                                             const SolverConfig& cfg = {}) {
  check_hypotheses(spec);
  auto gens = detail::named_generators(spec);
  auto mover = std::find_if(gens.begin(), gens.end(), [&](const auto& g) {
    return geodesic_distance(p, evaluate(g.map, p)) >= cfg.tol;
  });
  if (mover == gens.end()) throw Error(ErrorCode::OrbitTrivial, "no generator moves the base point");
  const auto maps = generator_maps(spec);
  const auto orbit = group_orbit(maps, p, cfg.delta, cfg.orbit_cap);
  if (!orbit.finite) {
    throw Error(ErrorCode::OrbitNotFinite, "orbit exceeds " + std::to_string(cfg.orbit_cap) + " points");
  }
  if (orbit.points.size() < 2) throw Error(ErrorCode::OrbitTrivial, "orbit is a single point");
  std::rotate(gens.begin(), mover, mover + 1);

  const int budget = std::max(cfg.max_segments, static_cast<int>(orbit.points.size()) + 2);
  auto curve = std::make_shared<const CharacterCurve>(extract_character_curve(gens[0].map, p, budget, gens[0].id));

  std::array<FixReport, 2> out;
  for (int s = 0; s < 2; ++s) {
    detail::NestedDiskSolver solver(cfg);
    DiskRecord rec;
    rec.map_id = gens[0].id;
    rec.base = p;
    rec.recurrent_point = p;
    rec.curve = curve;
    rec.side = static_cast<Component>(s);
    rec.area = curve->partition.area(rec.side);
    rec.min_step = kPi;
    for (const auto& e : curve->polyline.edges()) rec.min_step = std::min(rec.min_step, e.length());
    solver.trace.push_back(rec);
    const auto& rep_point = curve->partition.representative_points[s];
    FixReport& r = out[s];
    r.point = solver.solve(gens, spec.k, rep_point, {0});
    r.residual = residual(spec, r.point);
    r.method = solver.hybrid ? FixMethod::Hybrid : FixMethod::NestedDisk;
    r.trace = std::move(solver.trace);
    r.notes = std::move(solver.notes);
    if (!(r.residual < cfg.tol)) {
      throw Error(ErrorCode::NoConvergence, "side " + std::to_string(s) + " residual " + std::to_string(r.residual));
    }
  }
  return {out[0], out[1]};
}

/// Multi-start minimization of the residual from the lowest-residual mesh
/// vertices, optionally restricted to one component of a partition.
inline FixReport direct_minimize(const ActionSpec& spec, const LoopPartition* disk, Component side,
                                 const SolverConfig& cfg = {}) {
  const auto maps = generator_maps(spec);
  const auto mesh = icosphere(cfg.mesh_level);
  auto inside = [&](const SpherePoint& x) { return !disk || point_component(*disk, x) == side; };
  const std::size_t n = mesh->vertices.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = displacement(maps, SpherePoint(mesh->vertices[i]));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });

  std::optional<RefineResult> best;
  int taken = 0;
  for (std::size_t i : order) {
    if (taken >= 16) break;
    const SpherePoint v(mesh->vertices[i]);
    if (!inside(v)) continue;
    ++taken;
    auto res = refine_common_fixed_point(maps, v, cfg.tol, mesh_spacing(cfg.mesh_level));
    if (!inside(res.point)) continue;
    if (!best || res.residual < best->residual) best = res;
  }
  if (!best || !(best->residual < cfg.tol)) {
    throw Error(ErrorCode::NoConvergence,
                best ? "best residual " + std::to_string(best->residual) : std::string("no seed inside the disk"));
  }
  FixReport rep;
  rep.point = best->point;
  rep.residual = best->residual;
  rep.method = FixMethod::DirectMinimize;
  return rep;
}

inline FixReport direct_minimize(const ActionSpec& spec, const SolverConfig& cfg = {}) {
  return direct_minimize(spec, nullptr, Component::Left, cfg);
}

}  // namespace s2fix
