#pragma once

// Icosahedral sampling meshes of the unit sphere. Subdivision appends the new
// midpoint vertices, so the first level_sizes[l] vertices of a level-L mesh
// are exactly the vertices of the level-l mesh.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "s2fix/sphere_geom.hpp"

namespace s2fix {

struct IcoMesh {
  int level = 0;
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  std::vector<std::size_t> level_sizes;  // vertex count of the level-l mesh, l = 0..level
  std::vector<std::vector<std::uint32_t>> neighbors;
};

namespace detail {

inline IcoMesh build_icosphere(int level) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  IcoMesh mesh;
  mesh.level = level;
  const std::array<Vec3, 12> base = {Vec3(-1, phi, 0), Vec3(1, phi, 0),  Vec3(-1, -phi, 0), Vec3(1, -phi, 0),
                                     Vec3(0, -1, phi), Vec3(0, 1, phi),  Vec3(0, -1, -phi), Vec3(0, 1, -phi),
                                     Vec3(phi, 0, -1), Vec3(phi, 0, 1),  Vec3(-phi, 0, -1), Vec3(-phi, 0, 1)};
  for (const auto& v : base) mesh.vertices.push_back(v.normalized());
  mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  mesh.level_sizes.push_back(mesh.vertices.size());

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      const auto idx = static_cast<std::uint32_t>(mesh.vertices.size());
      mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      const auto ab = midpoint(f[0], f[1]);
      const auto bc = midpoint(f[1], f[2]);
      const auto ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(next);
    mesh.level_sizes.push_back(mesh.vertices.size());
  }

  mesh.neighbors.assign(mesh.vertices.size(), {});
  for (const auto& f : mesh.faces) {
    for (int i = 0; i < 3; ++i) {
      auto& nb = mesh.neighbors[f[i]];
      for (int j = 1; j < 3; ++j) {
        const auto other = f[(i + j) % 3];
        if (std::find(nb.begin(), nb.end(), other) == nb.end()) nb.push_back(other);
      }
    }
  }
  return mesh;
}

}  // namespace detail

/// Shared, immutable icosphere subdivided `level` times (10 * 4^level + 2 vertices).
inline std::shared_ptr<const IcoMesh> icosphere(int level) {
  if (level < 0 || level > 8) throw Error(ErrorCode::InvalidArgument, "mesh level must be in [0, 8]");
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const IcoMesh>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[level];
  if (!slot) slot = std::make_shared<const IcoMesh>(detail::build_icosphere(level));
  return slot;
}

/// Approximate edge length of a level-l icosphere, in radians.
inline double mesh_spacing(int level) { return 1.1071487177940904 / static_cast<double>(1 << level); }

}  // namespace s2fix
