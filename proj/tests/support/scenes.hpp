#pragma once

#include "support/oracles.hpp"

#include "hpskit/errors.hpp"
#include "hpskit/scan_sim.hpp"

#include <string>
#include <vector>

namespace hpskit::scenes {

/// Square wall in the plane y = y0, facing the sensor.
inline TriangleMesh wall_y(double y0, double half, const std::string& name) {
  TriangleMesh m;
  m.name = name;
  m.vertices = {{-half, y0, -half}, {half, y0, -half}, {half, y0, half}, {-half, y0, half}};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

inline TriangleMesh box(const Vec3& center, const Vec3& size, const std::string& name) {
  TriangleMesh m;
  m.name = name;
  const Vec3 h = size / 2;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back(center + Vec3((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z()));
  }
  m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
             {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

/// Up to max_tris random triangles scattered around a sensor at (0,0,2),
/// split across a few meshes.
inline std::vector<TriangleMesh> random_scene(Rng& rng, std::size_t max_tris) {
  const std::size_t n = 1 + rng.index(max_tris);
  const std::size_t meshes = 1 + rng.index(4);
  std::vector<TriangleMesh> out(meshes);
  for (std::size_t m = 0; m < meshes; ++m) out[m].name = "m" + std::to_string(m);
  for (std::size_t i = 0; i < n; ++i) {
    const double az = rng.uniform(0, 2 * M_PI);
    const double dist = rng.uniform(2, 15);
    const Vec3 c(dist * std::sin(az), dist * std::cos(az), rng.uniform(-1, 4));
    const double s = rng.uniform(0.5, 3.0);
    const Vec3 a = c + s * oracle::random_point(rng, -1, 1);
    const Vec3 b = c + s * oracle::random_point(rng, -1, 1);
    const Vec3 d = c + s * oracle::random_point(rng, -1, 1);
    if ((b - a).cross(d - a).norm() * 0.5 <= 1e-6) continue;
    TriangleMesh& mesh = out[rng.index(meshes)];
    const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.insert(mesh.vertices.end(), {a, b, d});
    mesh.faces.push_back({base, base + 1, base + 2});
  }
  return out;
}

/// Every beam against every triangle, keeping the smallest t.
inline PointCloud brute_force_scan(const SensorSpec& spec, const std::vector<TriangleMesh>& meshes) {
  const auto dirs = beam_directions(spec);
  PointCloud pc;
  for (std::size_t b = 0; b < dirs.size(); ++b) {
    std::optional<std::pair<double, Vec3>> best;
    for (const auto& m : meshes) {
      for (const auto& f : m.faces) {
        const auto h = oracle::ray_triangle(spec.center, dirs[b], m.vertices[f[0]], m.vertices[f[1]], m.vertices[f[2]]);
        if (h && h->first <= spec.max_range && (!best || h->first < best->first)) best = h;
      }
    }
    if (best) {
      pc.points.push_back(best->second);
      pc.beam_index.push_back(static_cast<std::int64_t>(b));
    }
  }
  return pc;
}

}  // namespace hpskit::scenes
