#pragma once

#include <cmath>
#include <map>
#include <string>

#include "scenecolor/geometry/mesh.hpp"

namespace scenecolor::geometry {

/// Appends `part` to `mesh` as a new component named `id`.
inline void append_component(TriangleMesh& mesh, const TriangleMesh& part, const std::string& id) {
  const std::size_t base = mesh.vertices.size();
  mesh.vertices.insert(mesh.vertices.end(), part.vertices.begin(), part.vertices.end());
  Component comp;
  comp.id = id;
  for (const auto& tri : part.triangles) {
    mesh.triangles.push_back({tri[0] + base, tri[1] + base, tri[2] + base});
    comp.triangle_ids.push_back(mesh.triangles.size() - 1);
    comp.total_area += mesh.area(mesh.triangles.size() - 1);
  }
  mesh.components.push_back(std::move(comp));
}

inline TriangleMesh single_component(TriangleMesh mesh, const std::string& id = "part") {
  Component c;
  c.id = id;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) c.triangle_ids.push_back(t);
  mesh.components = {c};
  refresh_component_areas(mesh);
  return mesh;
}

/// Axis-aligned box with outward normals; each face split into n x n quads.
inline TriangleMesh make_box(const Vec3& lo, const Vec3& hi, int n = 1) {
  TriangleMesh m;
  std::map<std::array<long, 3>, std::size_t> index;
  auto vertex = [&](int i, int j, int k) {
    const std::array<long, 3> key = {i, j, k};
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const Vec3 p(lo.x() + (hi.x() - lo.x()) * i / n, lo.y() + (hi.y() - lo.y()) * j / n,
                 lo.z() + (hi.z() - lo.z()) * k / n);
    m.vertices.push_back(p);
    index.emplace(key, m.vertices.size() - 1);
    return m.vertices.size() - 1;
  };
  // For each axis and side, walk the face grid; flip winding on the low side.
  for (int axis = 0; axis < 3; ++axis)
    for (int side = 0; side < 2; ++side) {
      const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
          auto at = [&](int du, int dv) {
            std::array<int, 3> c{};
            c[static_cast<std::size_t>(axis)] = side * n;
            c[static_cast<std::size_t>(a1)] = u + du;
            c[static_cast<std::size_t>(a2)] = v + dv;
            return vertex(c[0], c[1], c[2]);
          };
          const std::size_t p00 = at(0, 0), p10 = at(1, 0), p11 = at(1, 1), p01 = at(0, 1);
          if (side == 1) {
            m.triangles.push_back({p00, p10, p11});
            m.triangles.push_back({p00, p11, p01});
          } else {
            m.triangles.push_back({p00, p11, p10});
            m.triangles.push_back({p00, p01, p11});
          }
        }
    }
  return single_component(std::move(m), "box");
}

/// Icosphere: icosahedron subdivided `level` times and projected.
inline TriangleMesh make_icosphere(double radius, int level, const Vec3& center = Vec3::Zero()) {
  TriangleMesh m;
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  for (const auto& v : std::vector<Vec3>{{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                                         {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}})
    m.vertices.push_back(v.normalized());
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> mid;
    auto midpoint = [&](std::size_t a, std::size_t b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      mid.emplace(key, m.vertices.size() - 1);
      return m.vertices.size() - 1;
    };
    std::vector<Triangle> next;
    for (const auto& t : m.triangles) {
      const std::size_t a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    m.triangles = std::move(next);
  }
  for (auto& v : m.vertices) v = center + radius * v;
  return single_component(std::move(m), "sphere");
}

/// Flat n x n grid in the y = 0 plane, normal +Y.
inline TriangleMesh make_grid(double size, int n) {
  TriangleMesh m;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) m.vertices.emplace_back(size * i / n, 0.0, size * j / n);
  auto id = [&](int i, int j) { return static_cast<std::size_t>(i * (n + 1) + j); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m.triangles.push_back({id(i, j), id(i, j + 1), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i + 1, j)});
    }
  return single_component(std::move(m), "plane");
}

/// Closed cylinder along +Y from `base`, `segments` around.
inline TriangleMesh make_cylinder(const Vec3& base, double radius, double height, int segments) {
  TriangleMesh m;
  constexpr double kTwoPi = 6.283185307179586;
  for (int s = 0; s < segments; ++s) {
    const double a = kTwoPi * s / segments;
    m.vertices.push_back(base + Vec3(radius * std::cos(a), 0.0, radius * std::sin(a)));
    m.vertices.push_back(base + Vec3(radius * std::cos(a), height, radius * std::sin(a)));
  }
  const std::size_t bottom = m.vertices.size();
  m.vertices.push_back(base);
  m.vertices.push_back(base + Vec3(0.0, height, 0.0));
  const auto n = static_cast<std::size_t>(segments);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t b0 = 2 * s, t0 = 2 * s + 1, b1 = 2 * ((s + 1) % n), t1 = 2 * ((s + 1) % n) + 1;
    m.triangles.push_back({b0, t0, t1});
    m.triangles.push_back({b0, t1, b1});
    m.triangles.push_back({bottom, b0, b1});
    m.triangles.push_back({bottom + 1, t1, t0});
  }
  return single_component(std::move(m), "cylinder");
}

}  // namespace scenecolor::geometry
