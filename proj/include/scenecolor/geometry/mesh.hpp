#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "scenecolor/core/error.hpp"

namespace scenecolor::geometry {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<std::size_t, 3>;

/// A topologically independent part of a furniture model; the unit that gets
/// labeled and textured.
struct Component {
  std::string id;
  std::vector<std::size_t> triangle_ids;
  double total_area = 0.0;
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Component> components;
  std::string category;

  std::size_t num_triangles() const { return triangles.size(); }

  Vec3 corner(std::size_t t, int k) const { return vertices[triangles[t][static_cast<std::size_t>(k)]]; }

  Vec3 centroid(std::size_t t) const { return (corner(t, 0) + corner(t, 1) + corner(t, 2)) / 3.0; }

  /// Unnormalized face normal; its length is twice the area.
  Vec3 cross(std::size_t t) const { return (corner(t, 1) - corner(t, 0)).cross(corner(t, 2) - corner(t, 0)); }

  double area(std::size_t t) const { return 0.5 * cross(t).norm(); }

  Vec3 normal(std::size_t t) const {
    const Vec3 c = cross(t);
    const double n = c.norm();
    return n > 0.0 ? Vec3(c / n) : Vec3::Zero();
  }

  double total_area() const {
    double sum = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) sum += area(t);
    return sum;
  }

  /// Component index of every triangle.
  std::vector<std::size_t> component_of_triangle() const {
    std::vector<std::size_t> owner(triangles.size(), components.size());
    for (std::size_t c = 0; c < components.size(); ++c)
      for (std::size_t t : components[c].triangle_ids) owner[t] = c;
    return owner;
  }

  const Component* find_component(const std::string& id) const {
    for (const auto& c : components)
      if (c.id == id) return &c;
    return nullptr;
  }
};

/// Recomputes every component's cached area from its triangles.
inline void refresh_component_areas(TriangleMesh& mesh) {
  for (auto& c : mesh.components) {
    c.total_area = 0.0;
    for (std::size_t t : c.triangle_ids) c.total_area += mesh.area(t);
  }
}

/// Checks index ranges, the partition property and positive areas. Throws
/// ParseError describing the first violation.
inline void validate(const TriangleMesh& mesh) {
  for (const auto& tri : mesh.triangles)
    for (std::size_t v : tri)
      if (v >= mesh.vertices.size()) fail(ErrorCode::ParseError, "triangle references missing vertex");
  std::vector<int> seen(mesh.triangles.size(), 0);
  for (const auto& c : mesh.components)
    for (std::size_t t : c.triangle_ids) {
      if (t >= mesh.triangles.size()) fail(ErrorCode::ParseError, "component references missing triangle");
      if (seen[t]++) fail(ErrorCode::ParseError, "triangle belongs to more than one component");
    }
  for (std::size_t t = 0; t < seen.size(); ++t) {
    if (!seen[t]) fail(ErrorCode::ParseError, "triangle belongs to no component");
    if (!(mesh.area(t) > 0.0)) fail(ErrorCode::ParseError, "zero-area triangle");
  }
}

/// Applies x -> R x + t to every vertex.
inline TriangleMesh transformed(TriangleMesh mesh, const Eigen::Matrix3d& rotation, const Vec3& translation) {
  for (auto& v : mesh.vertices) v = rotation * v + translation;
  refresh_component_areas(mesh);
  return mesh;
}

}  // namespace scenecolor::geometry
