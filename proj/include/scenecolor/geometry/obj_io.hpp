#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "scenecolor/geometry/mesh.hpp"

namespace scenecolor::geometry {

struct ObjLoadStats {
  std::size_t dropped_degenerate = 0;
  std::size_t polygons_triangulated = 0;
};

namespace detail {

inline double parse_double(const std::string& token, std::size_t line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, "bad number '" + token + "' on line " + std::to_string(line_no));
  }
}

// Resolves the vertex part of "v", "v/vt", "v//vn" or "v/vt/vn"; negative
// indices count back from the most recent vertex.
inline std::size_t parse_vertex_ref(const std::string& token, std::size_t vertex_count, std::size_t line_no) {
  const std::string head = token.substr(0, token.find('/'));
  long long idx = 0;
  auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
  if (ec != std::errc() || ptr != head.data() + head.size() || idx == 0)
    fail(ErrorCode::ParseError, "bad face index '" + token + "' on line " + std::to_string(line_no));
  long long resolved = idx > 0 ? idx - 1 : static_cast<long long>(vertex_count) + idx;
  if (resolved < 0 || resolved >= static_cast<long long>(vertex_count))
    fail(ErrorCode::ParseError, "face index out of range on line " + std::to_string(line_no));
  return static_cast<std::size_t>(resolved);
}

}  // namespace detail

/// Parses OBJ text. Group (g) and object (o) records name components; faces
/// before any record go to a component called "default". Polygons are fan
/// triangulated. Zero-area triangles are dropped and counted.
inline TriangleMesh parse_obj(std::istream& in, const std::string& category = {}, ObjLoadStats* stats = nullptr) {
  TriangleMesh mesh;
  mesh.category = category;
  ObjLoadStats local;
  std::map<std::string, std::size_t> component_index;
  std::vector<std::vector<Triangle>> grouped;
  std::vector<std::string> names;
  std::string current = "default";

  auto component_for = [&](const std::string& name) {
    auto it = component_index.find(name);
    if (it != component_index.end()) return it->second;
    component_index.emplace(name, names.size());
    names.push_back(name);
    grouped.emplace_back();
    return names.size() - 1;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      std::string x, y, z;
      if (!(ss >> x >> y >> z)) fail(ErrorCode::ParseError, "vertex needs 3 coordinates on line " + std::to_string(line_no));
      mesh.vertices.emplace_back(detail::parse_double(x, line_no), detail::parse_double(y, line_no),
                                 detail::parse_double(z, line_no));
    } else if (tag == "f") {
      std::vector<std::size_t> poly;
      std::string tok;
      while (ss >> tok) poly.push_back(detail::parse_vertex_ref(tok, mesh.vertices.size(), line_no));
      if (poly.size() < 3) fail(ErrorCode::ParseError, "face needs at least 3 vertices on line " + std::to_string(line_no));
      if (poly.size() > 3) ++local.polygons_triangulated;
      auto& bucket = grouped[component_for(current)];
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) bucket.push_back({poly[0], poly[k], poly[k + 1]});
    } else if (tag == "g" || tag == "o") {
      std::string rest, name;
      while (ss >> rest) name += (name.empty() ? "" : " ") + rest;
      current = name.empty() ? "default" : name;
    }
    // vt, vn, usemtl, mtllib, s and friends carry nothing we need.
  }

  // Relative tolerance so unit choice does not matter.
  Eigen::AlignedBox3d box;
  for (const auto& v : mesh.vertices) box.extend(v);
  const double diag = mesh.vertices.empty() ? 0.0 : box.diagonal().norm();
  const double min_area = 1e-14 * diag * diag;

  for (std::size_t g = 0; g < names.size(); ++g) {
    Component comp;
    comp.id = names[g];
    for (const auto& tri : grouped[g]) {
      mesh.triangles.push_back(tri);
      const std::size_t t = mesh.triangles.size() - 1;
      const double a = mesh.area(t);
      if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] || !(a > min_area)) {
        mesh.triangles.pop_back();
        ++local.dropped_degenerate;
        continue;
      }
      comp.triangle_ids.push_back(t);
      comp.total_area += a;
    }
    if (!comp.triangle_ids.empty()) mesh.components.push_back(std::move(comp));
  }
  if (mesh.triangles.empty()) fail(ErrorCode::EmptyMesh, "mesh has no valid triangles");
  if (stats) *stats = local;
  return mesh;
}

inline TriangleMesh load_obj(const std::filesystem::path& path, const std::string& category = {},
                             ObjLoadStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + path.string());
  return parse_obj(in, category, stats);
}

/// Writes vertices, then one g record per component followed by its faces.
inline void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& c : mesh.components) {
    out << "g " << c.id << '\n';
    for (std::size_t t : c.triangle_ids) {
      const auto& tri = mesh.triangles[t];
      out << "f " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
    }
  }
}

inline void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  write_obj(out, mesh);
}

}  // namespace scenecolor::geometry
