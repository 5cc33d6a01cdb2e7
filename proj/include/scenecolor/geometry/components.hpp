#pragma once

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "scenecolor/geometry/mesh.hpp"

namespace scenecolor::geometry {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Splits every component into its vertex-connected pieces. Connected
/// components keep their id; split ones become "<id>.0", "<id>.1", ...
/// ordered by smallest triangle index. Idempotent.
inline TriangleMesh recover_components(TriangleMesh mesh) {
  std::vector<Component> out;
  for (const auto& comp : mesh.components) {
    DisjointSets sets(mesh.vertices.size());
    for (std::size_t t : comp.triangle_ids) {
      const auto& tri = mesh.triangles[t];
      sets.unite(tri[0], tri[1]);
      sets.unite(tri[1], tri[2]);
    }
    std::unordered_map<std::size_t, std::size_t> piece_of_root;
    std::vector<std::vector<std::size_t>> pieces;
    for (std::size_t t : comp.triangle_ids) {
      const std::size_t root = sets.find(mesh.triangles[t][0]);
      auto [it, inserted] = piece_of_root.emplace(root, pieces.size());
      if (inserted) pieces.emplace_back();
      pieces[it->second].push_back(t);
    }
    if (pieces.size() == 1) {
      out.push_back(comp);
      continue;
    }
    for (auto& p : pieces) std::sort(p.begin(), p.end());
    std::sort(pieces.begin(), pieces.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      Component piece;
      piece.id = comp.id + "." + std::to_string(k);
      piece.triangle_ids = std::move(pieces[k]);
      out.push_back(std::move(piece));
    }
  }
  mesh.components = std::move(out);
  refresh_component_areas(mesh);
  return mesh;
}

}  // namespace scenecolor::geometry
