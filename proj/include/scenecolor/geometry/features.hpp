#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "scenecolor/geometry/components.hpp"
#include "scenecolor/geometry/mesh.hpp"

namespace scenecolor::geometry {

enum class FeatureBlock : std::size_t { Curvature = 0, Pca, Sdf, Agd, ShapeContext, SpinImage };
inline constexpr std::size_t kNumFeatureBlocks = 6;

/// Which per-triangle blocks are computed and where they sit in the row.
/// Trained classifiers store the fingerprint and refuse rows built with a
/// different layout.
struct FeatureRegistry {
  static constexpr int kVersion = 1;
  static constexpr std::array<std::size_t, kNumFeatureBlocks> kBlockDims = {4, 9, 2, 2, 12, 20};
  static constexpr std::array<const char*, kNumFeatureBlocks> kBlockNames = {"curvature", "pca", "sdf",
                                                                             "agd", "shape_context", "spin_image"};

  std::array<bool, kNumFeatureBlocks> enabled = {true, true, true, true, true, true};

  std::size_t dimension() const {
    std::size_t d = 0;
    for (std::size_t b = 0; b < kNumFeatureBlocks; ++b)
      if (enabled[b]) d += kBlockDims[b];
    return d;
  }

  /// Column offset of a block, or npos when disabled.
  std::size_t offset(FeatureBlock block) const {
    const auto b = static_cast<std::size_t>(block);
    if (!enabled[b]) return npos;
    std::size_t off = 0;
    for (std::size_t k = 0; k < b; ++k)
      if (enabled[k]) off += kBlockDims[k];
    return off;
  }

  std::string fingerprint() const {
    std::string fp = "triangle-features/v" + std::to_string(kVersion);
    for (std::size_t b = 0; b < kNumFeatureBlocks; ++b)
      if (enabled[b]) fp += std::string(b == 0 ? ":" : ",") + kBlockNames[b] + std::to_string(kBlockDims[b]);
    return fp;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Dense row-major real matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// Raw geometric signals shared by the per-triangle features and the
/// per-component descriptors.
struct MeshSignals {
  double scale = 0.0;                      // area-weighted RMS radius about the centroid
  std::vector<double> face_area;
  std::vector<Vec3> face_centroid;
  std::vector<Vec3> face_normal;
  std::vector<Vec3> vertex_normal;
  std::vector<std::array<double, 4>> face_curvature;  // k_max, k_min, mean, gaussian
  std::vector<double> vertex_gaussian;     // per vertex
  std::vector<double> sdf;                 // per triangle, model units
  std::vector<double> agd;                 // per triangle, model units
  std::vector<bool> sdf_unresolved_component;  // per component: no ray found an exit
  bool sdf_degenerate = false;             // every component unresolved
};

namespace detail {

inline constexpr double kPi = 3.14159265358979323846;

// Orthonormal frame with the given unit z axis, built from the face's first
// edge so it moves rigidly with the mesh.
inline void face_frame(const TriangleMesh& mesh, std::size_t t, const Vec3& n, Vec3& u, Vec3& v) {
  u = mesh.corner(t, 1) - mesh.corner(t, 0);
  u -= n * n.dot(u);
  u.normalize();
  v = n.cross(u);
}

inline std::array<double, 4> face_shape_operator(const TriangleMesh& mesh, std::size_t t, const Vec3& n,
                                                 const std::vector<Vec3>& vnormal) {
  Vec3 u, v;
  face_frame(mesh, t, n, u, v);
  Eigen::Matrix<double, 6, 3> a = Eigen::Matrix<double, 6, 3>::Zero();
  Eigen::Matrix<double, 6, 1> b;
  const auto& tri = mesh.triangles[t];
  for (int k = 0; k < 3; ++k) {
    const std::size_t i0 = tri[static_cast<std::size_t>((k + 1) % 3)];
    const std::size_t i1 = tri[static_cast<std::size_t>((k + 2) % 3)];
    const Vec3 e = mesh.vertices[i1] - mesh.vertices[i0];
    const Vec3 dn = vnormal[i1] - vnormal[i0];
    const double eu = e.dot(u), ev = e.dot(v);
    a.row(2 * k) << eu, ev, 0.0;
    a.row(2 * k + 1) << 0.0, eu, ev;
    b(2 * k) = dn.dot(u);
    b(2 * k + 1) = dn.dot(v);
  }
  const Eigen::Vector3d s = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  Eigen::Matrix2d second;
  second << s(0), s(1), s(1), s(2);
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(second).eigenvalues();
  const double kmax = ev(1), kmin = ev(0);
  return {kmax, kmin, 0.5 * (kmax + kmin), kmax * kmin};
}

// Möller-Trumbore; returns hit distance or +inf.
inline double ray_triangle(const Vec3& o, const Vec3& d, const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  const Vec3 e1 = p1 - p0, e2 = p2 - p0;
  const Vec3 pv = d.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-300) return std::numeric_limits<double>::infinity();
  const double inv = 1.0 / det;
  const Vec3 tv = o - p0;
  const double bu = tv.dot(pv) * inv;
  if (bu < 0.0 || bu > 1.0) return std::numeric_limits<double>::infinity();
  const Vec3 qv = tv.cross(e1);
  const double bv = d.dot(qv) * inv;
  if (bv < 0.0 || bu + bv > 1.0) return std::numeric_limits<double>::infinity();
  return e2.dot(qv) * inv;
}

inline bool ray_box(const Vec3& o, const Vec3& d, const Eigen::AlignedBox3d& box) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (d(k) == 0.0) {
      if (o(k) < box.min()(k) || o(k) > box.max()(k)) return false;
      continue;
    }
    const double inv = 1.0 / d(k);
    double ta = (box.min()(k) - o(k)) * inv, tb = (box.max()(k) - o(k)) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

inline double weighted_median(std::vector<std::pair<double, double>> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (const auto& [v, w] : values) total += w;
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += values[i].second;
    if (acc >= 0.5 * total - 1e-15 * total) {
      // Exactly half: average with the next value, like the unweighted even case.
      if (std::abs(acc - 0.5 * total) <= 1e-12 * total && i + 1 < values.size())
        return 0.5 * (values[i].first + values[i + 1].first);
      return values[i].first;
    }
  }
  return values.back().first;
}

inline double plain_median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Cone sampling used by the shape diameter function.
struct SdfOptions {
  int rays = 30;
  double cone_degrees = 120.0;
};

inline void compute_sdf(const TriangleMesh& mesh, MeshSignals& s, const SdfOptions& opt = {}) {
  const std::size_t nf = mesh.num_triangles();
  std::vector<Eigen::AlignedBox3d> boxes(mesh.components.size());
  for (std::size_t c = 0; c < mesh.components.size(); ++c)
    for (std::size_t t : mesh.components[c].triangle_ids)
      for (int k = 0; k < 3; ++k) boxes[c].extend(mesh.corner(t, k));

  const double half = opt.cone_degrees * 0.5 * detail::kPi / 180.0;
  const double golden = detail::kPi * (3.0 - std::sqrt(5.0));
  const double eps = 1e-9 * std::max(s.scale, 1e-300);
  const double coincident = 1e-7 * std::max(s.scale, 1e-300);

  std::vector<double> raw(nf, 0.0);
  std::vector<bool> resolved(nf, false);
  for (std::size_t t = 0; t < nf; ++t) {
    const Vec3 n = s.face_normal[t];
    Vec3 u, v;
    detail::face_frame(mesh, t, n, u, v);
    const Vec3 origin = s.face_centroid[t];
    std::vector<double> hits;
    for (int r = 0; r < opt.rays; ++r) {
      // Quadratic radial spacing packs rays toward the cone axis.
      const double frac = (r + 0.5) / opt.rays;
      const double theta = half * frac * frac;
      const double phi = golden * r;
      const Vec3 dir = (-n * std::cos(theta) + std::sin(theta) * (std::cos(phi) * u + std::sin(phi) * v)).normalized();
      // Nearest exit (back-facing) and nearest entry (front-facing) hits.
      // Touching parts produce coincident faces; an exit within tolerance
      // of an entry still counts.
      double exit = std::numeric_limits<double>::infinity();
      double entry = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < mesh.components.size(); ++c) {
        if (!detail::ray_box(origin, dir, boxes[c])) continue;
        for (std::size_t f : mesh.components[c].triangle_ids) {
          if (f == t) continue;
          const double d = detail::ray_triangle(origin, dir, mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
          if (!(d > eps)) continue;
          if (s.face_normal[f].dot(dir) > 0.0)
            exit = std::min(exit, d);
          else
            entry = std::min(entry, d);
        }
      }
      if (std::isfinite(exit) && exit <= entry + coincident) hits.push_back(exit);
    }
    if (!hits.empty()) {
      raw[t] = detail::plain_median(std::move(hits));
      resolved[t] = true;
    }
  }

  s.sdf.assign(nf, 0.0);
  s.sdf_unresolved_component.assign(mesh.components.size(), false);
  std::size_t unresolved = 0;
  for (std::size_t c = 0; c < mesh.components.size(); ++c) {
    std::vector<double> vals;
    for (std::size_t t : mesh.components[c].triangle_ids)
      if (resolved[t]) vals.push_back(raw[t]);
    const double fallback = detail::plain_median(vals);
    if (vals.empty()) {
      s.sdf_unresolved_component[c] = true;
      ++unresolved;
    }
    for (std::size_t t : mesh.components[c].triangle_ids) s.sdf[t] = resolved[t] ? raw[t] : fallback;
  }
  s.sdf_degenerate = unresolved == mesh.components.size();
}

/// Average geodesic distance over the triangle dual graph (edges between
/// faces sharing an edge, weighted by centroid distance). Disconnected
/// pieces are joined by their closest centroid pairs, spanning-tree style,
/// so every face reaches every other.
inline void compute_agd(const TriangleMesh& mesh, MeshSignals& s, std::size_t max_sources = 256) {
  const std::size_t nf = mesh.num_triangles();
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(nf);
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> edge_faces;
  for (std::size_t t = 0; t < nf; ++t)
    for (int k = 0; k < 3; ++k) {
      std::size_t a = mesh.triangles[t][static_cast<std::size_t>(k)];
      std::size_t b = mesh.triangles[t][static_cast<std::size_t>((k + 1) % 3)];
      if (b < a) std::swap(a, b);
      edge_faces[{a, b}].push_back(t);
    }
  DisjointSets pieces(nf);
  auto link = [&](std::size_t a, std::size_t b) {
    const double w = (s.face_centroid[a] - s.face_centroid[b]).norm();
    adj[a].emplace_back(b, w);
    adj[b].emplace_back(a, w);
    pieces.unite(a, b);
  };
  for (const auto& [edge, faces] : edge_faces)
    for (std::size_t i = 0; i < faces.size(); ++i)
      for (std::size_t j = i + 1; j < faces.size(); ++j) link(faces[i], faces[j]);

  // Closest face pair between every two pieces, then Kruskal over pieces.
  std::vector<std::size_t> root(nf);
  std::map<std::size_t, std::size_t> piece_index;
  for (std::size_t t = 0; t < nf; ++t) {
    root[t] = pieces.find(t);
    piece_index.emplace(root[t], piece_index.size());
  }
  if (piece_index.size() > 1) {
    const std::size_t np = piece_index.size();
    struct Bridge {
      double dist = std::numeric_limits<double>::infinity();
      std::size_t a = 0, b = 0;
    };
    std::vector<Bridge> closest(np * np);
    for (std::size_t i = 0; i < nf; ++i)
      for (std::size_t j = i + 1; j < nf; ++j) {
        std::size_t pi = piece_index[root[i]], pj = piece_index[root[j]];
        if (pi == pj) continue;
        if (pj < pi) std::swap(pi, pj);
        const double d = (s.face_centroid[i] - s.face_centroid[j]).norm();
        Bridge& br = closest[pi * np + pj];
        // Near-ties keep the earlier pair so the choice survives rigid motion.
        if (d < br.dist * (1.0 - 1e-9)) br = {d, i, j};
      }
    const double quantum = 1e-9 * std::max(s.scale, 1e-300);
    std::vector<std::tuple<long long, std::size_t, std::size_t>> order;
    for (std::size_t pi = 0; pi < np; ++pi)
      for (std::size_t pj = pi + 1; pj < np; ++pj)
        order.emplace_back(std::llround(closest[pi * np + pj].dist / quantum), pi, pj);
    std::sort(order.begin(), order.end());
    DisjointSets forest(np);
    for (const auto& [key, pi, pj] : order)
      if (forest.unite(pi, pj)) link(closest[pi * np + pj].a, closest[pi * np + pj].b);
  }

  std::vector<std::size_t> sources;
  if (nf <= max_sources) {
    sources.resize(nf);
    std::iota(sources.begin(), sources.end(), std::size_t{0});
  } else {
    for (std::size_t k = 0; k < max_sources; ++k) sources.push_back(k * nf / max_sources);
  }

  std::vector<double> acc(nf, 0.0), dist(nf);
  double weight = 0.0;
  using Item = std::pair<double, std::size_t>;
  for (std::size_t src : sources) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0.0;
    pq.emplace(0.0, src);
    while (!pq.empty()) {
      auto [d, f] = pq.top();
      pq.pop();
      if (d > dist[f]) continue;
      for (auto [g, w] : adj[f])
        if (d + w < dist[g]) {
          dist[g] = d + w;
          pq.emplace(dist[g], g);
        }
    }
    const double w = s.face_area[src];
    for (std::size_t f = 0; f < nf; ++f) acc[f] += w * dist[f];
    weight += w;
  }
  s.agd.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) s.agd[f] = acc[f] / weight;
}

/// Curvatures, SDF and AGD for a mesh; everything downstream reads these.
inline MeshSignals compute_signals(const TriangleMesh& mesh, const SdfOptions& sdf_options = {}) {
  const std::size_t nf = mesh.num_triangles(), nv = mesh.vertices.size();
  MeshSignals s;
  s.face_area.resize(nf);
  s.face_centroid.resize(nf);
  s.face_normal.resize(nf);
  double total = 0.0;
  Vec3 center = Vec3::Zero();
  for (std::size_t t = 0; t < nf; ++t) {
    s.face_area[t] = mesh.area(t);
    s.face_centroid[t] = mesh.centroid(t);
    s.face_normal[t] = mesh.normal(t);
    total += s.face_area[t];
    center += s.face_area[t] * s.face_centroid[t];
  }
  center /= total;
  double rms = 0.0;
  for (std::size_t t = 0; t < nf; ++t) rms += s.face_area[t] * (s.face_centroid[t] - center).squaredNorm();
  s.scale = std::sqrt(rms / total);

  // Area-weighted vertex normals, angle sums and one-ring areas.
  s.vertex_normal.assign(nv, Vec3::Zero());
  std::vector<double> angle_sum(nv, 0.0), ring_area(nv, 0.0);
  std::map<std::pair<std::size_t, std::size_t>, int> edge_use;
  for (std::size_t t = 0; t < nf; ++t) {
    const Vec3 c = mesh.cross(t);
    for (int k = 0; k < 3; ++k) {
      const std::size_t i = mesh.triangles[t][static_cast<std::size_t>(k)];
      const std::size_t j = mesh.triangles[t][static_cast<std::size_t>((k + 1) % 3)];
      const std::size_t l = mesh.triangles[t][static_cast<std::size_t>((k + 2) % 3)];
      s.vertex_normal[i] += c;
      ring_area[i] += s.face_area[t] / 3.0;
      const Vec3 a = (mesh.vertices[j] - mesh.vertices[i]).normalized();
      const Vec3 b = (mesh.vertices[l] - mesh.vertices[i]).normalized();
      angle_sum[i] += std::acos(std::clamp(a.dot(b), -1.0, 1.0));
      edge_use[{std::min(i, j), std::max(i, j)}]++;
    }
  }
  std::vector<bool> boundary(nv, false);
  for (const auto& [e, count] : edge_use)
    if (count == 1) boundary[e.first] = boundary[e.second] = true;
  for (auto& n : s.vertex_normal)
    if (n.norm() > 0.0) n.normalize();

  s.face_curvature.resize(nf);
  for (std::size_t t = 0; t < nf; ++t)
    s.face_curvature[t] = detail::face_shape_operator(mesh, t, s.face_normal[t], s.vertex_normal);

  // Angle deficit for interior vertices; boundary vertices fall back to the
  // mean face curvature of their one ring.
  s.vertex_gaussian.assign(nv, 0.0);
  std::vector<double> ring_k(nv, 0.0), ring_n(nv, 0.0);
  for (std::size_t t = 0; t < nf; ++t)
    for (std::size_t v : mesh.triangles[t]) {
      ring_k[v] += s.face_curvature[t][3];
      ring_n[v] += 1.0;
    }
  for (std::size_t v = 0; v < nv; ++v) {
    if (ring_n[v] == 0.0) continue;
    if (boundary[v])
      s.vertex_gaussian[v] = ring_k[v] / ring_n[v];
    else
      s.vertex_gaussian[v] = (2.0 * detail::kPi - angle_sum[v]) / ring_area[v];
  }

  compute_sdf(mesh, s, sdf_options);
  compute_agd(mesh, s);
  return s;
}

/// Per-triangle feature rows before area weighting.
inline FeatureMatrix raw_triangle_features(const TriangleMesh& mesh, const MeshSignals& s,
                                           const FeatureRegistry& reg = {}) {
  const std::size_t nf = mesh.num_triangles();
  FeatureMatrix m(nf, reg.dimension());
  const double scale = s.scale > 0.0 ? s.scale : 1.0;
  double total = 0.0;
  Vec3 center = Vec3::Zero();
  for (std::size_t t = 0; t < nf; ++t) {
    total += s.face_area[t];
    center += s.face_area[t] * s.face_centroid[t];
  }
  center /= total;

  if (auto off = reg.offset(FeatureBlock::Curvature); off != FeatureRegistry::npos)
    for (std::size_t t = 0; t < nf; ++t)
      for (std::size_t k = 0; k < 4; ++k) m(t, off + k) = s.face_curvature[t][k] * (k == 3 ? scale * scale : scale);

  if (auto off = reg.offset(FeatureBlock::Pca); off != FeatureRegistry::npos) {
    // Global frame, signs fixed toward +Y (then +X).
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t t = 0; t < nf; ++t) {
      const Vec3 d = s.face_centroid[t] - center;
      cov += s.face_area[t] * d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov / total);
    Eigen::Matrix3d axes;
    for (int k = 0; k < 3; ++k) {
      Vec3 a = eig.eigenvectors().col(2 - k);
      if (std::abs(a.y()) > 1e-9 ? a.y() < 0.0 : a.x() < 0.0) a = -a;
      axes.col(k) = a;
    }
    const std::array<double, 2> radii = {0.1 * scale, 0.25 * scale};
    for (std::size_t t = 0; t < nf; ++t) {
      for (std::size_t r = 0; r < radii.size(); ++r) {
        Eigen::Matrix3d local = Eigen::Matrix3d::Zero();
        Vec3 mean = Vec3::Zero();
        double w = 0.0;
        for (std::size_t g = 0; g < nf; ++g)
          if ((s.face_centroid[g] - s.face_centroid[t]).norm() <= radii[r]) {
            mean += s.face_area[g] * s.face_centroid[g];
            w += s.face_area[g];
          }
        mean /= w;
        for (std::size_t g = 0; g < nf; ++g)
          if ((s.face_centroid[g] - s.face_centroid[t]).norm() <= radii[r]) {
            const Vec3 d = s.face_centroid[g] - mean;
            local += s.face_area[g] * d * d.transpose();
          }
        const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(local / w).eigenvalues();
        const double sum = ev.sum();
        for (std::size_t k = 0; k < 3; ++k)
          m(t, off + 3 * r + k) = sum > 1e-12 * scale * scale ? std::max(0.0, ev(2 - static_cast<int>(k))) / sum : 0.0;
      }
      const Vec3 p = axes.transpose() * (s.face_centroid[t] - center) / scale;
      for (std::size_t k = 0; k < 3; ++k) m(t, off + 6 + k) = p(static_cast<int>(k));
    }
  }

  double mean_sdf = 0.0, mean_agd = 0.0;
  for (std::size_t t = 0; t < nf; ++t) {
    mean_sdf += s.face_area[t] * s.sdf[t];
    mean_agd += s.face_area[t] * s.agd[t];
  }
  mean_sdf /= total;
  mean_agd /= total;
  if (auto off = reg.offset(FeatureBlock::Sdf); off != FeatureRegistry::npos)
    for (std::size_t t = 0; t < nf; ++t) {
      m(t, off) = s.sdf[t];
      m(t, off + 1) = mean_sdf > 0.0 ? s.sdf[t] / mean_sdf : 0.0;
    }
  if (auto off = reg.offset(FeatureBlock::Agd); off != FeatureRegistry::npos)
    for (std::size_t t = 0; t < nf; ++t) {
      m(t, off) = s.agd[t];
      m(t, off + 1) = mean_agd > 0.0 ? s.agd[t] / mean_agd : 0.0;
    }

  const std::size_t sc_off = reg.offset(FeatureBlock::ShapeContext);
  const std::size_t spin_off = reg.offset(FeatureBlock::SpinImage);
  if (sc_off != FeatureRegistry::npos || spin_off != FeatureRegistry::npos) {
    for (std::size_t t = 0; t < nf; ++t) {
      const Vec3& c = s.face_centroid[t];
      const Vec3& n = s.face_normal[t];
      std::array<double, 12> sc{};
      std::array<double, 20> spin{};
      double others = 0.0;
      for (std::size_t g = 0; g < nf; ++g) {
        if (g == t) continue;
        const Vec3 d = s.face_centroid[g] - c;
        const double len = d.norm();
        const double w = s.face_area[g];
        others += w;
        if (len <= 0.0) continue;
        // Shape context: 4 distance shells x 3 elevation bands about the
        // normal. The middle band is centered on the tangent plane so
        // coplanar neighbours never sit on a bin edge.
        const double rel = len / scale;
        const std::size_t shell = rel < 0.125 ? 0 : (rel < 0.35 ? 1 : (rel < 1.0 ? 2 : 3));
        const double cosang = std::clamp(n.dot(d) / len, -1.0, 1.0);
        const std::size_t band = cosang < -1.0 / 3.0 ? 0 : (cosang < 1.0 / 3.0 ? 1 : 2);
        sc[shell * 3 + band] += w;
        // Spin image: 4 radial x 5 height bins inside a window of one scale.
        const double beta = n.dot(d);
        const double alpha = std::sqrt(std::max(0.0, len * len - beta * beta));
        if (alpha < scale && beta >= -scale && beta < scale) {
          const auto ai = static_cast<std::size_t>(alpha / scale * 4.0);
          const auto bi = static_cast<std::size_t>((beta + scale) / (2.0 * scale) * 5.0);
          spin[std::min<std::size_t>(ai, 3) * 5 + std::min<std::size_t>(bi, 4)] += w;
        }
      }
      if (others > 0.0) {
        if (sc_off != FeatureRegistry::npos)
          for (std::size_t k = 0; k < 12; ++k) m(t, sc_off + k) = sc[k] / others;
        if (spin_off != FeatureRegistry::npos)
          for (std::size_t k = 0; k < 20; ++k) m(t, spin_off + k) = spin[k] / others;
      }
    }
  }

  for (auto& x : m.data)
    if (!std::isfinite(x)) x = 0.0;
  return m;
}

struct TriangleFeatures {
  FeatureMatrix rows;       // area weighted: raw * area(t) / mesh area
  FeatureMatrix raw;        // before weighting
  MeshSignals signals;
  std::string fingerprint;
  bool sdf_degenerate = false;
};

/// Multiplies every row by its triangle's share of the mesh area.
inline FeatureMatrix area_weighted(const FeatureMatrix& raw, std::span<const double> face_area) {
  FeatureMatrix out = raw;
  const double total = std::accumulate(face_area.begin(), face_area.end(), 0.0);
  for (std::size_t t = 0; t < out.rows; ++t)
    for (double& x : out.row(t)) x *= face_area[t] / total;
  return out;
}

inline TriangleFeatures triangle_features(const TriangleMesh& mesh, const FeatureRegistry& reg = {}) {
  if (mesh.vertices.size() < 4) fail(ErrorCode::DegenerateGeometry, "triangle features need at least 4 vertices");
  TriangleFeatures f;
  f.signals = compute_signals(mesh);
  f.raw = raw_triangle_features(mesh, f.signals, reg);
  f.rows = area_weighted(f.raw, f.signals.face_area);
  f.fingerprint = reg.fingerprint();
  f.sdf_degenerate = f.signals.sdf_degenerate;
  return f;
}

}  // namespace scenecolor::geometry
