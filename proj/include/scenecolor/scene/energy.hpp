#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "scenecolor/scene/theme_model.hpp"

namespace scenecolor::scene {

/// A database image object that a furniture node may copy its theme from.
struct Candidate {
  std::string id;  // image object id
  ColorTheme theme;
  double quality = 0.0;  // annotation quality; higher is better
};

struct SceneNode {
  std::string id;
  std::string category;
  std::vector<Candidate> candidates;
  std::optional<std::size_t> pinned;
};

struct SceneEdge {
  std::size_t a = 0, b = 0;  // a < b
};

/// Nodes are furniture objects; edges join nodes whose categories co-occur.
struct SceneGraph {
  std::vector<SceneNode> nodes;
  std::vector<SceneEdge> edges;

  std::size_t node_index(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return i;
    fail(ErrorCode::NotFound, "no scene node " + id);
  }
};

inline constexpr std::size_t kMaxCandidates = 64;

/// Keeps the best-annotated candidates (ties by id) and adds an edge for
/// every node pair whose categories have a pair model.
inline SceneGraph build_scene_graph(std::vector<SceneNode> nodes, const ThemeModels& models,
                                    std::size_t max_candidates = kMaxCandidates) {
  SceneGraph g;
  for (auto& n : nodes) {
    if (n.candidates.empty()) fail(ErrorCode::NoCandidates, "node " + n.id + " has no candidate states");
    std::string pinned_id;
    if (n.pinned) {
      if (*n.pinned >= n.candidates.size()) fail(ErrorCode::InvalidPin, "pinned state out of range for " + n.id);
      pinned_id = n.candidates[*n.pinned].id;
    }
    std::stable_sort(n.candidates.begin(), n.candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.quality != b.quality) return a.quality > b.quality;
      return a.id < b.id;
    });
    if (n.candidates.size() > max_candidates) {
      // A pinned candidate survives the cap.
      auto keep = std::vector<Candidate>(n.candidates.begin(), n.candidates.begin() + static_cast<long>(max_candidates));
      if (n.pinned && std::none_of(keep.begin(), keep.end(), [&](const Candidate& c) { return c.id == pinned_id; }))
        keep.back() = *std::find_if(n.candidates.begin(), n.candidates.end(),
                                    [&](const Candidate& c) { return c.id == pinned_id; });
      n.candidates = std::move(keep);
    }
    if (n.pinned)
      n.pinned = static_cast<std::size_t>(
          std::find_if(n.candidates.begin(), n.candidates.end(), [&](const Candidate& c) { return c.id == pinned_id; }) -
          n.candidates.begin());
    g.nodes.push_back(std::move(n));
  }
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::size_t j = i + 1; j < g.nodes.size(); ++j)
      if (models.pair(g.nodes[i].category, g.nodes[j].category)) g.edges.push_back({i, j});
  return g;
}

/// Chosen candidate index per node.
struct Assignment {
  std::vector<std::size_t> state;
  bool operator==(const Assignment&) const = default;
};

inline void validate(const SceneGraph& g, const Assignment& a) {
  if (a.state.size() != g.nodes.size()) fail(ErrorCode::InvalidArgument, "assignment size differs from node count");
  for (std::size_t i = 0; i < a.state.size(); ++i)
    if (a.state[i] >= g.nodes[i].candidates.size())
      fail(ErrorCode::InvalidArgument, "state out of range for node " + g.nodes[i].id);
}

enum class NormalizerMode { Calibrated, Raw };

struct EnergyParams {
  double beta = 1.0;
  double gamma = 10.0;
  double lambda = 0.4;
  std::size_t k_clusters = 50;
  std::size_t m_retrieval = 10;
  NormalizerMode normalizer = NormalizerMode::Calibrated;
  // Per-node magnitude of the constraint normalizer, fixed once on the fixture corpus.
  double normalizer_constant = 1.8;
};

inline double constraint_normalizer(std::size_t nodes, const EnergyParams& p) {
  const double n = static_cast<double>(std::max<std::size_t>(nodes, 1));
  return p.normalizer == NormalizerMode::Raw ? n : n * p.normalizer_constant;
}

struct EnergyTerms {
  double data = 0.0;
  double smoothness = 0.0;
  double constraint = 0.0;
  double total = 0.0;
};

inline const CategoryThemeModel& category_model(const ThemeModels& m, const std::string& c) {
  const auto* cm = m.category(c);
  if (!cm) fail(ErrorCode::InsufficientData, "no theme model for category " + c);
  return *cm;
}

inline double data_energy(const SceneGraph& g, const Assignment& a, const ThemeModels& m) {
  validate(g, a);
  double e = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    e += category_model(m, g.nodes[i].category).log_density(g.nodes[i].candidates[a.state[i]].theme);
  return e;
}

inline double edge_energy(const SceneGraph& g, const SceneEdge& e, std::size_t sa, std::size_t sb,
                          const ThemeModels& m) {
  const auto& na = g.nodes[e.a];
  const auto& nb = g.nodes[e.b];
  const auto* pm = m.pair(na.category, nb.category);
  if (!pm) fail(ErrorCode::InsufficientData, "no pair model for " + na.category + "+" + nb.category);
  return pm->log_density(na.category, na.candidates[sa].theme, nb.category, nb.candidates[sb].theme);
}

inline double smoothness_energy(const SceneGraph& g, const Assignment& a, const ThemeModels& m) {
  validate(g, a);
  double e = 0.0;
  for (const auto& edge : g.edges) e += edge_energy(g, edge, a.state[edge.a], a.state[edge.b], m);
  return e;
}

inline double constraint_energy(const SceneGraph& g, const Assignment& a, const ColorTheme& user,
                                const EnergyParams& p) {
  validate(g, a);
  double d = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) d += palette::theme_distance(user, g.nodes[i].candidates[a.state[i]].theme);
  return -d / constraint_normalizer(g.nodes.size(), p);
}

inline EnergyTerms total_energy(const SceneGraph& g, const Assignment& a, const ThemeModels& m, const ColorTheme& user,
                                const EnergyParams& p) {
  EnergyTerms t;
  t.data = data_energy(g, a, m);
  t.smoothness = smoothness_energy(g, a, m);
  t.constraint = constraint_energy(g, a, user, p);
  t.total = t.data + p.beta * t.smoothness + p.gamma * t.constraint;
  return t;
}

inline nlohmann::json to_json(const EnergyTerms& t) {
  return {{"data", t.data}, {"smoothness", t.smoothness}, {"constraint", t.constraint}, {"total", t.total}};
}

}  // namespace scenecolor::scene
