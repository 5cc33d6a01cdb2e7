#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "scenecolor/geometry/descriptor.hpp"
#include "scenecolor/geometry/features.hpp"
#include "scenecolor/segmentation/jointboost.hpp"

namespace scenecolor::segmentation {

using geometry::Component;
using geometry::FeatureRegistry;
using geometry::TriangleMesh;

/// Per-triangle class scores, one row per mesh triangle.
using ScoreMatrix = std::vector<std::vector<double>>;

struct LabeledComponent {
  std::string component_id;
  std::string label;
  std::vector<double> probability;
  double area = 0.0;
};

/// One entry per mesh component, in mesh order.
struct ComponentLabeling {
  std::vector<std::string> labels;
  std::vector<LabeledComponent> components;

  const LabeledComponent* find(const std::string& id) const {
    for (const auto& c : components)
      if (c.component_id == id) return &c;
    return nullptr;
  }
};

/// Index of the largest entry; ties go to the smallest index.
inline std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Area-weighted mean of the component's local scores plus lambda times the
/// global score. The result is a score; it need not sum to one.
inline std::vector<double> component_probability(const Component& component, std::span<const double> face_area,
                                                 const ScoreMatrix& local_scores,
                                                 const std::vector<double>& global_scores, double lambda) {
  if (lambda < 0.0 || !std::isfinite(lambda)) fail(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
  if (component.triangle_ids.empty()) fail(ErrorCode::InvalidArgument, "component has no triangles");
  const std::size_t nc = global_scores.size();
  double z = 0.0;
  std::vector<double> p(nc, 0.0);
  for (std::size_t t : component.triangle_ids) {
    if (t >= local_scores.size() || t >= face_area.size())
      fail(ErrorCode::DimensionMismatch, "triangle index outside the score matrix");
    if (local_scores[t].size() != nc)
      fail(ErrorCode::DimensionMismatch, "local and global scores cover different label sets");
    z += face_area[t];
    for (std::size_t c = 0; c < nc; ++c) p[c] += face_area[t] * local_scores[t][c];
  }
  for (std::size_t c = 0; c < nc; ++c) p[c] = p[c] / z + lambda * global_scores[c];
  return p;
}

enum class VoteMode { Combined, LocalOnly, GlobalOnly };

/// Classifier pair for one (category, scheme).
struct SegmentationModel {
  JointBoostModel local;
  JointBoostModel global;
};

/// Precomputed inputs so evaluation can reuse features across vote modes.
struct MeshEvidence {
  std::vector<double> face_area;
  ScoreMatrix local;   // per triangle
  ScoreMatrix global;  // per component
};

inline void check_compatible(const SegmentationModel& model, const std::string& local_fp, const std::string& global_fp) {
  if (model.local.fingerprint != local_fp)
    fail(ErrorCode::RegistryMismatch, "local model was trained on a different feature registry",
         {{"model", model.local.fingerprint}, {"mesh", local_fp}});
  if (model.global.fingerprint != global_fp)
    fail(ErrorCode::RegistryMismatch, "global model was trained on a different descriptor layout",
         {{"model", model.global.fingerprint}, {"mesh", global_fp}});
  if (model.local.labels != model.global.labels)
    fail(ErrorCode::RegistryMismatch, "local and global models disagree on the label set");
}

inline MeshEvidence gather_evidence(const TriangleMesh& mesh, const SegmentationModel& model,
                                    const FeatureRegistry& registry = {}) {
  const auto tf = geometry::triangle_features(mesh, registry);
  check_compatible(model, tf.fingerprint, geometry::descriptor_fingerprint());
  const auto desc = geometry::component_descriptors(mesh, tf.signals);
  MeshEvidence ev;
  ev.face_area = tf.signals.face_area;
  ev.local.reserve(tf.rows.rows);
  for (std::size_t t = 0; t < tf.rows.rows; ++t) ev.local.push_back(model.local.probabilities(tf.rows.row(t)));
  for (std::size_t c = 0; c < desc.rows; ++c) ev.global.push_back(model.global.probabilities(desc.row(c)));
  return ev;
}

inline ComponentLabeling label_from_evidence(const TriangleMesh& mesh, const std::vector<std::string>& labels,
                                             const MeshEvidence& ev, double lambda, VoteMode mode = VoteMode::Combined) {
  ComponentLabeling out;
  out.labels = labels;
  const std::vector<double> zeros(labels.size(), 0.0);
  for (std::size_t c = 0; c < mesh.components.size(); ++c) {
    const auto& comp = mesh.components[c];
    LabeledComponent lc;
    lc.component_id = comp.id;
    lc.area = comp.total_area;
    switch (mode) {
      case VoteMode::Combined:
        lc.probability = component_probability(comp, ev.face_area, ev.local, ev.global[c], lambda);
        break;
      case VoteMode::LocalOnly:
        lc.probability = component_probability(comp, ev.face_area, ev.local, zeros, 0.0);
        break;
      case VoteMode::GlobalOnly:
        lc.probability = ev.global[c];
        break;
    }
    lc.label = labels[argmax(lc.probability)];
    out.components.push_back(std::move(lc));
  }
  return out;
}

/// Labels every component by the argmax of the combined vote.
inline ComponentLabeling label_mesh(const TriangleMesh& mesh, const SegmentationModel& model, double lambda = 0.4,
                                    VoteMode mode = VoteMode::Combined, const FeatureRegistry& registry = {}) {
  return label_from_evidence(mesh, model.local.labels, gather_evidence(mesh, model, registry), lambda, mode);
}

/// Ground-truth labeling from a component id to label map.
template <typename Map>
ComponentLabeling labeling_from_map(const TriangleMesh& mesh, const std::vector<std::string>& labels, const Map& truth) {
  ComponentLabeling out;
  out.labels = labels;
  for (const auto& comp : mesh.components) {
    auto it = truth.find(comp.id);
    if (it == truth.end()) fail(ErrorCode::ComponentSetMismatch, "no label for component " + comp.id);
    LabeledComponent lc{comp.id, it->second, std::vector<double>(labels.size(), 0.0), comp.total_area};
    auto pos = std::find(labels.begin(), labels.end(), it->second);
    if (pos == labels.end()) fail(ErrorCode::InvalidArgument, "label " + it->second + " is not in the scheme");
    lc.probability[static_cast<std::size_t>(pos - labels.begin())] = 1.0;
    out.components.push_back(std::move(lc));
  }
  return out;
}

inline nlohmann::json to_json(const ComponentLabeling& l) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : l.components)
    comps.push_back({{"id", c.component_id}, {"label", c.label}, {"probability", c.probability}, {"area", c.area}});
  return {{"labels", l.labels}, {"components", comps}};
}

}  // namespace scenecolor::segmentation
