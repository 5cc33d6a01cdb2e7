#pragma once

#include <map>
#include <string>
#include <vector>

#include "scenecolor/segmentation/labeling.hpp"

namespace scenecolor::segmentation {

/// Per-triangle classifier; rows weighted by triangle area share.
inline JointBoostModel train_local(const FeatureMatrix& features, std::span<const std::size_t> labels,
                                   std::span<const double> triangle_area, std::vector<std::string> label_names,
                                   std::string fingerprint, std::size_t rounds = 200) {
  JointBoostOptions opt;
  opt.rounds = rounds;
  return train_jointboost(features, labels, triangle_area, std::move(label_names), std::move(fingerprint), opt);
}

/// Per-component classifier; rows weighted by component area share.
inline JointBoostModel train_global(const FeatureMatrix& descriptors, std::span<const std::size_t> labels,
                                    std::span<const double> component_area, std::vector<std::string> label_names,
                                    std::size_t rounds = 200) {
  JointBoostOptions opt;
  opt.rounds = rounds;
  return train_jointboost(descriptors, labels, component_area, std::move(label_names),
                          geometry::descriptor_fingerprint(), opt);
}

/// Mesh with a ground-truth component label map under one scheme.
struct LabeledMesh {
  std::string id;
  TriangleMesh mesh;
  std::map<std::string, std::string> truth;
};

struct TrainingOptions {
  std::size_t local_rounds = 200;
  std::size_t global_rounds = 200;
  FeatureRegistry registry;
};

/// Trains the classifier pair for one scheme. Each mesh contributes equal
/// total weight; within a mesh rows are weighted by area share.
inline SegmentationModel train_segmentation(const std::vector<LabeledMesh>& meshes,
                                            const std::vector<std::string>& label_names,
                                            const TrainingOptions& opt = {}) {
  if (meshes.empty()) fail(ErrorCode::InsufficientData, "no labeled meshes to train on");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < label_names.size(); ++i) index[label_names[i]] = i;
  auto label_of = [&](const LabeledMesh& lm, const std::string& comp) {
    auto it = lm.truth.find(comp);
    if (it == lm.truth.end()) fail(ErrorCode::ComponentSetMismatch, lm.id + ": no label for component " + comp);
    auto li = index.find(it->second);
    if (li == index.end()) fail(ErrorCode::InvalidArgument, lm.id + ": label " + it->second + " not in scheme");
    return li->second;
  };

  FeatureMatrix local, global;
  std::vector<std::size_t> local_y, global_y;
  std::vector<double> local_w, global_w;
  std::string fingerprint;
  for (const auto& lm : meshes) {
    const auto tf = geometry::triangle_features(lm.mesh, opt.registry);
    fingerprint = tf.fingerprint;
    const auto desc = geometry::component_descriptors(lm.mesh, tf.signals);
    const double area = lm.mesh.total_area();
    local.cols = tf.rows.cols;
    global.cols = desc.cols;
    for (std::size_t c = 0; c < lm.mesh.components.size(); ++c) {
      const auto& comp = lm.mesh.components[c];
      const std::size_t y = label_of(lm, comp.id);
      for (std::size_t t : comp.triangle_ids) {
        local.data.insert(local.data.end(), tf.rows.row(t).begin(), tf.rows.row(t).end());
        ++local.rows;
        local_y.push_back(y);
        local_w.push_back(tf.signals.face_area[t] / area);
      }
      global.data.insert(global.data.end(), desc.row(c).begin(), desc.row(c).end());
      ++global.rows;
      global_y.push_back(y);
      global_w.push_back(comp.total_area / area);
    }
  }

  if (label_names.size() == 1)
    return {constant_model(label_names.front(), local.cols, fingerprint),
            constant_model(label_names.front(), global.cols, geometry::descriptor_fingerprint())};
  SegmentationModel model;
  model.local = train_local(local, local_y, local_w, label_names, fingerprint, opt.local_rounds);
  model.global = train_global(global, global_y, global_w, label_names, opt.global_rounds);
  return model;
}

inline nlohmann::json to_json(const SegmentationModel& m) {
  return {{"local", to_json(m.local)}, {"global", to_json(m.global)}};
}

inline SegmentationModel segmentation_model_from_json(const nlohmann::json& j) {
  return {jointboost_from_json(j.at("local")), jointboost_from_json(j.at("global"))};
}

}  // namespace scenecolor::segmentation
