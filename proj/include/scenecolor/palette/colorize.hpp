#pragma once

#include <set>
#include <string>
#include <vector>

#include "scenecolor/geometry/mesh.hpp"
#include "scenecolor/palette/swatch.hpp"
#include "scenecolor/segmentation/labeling.hpp"

namespace scenecolor::palette {

/// One labeled part region of an annotated image object.
struct GuidePart {
  std::string label;
  std::string material;
  ColorTheme theme;
};

/// Annotated image object used as a colorization guide.
struct GuideObject {
  std::string id;  // "<image id>/<object index>"
  std::string category;
  std::string scheme;
  ColorTheme theme;  // whole-object theme
  std::vector<GuidePart> parts;
};

struct PartAssignment {
  std::string label;
  std::string material;
  std::string swatch_id;
  double distance = 0.0;
  ColorTheme part_theme;
  std::vector<std::string> components;
};

/// Texture assignment for one furniture object.
struct ObjectColorization {
  std::string object_id;
  std::string guide_id;
  std::vector<PartAssignment> parts;

  const PartAssignment* part_of_component(const std::string& component) const {
    for (const auto& p : parts)
      if (std::find(p.components.begin(), p.components.end(), component) != p.components.end()) return &p;
    return nullptr;
  }
};

struct ColorizeOptions {
  std::size_t m = 10;
  SelectionPolicy policy = SelectionPolicy::RankOne;
  std::uint64_t seed = 1;
};

/// Assigns one swatch per part label and covers every component.
/// A single-part guide needs no labeling: its texture covers the whole mesh.
inline ObjectColorization colorize_object(const geometry::TriangleMesh& mesh,
                                          const segmentation::ComponentLabeling* labeling, const GuideObject& guide,
                                          const SwatchIndex& index, const ColorizeOptions& opt = {}) {
  if (guide.parts.empty()) fail(ErrorCode::InvalidArgument, "guide object " + guide.id + " has no parts");
  Rng rng(opt.seed);
  ObjectColorization out;
  out.guide_id = guide.id;
  auto assign = [&](const GuidePart& part, std::vector<std::string> components) {
    const auto ranked = retrieve_textures(index, part.theme, part.material, opt.m);
    const auto& pick = select_swatch(ranked, opt.policy, rng);
    out.parts.push_back({part.label, part.material, pick.swatch->id, pick.distance, part.theme, std::move(components)});
  };

  if (guide.parts.size() == 1) {
    std::vector<std::string> all;
    for (const auto& c : mesh.components) all.push_back(c.id);
    assign(guide.parts.front(), std::move(all));
    return out;
  }
  if (!labeling) fail(ErrorCode::SchemeMismatch, "multi-part guide requires a segmentation of the mesh");

  std::set<std::string> guide_labels, mesh_labels(labeling->labels.begin(), labeling->labels.end());
  for (const auto& p : guide.parts) guide_labels.insert(p.label);
  if (guide_labels != mesh_labels)
    fail(ErrorCode::SchemeMismatch, "guide parts and mesh labeling use different label sets",
         {{"guide", std::vector<std::string>(guide_labels.begin(), guide_labels.end())},
          {"labeling", std::vector<std::string>(mesh_labels.begin(), mesh_labels.end())}});
  for (const auto& c : mesh.components)
    if (!labeling->find(c.id)) fail(ErrorCode::ComponentSetMismatch, "component " + c.id + " has no label");

  for (const auto& part : guide.parts) {
    std::vector<std::string> comps;
    for (const auto& c : labeling->components)
      if (c.label == part.label) comps.push_back(c.component_id);
    assign(part, std::move(comps));
  }
  return out;
}

inline nlohmann::json to_json(const ObjectColorization& o) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : o.parts)
    parts.push_back({{"label", p.label},
                     {"material", p.material},
                     {"swatch", p.swatch_id},
                     {"distance", p.distance},
                     {"part_theme", to_json(p.part_theme)},
                     {"components", p.components}});
  return {{"object", o.object_id}, {"guide", o.guide_id}, {"parts", parts}};
}

inline ObjectColorization object_colorization_from_json(const nlohmann::json& j) {
  ObjectColorization o;
  o.object_id = j.value("object", "");
  o.guide_id = j.value("guide", "");
  for (const auto& p : j.at("parts"))
    o.parts.push_back({p.at("label").get<std::string>(), p.at("material").get<std::string>(),
                       p.at("swatch").get<std::string>(), p.value("distance", 0.0), theme_from_json(p.at("part_theme")),
                       p.at("components").get<std::vector<std::string>>()});
  return o;
}

}  // namespace scenecolor::palette
