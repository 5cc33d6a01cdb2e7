#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "scenecolor/palette/theme.hpp"

namespace scenecolor::palette {

struct TextureSwatch {
  std::string id;
  std::string material;
  std::string image;  // path relative to the swatch directory
  ColorTheme theme;
};

/// Immutable catalog grouped by material category.
class SwatchIndex {
 public:
  SwatchIndex() = default;
  explicit SwatchIndex(std::vector<TextureSwatch> swatches) : swatches_(std::move(swatches)) { reindex(); }

  const std::vector<TextureSwatch>& swatches() const { return swatches_; }
  bool has_material(const std::string& m) const { return by_material_.count(m) != 0; }

  std::vector<std::string> materials() const {
    std::vector<std::string> out;
    for (const auto& [m, _] : by_material_) out.push_back(m);
    return out;
  }

  const std::vector<std::size_t>& of_material(const std::string& m) const {
    static const std::vector<std::size_t> none;
    auto it = by_material_.find(m);
    return it == by_material_.end() ? none : it->second;
  }

  const TextureSwatch* find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &swatches_[it->second];
  }

  /// Declares a material with no swatches yet, so lookups report it empty.
  void declare_material(const std::string& m) { by_material_[m]; }

 private:
  void reindex() {
    for (std::size_t i = 0; i < swatches_.size(); ++i) {
      if (!by_id_.emplace(swatches_[i].id, i).second)
        fail(ErrorCode::InvalidArgument, "duplicate swatch id " + swatches_[i].id);
      by_material_[swatches_[i].material].push_back(i);
    }
  }

  std::vector<TextureSwatch> swatches_;
  std::map<std::string, std::vector<std::size_t>> by_material_;
  std::map<std::string, std::size_t> by_id_;
};

inline nlohmann::json to_json(const TextureSwatch& s) {
  return {{"id", s.id}, {"material", s.material}, {"image", s.image}, {"theme", to_json(s.theme)}};
}

/// Manifest: {"materials": [...], "swatches": [{id, material, image, theme}]}.
inline SwatchIndex swatch_index_from_json(const nlohmann::json& j) {
  std::vector<TextureSwatch> list;
  for (const auto& e : j.at("swatches"))
    list.push_back({e.at("id").get<std::string>(), e.at("material").get<std::string>(), e.value("image", ""),
                    theme_from_json(e.at("theme"))});
  SwatchIndex index(std::move(list));
  for (const auto& m : j.value("materials", std::vector<std::string>{})) index.declare_material(m);
  return index;
}

inline nlohmann::json to_json(const SwatchIndex& index) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& s : index.swatches()) list.push_back(to_json(s));
  return {{"materials", index.materials()}, {"swatches", list}};
}

inline SwatchIndex load_swatch_index(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) fail(ErrorCode::Io, "cannot open swatch manifest " + manifest.string());
  try {
    return swatch_index_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, "swatch manifest " + manifest.string() + ": " + e.what());
  }
}

struct RankedSwatch {
  const TextureSwatch* swatch = nullptr;
  double distance = 0.0;
};

/// Swatches of one material by ascending theme distance from the query;
/// ties broken by swatch id. At most m entries.
inline std::vector<RankedSwatch> retrieve_textures(const SwatchIndex& index, const ColorTheme& query,
                                                   const std::string& material, std::size_t m = 10) {
  if (m < 1) fail(ErrorCode::InvalidArgument, "retrieval count must be at least 1");
  if (!index.has_material(material)) fail(ErrorCode::UnknownMaterial, "unknown material " + material);
  const auto& members = index.of_material(material);
  if (members.empty()) fail(ErrorCode::EmptyCategory, "material " + material + " has no swatches");
  std::vector<RankedSwatch> ranked;
  for (std::size_t i : members)
    ranked.push_back({&index.swatches()[i], theme_distance(query, index.swatches()[i].theme)});
  std::sort(ranked.begin(), ranked.end(), [](const RankedSwatch& a, const RankedSwatch& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.swatch->id < b.swatch->id;
  });
  if (ranked.size() > m) ranked.resize(m);
  return ranked;
}

enum class SelectionPolicy { RankOne, RandomTopM };

inline const RankedSwatch& select_swatch(const std::vector<RankedSwatch>& ranked, SelectionPolicy policy, Rng& rng) {
  if (policy == SelectionPolicy::RankOne) return ranked.front();
  return ranked[rng.index(ranked.size())];
}

}  // namespace scenecolor::palette
