#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenecolor/core/image.hpp"
#include "scenecolor/geometry/obj_io.hpp"
#include "scenecolor/palette/colorize.hpp"
#include "scenecolor/scene/energy.hpp"

namespace scenecolor::datastore {

namespace fs = std::filesystem;
using nlohmann::json;
using palette::ColorTheme;

inline const std::array<std::string, 5> kSceneTypes = {"living room", "bedroom", "dining room", "office",
                                                       "meeting room"};

inline bool is_scene_type(const std::string& s) {
  return std::find(kSceneTypes.begin(), kSceneTypes.end(), s) != kSceneTypes.end();
}

/// Pixels of `mask` equal to `value` form the part.
struct PartRegion {
  std::string label;
  std::string material;
  std::string mask;
  std::uint16_t value = 1;
};

/// Nonzero pixels of `mask` form the object.
struct ImageObject {
  std::string category;
  std::string mask;
  std::vector<PartRegion> parts;
};

struct AnnotatedImage {
  std::string id;
  std::string scene;
  std::string image;
  std::vector<ImageObject> objects;
};

struct ObjectThemes {
  ColorTheme theme;
  std::size_t pixels = 0;
  std::vector<ColorTheme> parts;
  std::vector<std::size_t> part_pixels;
};

struct SchemeLabel {
  std::string label;
  std::string material;
  bool operator<(const SchemeLabel& o) const { return std::tie(label, material) < std::tie(o.label, o.material); }
  bool operator==(const SchemeLabel&) const = default;
};

struct SegmentationScheme {
  std::string id;
  std::string category;
  std::vector<SchemeLabel> labels;

  std::vector<std::string> label_names() const {
    std::vector<std::string> out;
    for (const auto& l : labels) out.push_back(l.label);
    return out;
  }
  const SchemeLabel* find(const std::string& label) const {
    for (const auto& l : labels)
      if (l.label == label) return &l;
    return nullptr;
  }
};

struct ModelAnnotation {
  std::string id;
  std::string category;
  std::string mesh;  // path relative to the store root
  std::string split = "train";  // train | test
  std::map<std::string, std::map<std::string, std::string>> schemes;  // scheme id -> component -> label
};

struct SceneObject {
  std::string id;
  std::string category;
  std::string model;
};

/// A furniture arrangement to be colorized.
struct FurnitureScene {
  std::string id;
  std::string scene;
  std::vector<SceneObject> objects;
};

// ---------------------------------------------------------------- JSON

inline json to_json(const AnnotatedImage& img) {
  json objects = json::array();
  for (const auto& o : img.objects) {
    json parts = json::array();
    for (const auto& p : o.parts)
      parts.push_back({{"label", p.label}, {"material", p.material}, {"mask", p.mask}, {"value", p.value}});
    objects.push_back({{"category", o.category}, {"mask", o.mask}, {"parts", parts}});
  }
  return {{"id", img.id}, {"scene", img.scene}, {"image", img.image}, {"objects", objects}};
}

inline AnnotatedImage image_from_json(const json& j) {
  AnnotatedImage img;
  try {
    img.id = j.at("id").get<std::string>();
    img.scene = j.at("scene").get<std::string>();
    img.image = j.at("image").get<std::string>();
    for (const auto& o : j.at("objects")) {
      ImageObject obj;
      obj.category = o.at("category").get<std::string>();
      obj.mask = o.at("mask").get<std::string>();
      for (const auto& p : o.at("parts"))
        obj.parts.push_back({p.at("label").get<std::string>(), p.value("material", ""), p.value("mask", obj.mask),
                             p.value("value", std::uint16_t{1})});
      img.objects.push_back(std::move(obj));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("image manifest: ") + e.what());
  }
  return img;
}

inline json to_json(const ObjectThemes& t) {
  json parts = json::array();
  for (std::size_t i = 0; i < t.parts.size(); ++i)
    parts.push_back({{"theme", palette::to_json(t.parts[i])}, {"pixels", t.part_pixels[i]}});
  return {{"theme", palette::to_json(t.theme)}, {"pixels", t.pixels}, {"parts", parts}};
}

inline ObjectThemes object_themes_from_json(const json& j) {
  ObjectThemes t;
  t.theme = palette::theme_from_json(j.at("theme"));
  t.pixels = j.at("pixels").get<std::size_t>();
  for (const auto& p : j.at("parts")) {
    t.parts.push_back(palette::theme_from_json(p.at("theme")));
    t.part_pixels.push_back(p.at("pixels").get<std::size_t>());
  }
  return t;
}

inline json to_json(const SegmentationScheme& s) {
  json labels = json::array();
  for (const auto& l : s.labels) labels.push_back({{"label", l.label}, {"material", l.material}});
  return {{"id", s.id}, {"category", s.category}, {"labels", labels}};
}

inline SegmentationScheme scheme_from_json(const json& j) {
  SegmentationScheme s{j.at("id").get<std::string>(), j.at("category").get<std::string>(), {}};
  for (const auto& l : j.at("labels")) s.labels.push_back({l.at("label").get<std::string>(), l.at("material").get<std::string>()});
  if (s.labels.empty()) fail(ErrorCode::InvalidArgument, "scheme " + s.id + " has no labels");
  std::set<std::string> seen;
  for (const auto& l : s.labels)
    if (!seen.insert(l.label).second) fail(ErrorCode::InvalidArgument, "duplicate label " + l.label + " in " + s.id);
  return s;
}

inline json to_json(const ModelAnnotation& m) {
  return {{"id", m.id}, {"category", m.category}, {"mesh", m.mesh}, {"split", m.split}, {"schemes", m.schemes}};
}

inline ModelAnnotation model_from_json(const json& j) {
  try {
    ModelAnnotation m{j.at("id").get<std::string>(), j.at("category").get<std::string>(), j.at("mesh").get<std::string>(),
                      j.value("split", std::string("train")),
                      j.value("schemes", std::map<std::string, std::map<std::string, std::string>>{})};
    if (m.split != "train" && m.split != "test") fail(ErrorCode::InvalidArgument, m.id + ": split must be train or test");
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("model manifest: ") + e.what());
  }
}

inline json to_json(const FurnitureScene& s) {
  json objects = json::array();
  for (const auto& o : s.objects) objects.push_back({{"id", o.id}, {"category", o.category}, {"model", o.model}});
  return {{"id", s.id}, {"scene", s.scene}, {"objects", objects}};
}

inline FurnitureScene scene_from_json(const json& j) {
  FurnitureScene s{j.at("id").get<std::string>(), j.at("scene").get<std::string>(), {}};
  for (const auto& o : j.at("objects"))
    s.objects.push_back({o.at("id").get<std::string>(), o.at("category").get<std::string>(), o.at("model").get<std::string>()});
  return s;
}

inline json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) fail(ErrorCode::NotFound, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, p.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail(ErrorCode::Io, "cannot write " + p.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, p);
}

// ------------------------------------------------------- co-occurrence

/// Unordered category pair -> images containing both (two instances for a
/// same-category pair).
class CoOccurrenceIndex {
 public:
  void add(const AnnotatedImage& img) {
    std::map<std::string, int> count;
    for (const auto& o : img.objects) ++count[o.category];
    for (auto a = count.begin(); a != count.end(); ++a)
      for (auto b = a; b != count.end(); ++b)
        if (a != b || a->second >= 2) pairs_[scene::pair_key(a->first, b->first)].insert(img.id);
  }

  const std::set<std::string>& images(const std::string& a, const std::string& b) const {
    static const std::set<std::string> none;
    auto it = pairs_.find(scene::pair_key(a, b));
    return it == pairs_.end() ? none : it->second;
  }

  const std::map<std::pair<std::string, std::string>, std::set<std::string>>& pairs() const { return pairs_; }
  bool operator==(const CoOccurrenceIndex&) const = default;

 private:
  std::map<std::pair<std::string, std::string>, std::set<std::string>> pairs_;
};

// ---------------------------------------------------------------- store

/// Directory-tree store:
///   manifests/schemes.json, manifests/images/*.json, manifests/models/*.json,
///   manifests/scenes/*.json, images/, masks/, models/, swatches/manifest.json,
///   cache/themes/*.json.
class Datastore {
 public:
  /// Creates the layout; `categories` is the closed category set.
  static Datastore create(const fs::path& root, const std::vector<std::string>& categories,
                          const std::vector<SegmentationScheme>& schemes) {
    fs::create_directories(root / "manifests" / "images");
    fs::create_directories(root / "manifests" / "models");
    fs::create_directories(root / "manifests" / "scenes");
    for (const auto* dir : {"images", "masks", "models", "swatches"}) fs::create_directories(root / dir);
    fs::create_directories(root / "cache" / "themes");
    json s = json::array();
    for (const auto& sc : schemes) s.push_back(to_json(sc));
    write_json(root / "manifests" / "schemes.json", {{"categories", categories}, {"schemes", s}});
    return open(root);
  }

  static Datastore open(const fs::path& root) {
    Datastore d;
    d.root_ = root;
    const auto sj = read_json(root / "manifests" / "schemes.json");
    for (const auto& c : sj.at("categories")) d.categories_.insert(c.get<std::string>());
    for (const auto& s : sj.at("schemes")) {
      auto sc = scheme_from_json(s);
      if (!d.categories_.count(sc.category)) fail(ErrorCode::UnknownCategory, "scheme " + sc.id + " has unknown category");
      d.schemes_.push_back(std::move(sc));
    }
    for (const auto& dir : {"images", "models", "scenes"}) {
      const auto p = root / "manifests" / dir;
      if (!fs::exists(p)) continue;
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p))
        if (e.path().extension() == ".json") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        const auto j = read_json(f);
        if (std::string(dir) == "images") {
          d.images_.push_back(image_from_json(j));
          d.cooccurrence_.add(d.images_.back());
        } else if (std::string(dir) == "models") {
          d.models_.push_back(model_from_json(j));
        } else {
          d.scenes_.push_back(scene_from_json(j));
        }
      }
    }
    const auto sw = root / "swatches" / "manifest.json";
    if (fs::exists(sw)) d.swatches_ = palette::load_swatch_index(sw);
    return d;
  }

  const fs::path& root() const { return root_; }
  const std::set<std::string>& categories() const { return categories_; }
  const std::vector<SegmentationScheme>& schemes() const { return schemes_; }
  const std::vector<AnnotatedImage>& images() const { return images_; }
  const std::vector<ModelAnnotation>& models() const { return models_; }
  const std::vector<FurnitureScene>& scenes() const { return scenes_; }
  const palette::SwatchIndex& swatches() const { return swatches_; }
  const CoOccurrenceIndex& cooccurrence() const { return cooccurrence_; }

  void require_category(const std::string& c) const {
    if (!categories_.count(c)) fail(ErrorCode::UnknownCategory, "unknown furniture category " + c);
  }

  const SegmentationScheme& scheme(const std::string& id) const {
    for (const auto& s : schemes_)
      if (s.id == id) return s;
    fail(ErrorCode::NotFound, "no segmentation scheme " + id);
  }

  std::vector<const SegmentationScheme*> schemes_for(const std::string& category) const {
    require_category(category);
    std::vector<const SegmentationScheme*> out;
    for (const auto& s : schemes_)
      if (s.category == category) out.push_back(&s);
    return out;
  }

  const AnnotatedImage& image(const std::string& id) const {
    for (const auto& i : images_)
      if (i.id == id) return i;
    fail(ErrorCode::NotFound, "no image " + id);
  }

  const ModelAnnotation& model(const std::string& id) const {
    for (const auto& m : models_)
      if (m.id == id) return m;
    fail(ErrorCode::NotFound, "no model " + id);
  }

  const FurnitureScene& scene(const std::string& id) const {
    for (const auto& s : scenes_)
      if (s.id == id) return s;
    fail(ErrorCode::NotFound, "no scene " + id);
  }

  geometry::TriangleMesh load_mesh(const std::string& model_id) const {
    const auto& m = model(model_id);
    return geometry::load_obj(root_ / m.mesh, m.category);
  }

  /// Validates, computes and caches themes, persists the manifest.
  AnnotatedImage ingest_image(const json& entry) {
    auto img = image_from_json(entry);
    if (img.id.empty() || img.id.find('/') != std::string::npos)
      fail(ErrorCode::InvalidArgument, "image id must be non-empty and contain no '/'");
    if (!is_scene_type(img.scene)) fail(ErrorCode::UnknownScene, "unknown scene label '" + img.scene + "'");
    for (const auto& o : img.objects) {
      require_category(o.category);
      if (o.parts.empty()) fail(ErrorCode::InvalidArgument, img.id + ": object without parts");
      for (const auto& p : o.parts)
        if (p.material.empty()) fail(ErrorCode::InvalidArgument, img.id + ": part " + p.label + " has no material");
    }
    const auto themes = compute_themes(img);
    write_json(root_ / "manifests" / "images" / (img.id + ".json"), to_json(img));
    json cache = json::array();
    for (const auto& t : themes) cache.push_back(to_json(t));
    write_json(cache_path(img.id), {{"image", img.id}, {"objects", cache}});
    theme_cache_[img.id] = themes;
    auto existing = std::find_if(images_.begin(), images_.end(), [&](const auto& i) { return i.id == img.id; });
    if (existing != images_.end()) {
      *existing = img;
      cooccurrence_ = rebuild_cooccurrence();
    } else {
      images_.push_back(img);
      cooccurrence_.add(img);
    }
    return img;
  }

  /// Every scheme map must cover all components with labels from the scheme.
  ModelAnnotation ingest_model(const json& entry) {
    auto m = model_from_json(entry);
    require_category(m.category);
    const auto mesh = geometry::load_obj(root_ / m.mesh, m.category);
    for (const auto& [scheme_id, map] : m.schemes) {
      const auto& sc = scheme(scheme_id);
      if (sc.category != m.category) fail(ErrorCode::CategoryMismatch, "scheme " + scheme_id + " is for " + sc.category);
      for (const auto& c : mesh.components) {
        auto it = map.find(c.id);
        if (it == map.end()) fail(ErrorCode::ComponentSetMismatch, m.id + ": component " + c.id + " unlabeled in " + scheme_id);
        if (!sc.find(it->second)) fail(ErrorCode::InvalidArgument, m.id + ": label " + it->second + " not in " + scheme_id);
      }
      if (map.size() != mesh.components.size())
        fail(ErrorCode::ComponentSetMismatch, m.id + ": labels for components that do not exist");
    }
    write_json(root_ / "manifests" / "models" / (m.id + ".json"), to_json(m));
    auto existing = std::find_if(models_.begin(), models_.end(), [&](const auto& x) { return x.id == m.id; });
    if (existing != models_.end())
      *existing = m;
    else
      models_.push_back(m);
    return m;
  }

  FurnitureScene ingest_scene(const json& entry) {
    auto s = scene_from_json(entry);
    if (!is_scene_type(s.scene)) fail(ErrorCode::UnknownScene, "unknown scene label '" + s.scene + "'");
    for (const auto& o : s.objects) {
      require_category(o.category);
      if (model(o.model).category != o.category) fail(ErrorCode::CategoryMismatch, o.id + ": model category differs");
    }
    write_json(root_ / "manifests" / "scenes" / (s.id + ".json"), to_json(s));
    scenes_.push_back(s);
    return s;
  }

  void save_swatches(const palette::SwatchIndex& index) {
    write_json(root_ / "swatches" / "manifest.json", palette::to_json(index));
    swatches_ = index;
  }

  /// Cached themes for one image, computed on first use if missing.
  const std::vector<ObjectThemes>& themes(const std::string& image_id) const {
    auto it = theme_cache_.find(image_id);
    if (it != theme_cache_.end()) return it->second;
    std::vector<ObjectThemes> t;
    if (fs::exists(cache_path(image_id))) {
      const auto cache = read_json(cache_path(image_id));
      for (const auto& o : cache.at("objects")) t.push_back(object_themes_from_json(o));
    } else {
      t = compute_themes(image(image_id));
    }
    return theme_cache_.emplace(image_id, std::move(t)).first->second;
  }

  /// Recomputes themes from the stored pixels and masks.
  std::vector<ObjectThemes> compute_themes(const AnnotatedImage& img,
                                           const palette::KMeansOptions& km = {}) const {
    const auto rgb = read_rgb_png(root_ / img.image);
    std::map<std::string, LabelImage> masks;
    auto mask = [&](const std::string& rel) -> const LabelImage& {
      auto it = masks.find(rel);
      if (it != masks.end()) return it->second;
      auto m = read_label_png(root_ / rel);
      if (m.width != rgb.width || m.height != rgb.height)
        fail(ErrorCode::MaskOutOfBounds, img.id + ": mask " + rel + " does not match image size");
      return masks.emplace(rel, std::move(m)).first->second;
    };
    std::vector<ObjectThemes> out;
    for (std::size_t oi = 0; oi < img.objects.size(); ++oi) {
      const auto& o = img.objects[oi];
      const auto& om = mask(o.mask);
      std::vector<int> owner(rgb.width * rgb.height, -1);
      ObjectThemes t;
      std::vector<palette::Rgb8> all;
      for (std::size_t i = 0; i < om.data.size(); ++i)
        if (om.data[i] != 0) all.push_back({rgb.data[3 * i], rgb.data[3 * i + 1], rgb.data[3 * i + 2]});
      for (std::size_t pi = 0; pi < o.parts.size(); ++pi) {
        const auto& p = o.parts[pi];
        const auto& pm = mask(p.mask);
        std::vector<palette::Rgb8> px;
        for (std::size_t i = 0; i < pm.data.size(); ++i) {
          if (pm.data[i] != p.value) continue;
          if (om.data[i] == 0)
            fail(ErrorCode::MaskOutOfBounds, img.id + ": part " + p.label + " extends outside its object region");
          if (owner[i] >= 0)
            fail(ErrorCode::OverlappingParts, img.id + ": parts " + o.parts[static_cast<std::size_t>(owner[i])].label +
                                                  " and " + p.label + " overlap");
          owner[i] = static_cast<int>(pi);
          px.push_back({rgb.data[3 * i], rgb.data[3 * i + 1], rgb.data[3 * i + 2]});
        }
        if (px.empty()) fail(ErrorCode::MaskOutOfBounds, img.id + ": part " + p.label + " has no pixels");
        t.parts.push_back(extract_or_fail(px, km, img.id + "/" + std::to_string(oi) + "/" + p.label));
        t.part_pixels.push_back(px.size());
      }
      t.theme = extract_or_fail(all, km, img.id + "/" + std::to_string(oi));
      t.pixels = all.size();
      out.push_back(std::move(t));
    }
    return out;
  }

  /// Whole-object themes of every instance of the category.
  std::vector<ColorTheme> training_themes(const std::string& category,
                                          const std::optional<std::string>& scene_type = std::nullopt) const {
    require_category(category);
    std::vector<ColorTheme> out;
    for (const auto& img : images_) {
      if (scene_type && img.scene != *scene_type) continue;
      const auto& t = themes(img.id);
      for (std::size_t o = 0; o < img.objects.size(); ++o)
        if (img.objects[o].category == category) out.push_back(t[o].theme);
    }
    return out;
  }

  /// One pair per image containing both, from the first instance of each
  /// category, in canonical category order. A same-category pair uses the
  /// first two instances and contributes both orders.
  std::vector<std::pair<ColorTheme, ColorTheme>> training_pairs(
      const std::string& a, const std::string& b, const std::optional<std::string>& scene_type = std::nullopt) const {
    require_category(a);
    require_category(b);
    const auto [first, second] = scene::pair_key(a, b);
    std::vector<std::pair<ColorTheme, ColorTheme>> out;
    for (const auto& img : images_) {
      if (scene_type && img.scene != *scene_type) continue;
      std::vector<std::size_t> fi, si;
      for (std::size_t o = 0; o < img.objects.size(); ++o) {
        if (img.objects[o].category == first) fi.push_back(o);
        if (img.objects[o].category == second) si.push_back(o);
      }
      const auto& t = themes(img.id);
      if (first == second) {
        if (fi.size() >= 2) {
          out.emplace_back(t[fi[0]].theme, t[fi[1]].theme);
          out.emplace_back(t[fi[1]].theme, t[fi[0]].theme);
        }
      } else if (!fi.empty() && !si.empty()) {
        out.emplace_back(t[fi[0]].theme, t[si[0]].theme);
      }
    }
    return out;
  }

  CoOccurrenceIndex rebuild_cooccurrence() const {
    CoOccurrenceIndex idx;
    for (const auto& img : images_) idx.add(img);
    return idx;
  }

  /// Guide built from one annotated object: "<image id>/<object index>".
  palette::GuideObject guide_object(const std::string& image_id, std::size_t object) const {
    const auto& img = image(image_id);
    if (object >= img.objects.size()) fail(ErrorCode::NotFound, image_id + " has no object " + std::to_string(object));
    const auto& o = img.objects[object];
    const auto& t = themes(image_id)[object];
    palette::GuideObject g;
    g.id = image_id + "/" + std::to_string(object);
    g.category = o.category;
    g.theme = t.theme;
    for (std::size_t p = 0; p < o.parts.size(); ++p) g.parts.push_back({o.parts[p].label, o.parts[p].material, t.parts[p]});
    if (auto s = match_scheme(o.category, g)) g.scheme = s->id;
    return g;
  }

  palette::GuideObject guide_object(const std::string& guide_id) const {
    const auto slash = guide_id.rfind('/');
    if (slash == std::string::npos) fail(ErrorCode::InvalidArgument, "guide id must be <image>/<object>");
    return guide_object(guide_id.substr(0, slash), std::stoul(guide_id.substr(slash + 1)));
  }

  /// Stored scheme whose (label, material) multiset equals the guide's parts.
  /// A single-part guide matches the trivial one-label scheme.
  std::optional<SegmentationScheme> match_scheme(const std::string& category, const palette::GuideObject& guide) const {
    std::vector<SchemeLabel> want;
    for (const auto& p : guide.parts) want.push_back({p.label, p.material});
    std::sort(want.begin(), want.end());
    for (const auto* s : schemes_for(category)) {
      auto have = s->labels;
      std::sort(have.begin(), have.end());
      if (have == want) return *s;
    }
    if (want.size() == 1) return SegmentationScheme{category + ".single", category, want};
    return std::nullopt;
  }

  /// Every annotated object of the category as an MRF state; quality is
  /// the object's pixel count.
  std::vector<scene::Candidate> candidates(const std::string& category,
                                           const std::optional<std::string>& scene_type = std::nullopt) const {
    require_category(category);
    std::vector<scene::Candidate> out;
    for (const auto& img : images_) {
      if (scene_type && img.scene != *scene_type) continue;
      const auto& t = themes(img.id);
      for (std::size_t o = 0; o < img.objects.size(); ++o)
        if (img.objects[o].category == category)
          out.push_back({img.id + "/" + std::to_string(o), t[o].theme, static_cast<double>(t[o].pixels)});
    }
    return out;
  }

  /// Category and pair theme models; restricted to one scene type when that
  /// type has images, else fitted over the whole store.
  scene::ThemeModels fit_theme_models(const std::optional<std::string>& scene_type = std::nullopt,
                                      std::vector<std::string>* warnings = nullptr,
                                      const scene::ThemeModelOptions& opt = {}) const {
    std::optional<std::string> filter = scene_type;
    if (filter && std::none_of(images_.begin(), images_.end(), [&](const auto& i) { return i.scene == *filter; }))
      filter.reset();
    scene::ThemeModels m;
    for (const auto& c : categories_) {
      const auto themes = training_themes(c, filter);
      if (!themes.empty()) m.categories.emplace(c, scene::fit_category_model(c, themes, opt, warnings));
    }
    for (const auto& [key, imgs] : cooccurrence_.pairs()) {
      const auto pairs = training_pairs(key.first, key.second, filter);
      if (!pairs.empty()) m.pairs.emplace(key, scene::fit_pair_model(key.first, key.second, pairs, opt, warnings));
    }
    return m;
  }

 private:
  fs::path cache_path(const std::string& image_id) const { return root_ / "cache" / "themes" / (image_id + ".json"); }

  static ColorTheme extract_or_fail(const std::vector<palette::Rgb8>& px, const palette::KMeansOptions& km,
                                    const std::string& where) {
    try {
      return palette::extract_theme(px, km);
    } catch (const Error& e) {
      fail(e.code(), where + ": " + e.what());
    }
  }

  fs::path root_;
  std::set<std::string> categories_;
  std::vector<SegmentationScheme> schemes_;
  std::vector<AnnotatedImage> images_;
  std::vector<ModelAnnotation> models_;
  std::vector<FurnitureScene> scenes_;
  palette::SwatchIndex swatches_;
  CoOccurrenceIndex cooccurrence_;
  mutable std::map<std::string, std::vector<ObjectThemes>> theme_cache_;
};

}  // namespace scenecolor::datastore
