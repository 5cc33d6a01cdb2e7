#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "scenecolor/fixture/furniture.hpp"

namespace scenecolor::fixture {

namespace fs = std::filesystem;
using nlohmann::json;

struct CorpusOptions {
  std::uint64_t seed = 2024;
  std::size_t train_per_category = 6;
  std::size_t test_per_category = 4;
  std::size_t swatches_per_material = 10;
  double test_widen = 0.5;  // held-out shape ranges grow by this fraction
};

inline const std::vector<std::string> kMaterials = {"fabric", "leather", "metal", "wood"};

/// Coordinated material colors; every image draws its objects from one style.
struct Style {
  std::array<std::uint8_t, 3> fabric, leather, metal, wood;

  const std::array<std::uint8_t, 3>& of(const std::string& material) const {
    if (material == "fabric") return fabric;
    if (material == "leather") return leather;
    if (material == "metal") return metal;
    return wood;
  }
};

inline const std::vector<Style>& styles() {
  static const std::vector<Style> s = {
      {{225, 215, 190}, {120, 70, 40}, {60, 60, 60}, {170, 120, 70}},
      {{40, 120, 130}, {60, 40, 30}, {190, 190, 195}, {95, 60, 35}},
      {{130, 130, 135}, {200, 200, 200}, {30, 30, 30}, {235, 235, 230}},
      {{190, 40, 45}, {90, 20, 20}, {200, 170, 90}, {140, 50, 35}},
      {{50, 70, 150}, {30, 40, 70}, {150, 150, 160}, {200, 180, 150}},
  };
  return s;
}

namespace detail {

inline std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

struct PlacedObject {
  std::string category;
  std::size_t scheme;  // index into the category's schemes
};

constexpr std::size_t kCell = 40, kCols = 4, kRows = 3;

/// Draws objects into grid cells. Each part is a horizontal band with a
/// main tone and a darker grain tone.
inline json render_image(const fs::path& root, const std::string& id, const std::string& scene,
                         const std::vector<PlacedObject>& objects, const Style& style, Rng& rng) {
  if (objects.size() > kCols * kRows) fail(ErrorCode::InvalidArgument, "too many objects for one fixture image");
  RgbImage img(kCell * kCols, kCell * kRows);
  for (auto& v : img.data) v = clamp8(236 + 3 * rng.normal());
  json objs = json::array();
  for (std::size_t o = 0; o < objects.size(); ++o) {
    const auto& def = category(objects[o].category).schemes[objects[o].scheme].scheme;
    const std::size_t x0 = (o % kCols) * kCell + 3, y0 = (o / kCols) * kCell + 3, side = kCell - 6;
    LabelImage mask(img.width, img.height);
    const std::string mask_path = "masks/" + id + "_" + std::to_string(o) + ".png";
    json parts = json::array();
    const std::size_t k = def.labels.size();
    for (std::size_t p = 0; p < k; ++p) {
      const auto& base = style.of(def.labels[p].material);
      std::array<double, 3> tone{};
      for (std::size_t c = 0; c < 3; ++c) tone[c] = base[c] + 10.0 * rng.normal();
      const std::size_t ya = y0 + side * p / k, yb = y0 + side * (p + 1) / k;
      for (std::size_t y = ya; y < yb; ++y)
        for (std::size_t x = x0; x < x0 + side; ++x) {
          mask.at(x, y) = static_cast<std::uint16_t>(p + 1);
          const double shade = (x + 2 * y) % 7 < 2 ? 0.78 : 1.0;
          for (std::size_t c = 0; c < 3; ++c) img.at(x, y)[c] = clamp8(tone[c] * shade + 3.0 * rng.normal());
        }
      parts.push_back(
          {{"label", def.labels[p].label}, {"material", def.labels[p].material}, {"mask", mask_path}, {"value", p + 1}});
    }
    write_label_png(root / mask_path, mask);
    objs.push_back({{"category", objects[o].category}, {"mask", mask_path}, {"parts", parts}});
  }
  write_rgb_png(root / "images" / (id + ".png"), img);
  return {{"id", id}, {"scene", scene}, {"image", "images/" + id + ".png"}, {"objects", objs}};
}

inline std::size_t pick_scheme(const std::string& cat, Rng& rng) {
  const std::size_t n = category(cat).schemes.size();
  if (n == 1 || rng.uniform() < 0.6) return 0;
  return 1 + rng.index(n - 1);
}

}  // namespace detail

inline std::string model_id(const std::string& category, const std::string& split, std::size_t i) {
  return category + "-" + split + "-" + std::to_string(i);
}

/// The extra held-out chair that follows the random test chairs.
inline std::string padded_chair_id(const CorpusOptions& opt = {}) {
  return model_id("chair", "test", opt.test_per_category);
}

/// Writes a complete store: procedural models with per-scheme labels,
/// a swatch catalog, annotated scene images and furniture scenes.
inline datastore::Datastore generate_corpus(const fs::path& root, const CorpusOptions& opt = {}) {
  std::vector<std::string> names;
  std::vector<SegmentationScheme> schemes;
  for (const auto& c : categories()) {
    names.push_back(c.name);
    for (const auto& s : c.schemes) schemes.push_back(s.scheme);
  }
  auto store = datastore::Datastore::create(root, names, schemes);

  // Models.
  for (std::size_t ci = 0; ci < categories().size(); ++ci) {
    const auto& cat = categories()[ci];
    for (const auto& [split, count, offset] :
         {std::tuple{"train", opt.train_per_category, 0}, std::tuple{"test", opt.test_per_category, 500}}) {
      for (std::size_t i = 0; i < count; ++i) {
        Rng rng(mix_seed(opt.seed, 1000 * (ci + 1) + static_cast<std::size_t>(offset) + i));
        Sampler u{rng, std::string(split) == "test" ? opt.test_widen : 0.0};
        const auto model = cat.generate(u);
        const auto id = model_id(cat.name, split, i);
        geometry::save_obj(root / "models" / (id + ".obj"), model.mesh);
        json schemes_json = json::object();
        for (const auto& s : cat.schemes) schemes_json[s.scheme.id] = labels_under(model, s);
        store.ingest_model(
            {{"id", id}, {"category", cat.name}, {"mesh", "models/" + id + ".obj"}, {"split", split}, {"schemes", schemes_json}});
      }
    }
  }
  {
    const auto& cat = category("chair");
    const auto model = make_padded_chair();
    const auto id = padded_chair_id(opt);
    geometry::save_obj(root / "models" / (id + ".obj"), model.mesh);
    json schemes_json = json::object();
    for (const auto& s : cat.schemes) schemes_json[s.scheme.id] = labels_under(model, s);
    store.ingest_model(
        {{"id", id}, {"category", "chair"}, {"mesh", "models/" + id + ".obj"}, {"split", "test"}, {"schemes", schemes_json}});
  }

  // Swatches: the style colors of each material plus random variations.
  {
    Rng rng(mix_seed(opt.seed, 7));
    std::vector<palette::TextureSwatch> swatches;
    for (std::size_t mi = 0; mi < kMaterials.size(); ++mi) {
      const auto& material = kMaterials[mi];
      for (std::size_t s = 0; s < opt.swatches_per_material; ++s) {
        std::array<double, 3> base{};
        if (s < styles().size()) {
          for (std::size_t c = 0; c < 3; ++c) base[c] = styles()[s].of(material)[c];
        } else {
          for (auto& v : base) v = rng.uniform(20.0, 235.0);
        }
        RgbImage tex(24, 24);
        std::vector<palette::Rgb8> px;
        for (std::size_t y = 0; y < tex.height; ++y)
          for (std::size_t x = 0; x < tex.width; ++x) {
            const double grain = material == "wood" ? 0.85 + 0.15 * std::sin(0.9 * x + 0.2 * y) : 1.0;
            const double weave = material == "fabric" && (x + y) % 3 == 0 ? 0.88 : 1.0;
            for (std::size_t c = 0; c < 3; ++c) tex.at(x, y)[c] = detail::clamp8(base[c] * grain * weave + 4.0 * rng.normal());
            px.push_back({tex.at(x, y)[0], tex.at(x, y)[1], tex.at(x, y)[2]});
          }
        char id[32];
        std::snprintf(id, sizeof id, "%s-%02zu", material.c_str(), s);
        write_rgb_png(root / "swatches" / (std::string(id) + ".png"), tex);
        swatches.push_back({id, material, std::string(id) + ".png", palette::extract_theme(px)});
      }
    }
    store.save_swatches(palette::SwatchIndex(std::move(swatches)));
  }

  // Images.
  {
    Rng rng(mix_seed(opt.seed, 11));
    std::size_t next = 0;
    auto emit = [&](const std::string& scene, std::vector<std::string> cats) {
      std::vector<detail::PlacedObject> objs;
      for (const auto& c : cats) objs.push_back({c, detail::pick_scheme(c, rng)});
      char id[16];
      std::snprintf(id, sizeof id, "img%03zu", next++);
      const auto& style = styles()[rng.index(styles().size())];
      store.ingest_image(detail::render_image(root, id, scene, objs, style, rng));
    };
    for (int i = 0; i < 14; ++i) {
      std::vector<std::string> cats = {"table"};
      const std::size_t chairs = 2 + rng.index(3);
      cats.insert(cats.end(), chairs, "chair");
      if (i < 4 || rng.uniform() < 0.6) cats.push_back("cabinet");
      const std::size_t lamps = i < 4 ? 2 : rng.index(3);
      cats.insert(cats.end(), lamps, "lamp");
      emit("dining room", cats);
    }
    for (int i = 0; i < 6; ++i) {
      std::vector<std::string> cats = {"sofa", "table", "lamp"};
      if (rng.uniform() < 0.5) cats.push_back("chair");
      if (rng.uniform() < 0.3) cats.push_back("cabinet");
      emit("living room", cats);
    }
    for (int i = 0; i < 6; ++i) {
      std::vector<std::string> cats = {"bed", "lamp"};
      if (rng.uniform() < 0.7) cats.push_back("cabinet");
      if (rng.uniform() < 0.5) cats.push_back("lamp");
      emit("bedroom", cats);
    }
    for (int i = 0; i < 2; ++i) emit("office", {"table", "chair", "lamp", "cabinet"});
    for (int i = 0; i < 2; ++i) emit("meeting room", {"table", "chair", "chair", "chair"});
  }

  // Scenes built from held-out models.
  auto object = [](const std::string& id, const std::string& cat, std::size_t model) {
    return json{{"id", id}, {"category", cat}, {"model", model_id(cat, "test", model)}};
  };
  json dining = json::array({object("table", "table", 0)});
  for (std::size_t c = 0; c < 6; ++c) dining.push_back(object("chair" + std::to_string(c), "chair", c % 4));
  dining.push_back(object("cabinet", "cabinet", 0));
  dining.push_back(object("lamp0", "lamp", 0));
  dining.push_back(object("lamp1", "lamp", 1));
  store.ingest_scene({{"id", "dining-10"}, {"scene", "dining room"}, {"objects", dining}});
  store.ingest_scene({{"id", "dining-3"},
                      {"scene", "dining room"},
                      {"objects", {object("table", "table", 1), object("chair", "chair", 1), object("lamp", "lamp", 2)}}});
  store.ingest_scene({{"id", "living-4"},
                      {"scene", "living room"},
                      {"objects", {object("sofa", "sofa", 0), object("table", "table", 2), object("lamp", "lamp", 3),
                                   object("cabinet", "cabinet", 1)}}});
  store.ingest_scene({{"id", "bedroom-3"},
                      {"scene", "bedroom"},
                      {"objects", {object("bed", "bed", 0), object("lamp", "lamp", 0), object("cabinet", "cabinet", 2)}}});
  return store;
}

}  // namespace scenecolor::fixture
