#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <vector>

#include "scenecolor/datastore/datastore.hpp"
#include "scenecolor/geometry/primitives.hpp"

using namespace scenecolor;
using namespace scenecolor::datastore;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;  // sentinel: nothing thrown
}

/// Removed when the test process exits.
fs::path fresh_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  static struct Created {
    std::vector<fs::path> dirs;
    ~Created() {
      for (const auto& d : dirs) fs::remove_all(d);
    }
  } created;
  auto p = fs::temp_directory_path() / ("scenecolor_ds_" + name + "_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  created.dirs.push_back(p);
  return p;
}

using Color = std::array<std::uint8_t, 3>;

// An object occupies a rectangle split into horizontal bands, one per part.
struct ObjSpec {
  std::string category;
  std::size_t x0, y0, w, h;
  std::vector<std::tuple<std::string, std::string, Color>> parts;  // label, material, color
};

constexpr std::size_t kW = 40, kH = 30;

json write_image(const fs::path& root, const std::string& id, const std::string& scene,
                 const std::vector<ObjSpec>& objects) {
  RgbImage img(kW, kH);
  for (auto& v : img.data) v = 250;
  json objs = json::array();
  for (std::size_t o = 0; o < objects.size(); ++o) {
    const auto& s = objects[o];
    LabelImage mask(kW, kH);
    json parts = json::array();
    for (std::size_t p = 0; p < s.parts.size(); ++p) {
      const std::size_t ya = s.y0 + s.h * p / s.parts.size(), yb = s.y0 + s.h * (p + 1) / s.parts.size();
      for (std::size_t y = ya; y < yb; ++y)
        for (std::size_t x = s.x0; x < s.x0 + s.w; ++x) {
          mask.at(x, y) = static_cast<std::uint16_t>(p + 1);
          for (int c = 0; c < 3; ++c) img.at(x, y)[c] = std::get<2>(s.parts[p])[static_cast<std::size_t>(c)];
        }
      parts.push_back({{"label", std::get<0>(s.parts[p])},
                       {"material", std::get<1>(s.parts[p])},
                       {"mask", "masks/" + id + "_" + std::to_string(o) + ".png"},
                       {"value", p + 1}});
    }
    write_label_png(root / "masks" / (id + "_" + std::to_string(o) + ".png"), mask);
    objs.push_back({{"category", s.category}, {"mask", "masks/" + id + "_" + std::to_string(o) + ".png"}, {"parts", parts}});
  }
  write_rgb_png(root / "images" / (id + ".png"), img);
  return {{"id", id}, {"scene", scene}, {"image", "images/" + id + ".png"}, {"objects", objs}};
}

const std::vector<SegmentationScheme> kSchemes = {
    {"chair.two", "chair", {{"seat", "fabric"}, {"legs", "wood"}}},
    {"chair.one", "chair", {{"body", "wood"}}},
    {"table.two", "table", {{"top", "wood"}, {"legs", "metal"}}},
};

Datastore make_store(const fs::path& root) {
  return Datastore::create(root, {"bed", "chair", "lamp", "sofa", "table"}, kSchemes);
}

ObjSpec chair(std::size_t x0, Color seat, Color legs) {
  return {"chair", x0, 2, 10, 12, {{"seat", "fabric", seat}, {"legs", "wood", legs}}};
}
ObjSpec table(std::size_t x0, Color top) {
  return {"table", x0, 15, 12, 10, {{"top", "wood", top}, {"legs", "metal", {90, 90, 90}}}};
}

bool near(const palette::Rgb& a, const Color& b, double tol = 1.0) {
  for (std::size_t c = 0; c < 3; ++c)
    if (std::abs(a[c] - b[c]) > tol) return false;
  return true;
}

}  // namespace

TEST(Png, RgbRoundTrip) {
  const auto dir = fresh_dir("png");
  RgbImage img(7, 5);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 37);
  write_rgb_png(dir / "a.png", img);
  const auto back = read_rgb_png(dir / "a.png");
  EXPECT_EQ(back.width, 7u);
  EXPECT_EQ(back.height, 5u);
  EXPECT_EQ(back.data, img.data);
}

TEST(Png, LabelRoundTripEightAndSixteenBit) {
  const auto dir = fresh_dir("png");
  LabelImage small(4, 3), large(4, 3);
  for (std::size_t i = 0; i < small.data.size(); ++i) {
    small.data[i] = static_cast<std::uint16_t>(i * 20);
    large.data[i] = static_cast<std::uint16_t>(i * 5000);
  }
  write_label_png(dir / "s.png", small);
  write_label_png(dir / "l.png", large);
  EXPECT_EQ(read_label_png(dir / "s.png").data, small.data);
  EXPECT_EQ(read_label_png(dir / "l.png").data, large.data);
  EXPECT_EQ(code_of([&] { (void)read_label_png(dir / "missing.png"); }), ErrorCode::Io);
  EXPECT_EQ(code_of([&] { (void)read_label_png(dir / "x.png"); }), ErrorCode::Io);
}

TEST(Png, RgbIsNotALabelMap) {
  const auto dir = fresh_dir("png");
  write_rgb_png(dir / "a.png", RgbImage(3, 3));
  EXPECT_EQ(code_of([&] { (void)read_label_png(dir / "a.png"); }), ErrorCode::ParseError);
}

TEST(Ingest, ValidBedroomWithTwoObjects) {
  const auto root = fresh_dir("ingest");
  auto store = make_store(root);
  const auto entry = write_image(
      root, "b1", "bedroom",
      {{"bed", 2, 2, 16, 12, {{"frame", "wood", {120, 70, 30}}, {"cover", "fabric", {30, 60, 200}}}},
       {"lamp", 25, 5, 8, 8, {{"shade", "fabric", {240, 220, 120}}}}});
  const auto rec = store.ingest_image(entry);
  ASSERT_EQ(rec.objects.size(), 2u);
  EXPECT_TRUE(fs::exists(root / "cache" / "themes" / "b1.json"));
  EXPECT_TRUE(fs::exists(root / "manifests" / "images" / "b1.json"));
  const auto& t = store.themes("b1");
  ASSERT_EQ(t.size(), 2u);
  ASSERT_EQ(t[0].parts.size(), 2u);
  EXPECT_TRUE(near(t[0].parts[0].colors[0], {120, 70, 30}));
  EXPECT_TRUE(near(t[0].parts[1].colors[0], {30, 60, 200}));
  EXPECT_TRUE(near(t[1].theme.colors[0], {240, 220, 120}));
  EXPECT_EQ(t[0].pixels, 16u * 12u);
}

TEST(Ingest, OverlappingPartsRejected) {
  const auto root = fresh_dir("ingest");
  auto store = make_store(root);
  auto entry = write_image(root, "o1", "office", {chair(2, {200, 0, 0}, {0, 0, 200})});
  LabelImage second(kW, kH);
  for (std::size_t y = 2; y < 14; ++y)
    for (std::size_t x = 2; x < 12; ++x) second.at(x, y) = 1;
  write_label_png(root / "masks" / "o1_extra.png", second);
  entry["objects"][0]["parts"][1]["mask"] = "masks/o1_extra.png";
  entry["objects"][0]["parts"][1]["value"] = 1;
  EXPECT_EQ(code_of([&] { store.ingest_image(entry); }), ErrorCode::OverlappingParts);
  EXPECT_FALSE(fs::exists(root / "manifests" / "images" / "o1.json"));
  EXPECT_TRUE(store.images().empty());
}

TEST(Ingest, UnknownSceneRejected) {
  const auto root = fresh_dir("ingest");
  auto store = make_store(root);
  const auto entry = write_image(root, "g1", "garage", {chair(2, {200, 0, 0}, {0, 0, 200})});
  EXPECT_EQ(code_of([&] { store.ingest_image(entry); }), ErrorCode::UnknownScene);
}

TEST(Ingest, MaskSizeMismatchIsOutOfBounds) {
  const auto root = fresh_dir("ingest");
  auto store = make_store(root);
  auto entry = write_image(root, "m1", "office", {chair(2, {200, 0, 0}, {0, 0, 200})});
  write_label_png(root / "masks" / "m1_0.png", LabelImage(kW + 1, kH));
  EXPECT_EQ(code_of([&] { store.ingest_image(entry); }), ErrorCode::MaskOutOfBounds);
}

TEST(Ingest, PartOutsideObjectRegionIsOutOfBounds) {
  const auto root = fresh_dir("ingest");
  auto store = make_store(root);
  auto entry = write_image(root, "m2", "office", {chair(2, {200, 0, 0}, {0, 0, 200})});
  LabelImage obj(kW, kH);
  for (std::size_t y = 2; y < 8; ++y)
    for (std::size_t x = 2; x < 12; ++x) obj.at(x, y) = 1;
  write_label_png(root / "masks" / "m2_obj.png", obj);
  entry["objects"][0]["mask"] = "masks/m2_obj.png";
  EXPECT_EQ(code_of([&] { store.ingest_image(entry); }), ErrorCode::MaskOutOfBounds);
}

TEST(Ingest, CategoryAndMaterialChecked) {
  const auto root = fresh_dir("ingest");
  auto store = make_store(root);
  auto entry = write_image(root, "c1", "office", {chair(2, {200, 0, 0}, {0, 0, 200})});
  auto bad = entry;
  bad["objects"][0]["category"] = "piano";
  EXPECT_EQ(code_of([&] { store.ingest_image(bad); }), ErrorCode::UnknownCategory);
  bad = entry;
  bad["objects"][0]["parts"][0]["material"] = "";
  EXPECT_EQ(code_of([&] { store.ingest_image(bad); }), ErrorCode::InvalidArgument);
  bad = entry;
  bad["objects"][0]["parts"][0]["mask"] = "masks/none.png";
  EXPECT_EQ(code_of([&] { store.ingest_image(bad); }), ErrorCode::Io);
}

TEST(TrainingThemes, CountsEmptyAndUnknown) {
  const auto root = fresh_dir("themes");
  auto store = make_store(root);
  store.ingest_image(write_image(root, "d1", "dining room", {chair(2, {200, 0, 0}, {0, 0, 200}), table(20, {150, 100, 50})}));
  store.ingest_image(write_image(root, "d2", "dining room", {chair(2, {0, 200, 0}, {50, 50, 50}), chair(20, {0, 200, 0}, {50, 50, 50})}));
  EXPECT_EQ(store.training_themes("chair").size(), 3u);
  EXPECT_EQ(store.training_themes("table").size(), 1u);
  EXPECT_TRUE(store.training_themes("sofa").empty());
  EXPECT_EQ(code_of([&] { (void)store.training_themes("piano"); }), ErrorCode::UnknownCategory);
}

TEST(TrainingThemes, CacheMatchesRecomputation) {
  const auto root = fresh_dir("themes");
  {
    auto store = make_store(root);
    Rng rng(3);
    for (int i = 0; i < 4; ++i) {
      auto col = [&] { return Color{static_cast<std::uint8_t>(rng.index(256)), static_cast<std::uint8_t>(rng.index(256)),
                                    static_cast<std::uint8_t>(rng.index(256))}; };
      store.ingest_image(write_image(root, "r" + std::to_string(i), "living room", {chair(2, col(), col()), table(20, col())}));
    }
  }
  // Reopened: themes now come from the cache files.
  const auto store = Datastore::open(root);
  const auto cached = store.training_themes("chair");
  std::vector<palette::ColorTheme> recomputed;
  for (const auto& img : store.images()) {
    const auto t = store.compute_themes(img);
    for (std::size_t o = 0; o < img.objects.size(); ++o)
      if (img.objects[o].category == "chair") recomputed.push_back(t[o].theme);
  }
  ASSERT_EQ(cached.size(), recomputed.size());
  for (std::size_t i = 0; i < cached.size(); ++i)
    for (std::size_t k = 0; k < 5; ++k)
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(cached[i].colors[k][c], recomputed[i].colors[k][c], 1e-9);
}

TEST(TrainingPairs, OnePerImageInCanonicalOrder) {
  const auto root = fresh_dir("pairs");
  auto store = make_store(root);
  store.ingest_image(write_image(root, "p1", "dining room", {table(20, {150, 100, 50}), chair(2, {200, 0, 0}, {0, 0, 200})}));
  store.ingest_image(write_image(root, "p2", "dining room", {chair(2, {0, 200, 0}, {40, 40, 40}), table(20, {10, 10, 10})}));
  store.ingest_image(write_image(root, "p3", "bedroom", {{"bed", 2, 2, 16, 12, {{"frame", "wood", {90, 50, 20}}}}}));
  const auto ab = store.training_pairs("table", "chair");
  const auto ba = store.training_pairs("chair", "table");
  ASSERT_EQ(ab.size(), 2u);
  ASSERT_EQ(ba.size(), 2u);
  // "chair" sorts first, so its theme leads regardless of argument order.
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(ab[i].first, ba[i].first);
    EXPECT_EQ(ab[i].first, store.guide_object(i == 0 ? "p1/1" : "p2/0").theme);
    EXPECT_EQ(ab[i].second, store.guide_object(i == 0 ? "p1/0" : "p2/1").theme);
  }
  // Oracle: recompute from the stored pixels.
  const auto t1 = store.compute_themes(store.image("p1"));
  EXPECT_EQ(ab[0].first, t1[1].theme);
  EXPECT_EQ(ab[0].second, t1[0].theme);
  EXPECT_TRUE(store.training_pairs("bed", "chair").empty());
  EXPECT_EQ(code_of([&] { (void)store.training_pairs("bed", "piano"); }), ErrorCode::UnknownCategory);
}

TEST(TrainingPairs, NeverCoOccurringYieldsNoEdge) {
  const auto root = fresh_dir("pairs");
  auto store = make_store(root);
  for (int i = 0; i < 3; ++i) {
    const auto g = static_cast<std::uint8_t>(40 * i);
    store.ingest_image(write_image(root, "q" + std::to_string(i), "dining room",
                                   {chair(2, {200, g, 0}, {0, g, 200}), table(20, {150, g, 50})}));
    store.ingest_image(write_image(root, "s" + std::to_string(i), "living room",
                                   {{"sofa", 2, 2, 16, 12, {{"body", "fabric", {g, 100, 100}}}}}));
  }
  const auto models = store.fit_theme_models();
  EXPECT_NE(models.pair("chair", "table"), nullptr);
  EXPECT_EQ(models.pair("chair", "sofa"), nullptr);
  std::vector<scene::SceneNode> nodes = {{"c", "chair", store.candidates("chair"), std::nullopt},
                                         {"s", "sofa", store.candidates("sofa"), std::nullopt},
                                         {"t", "table", store.candidates("table"), std::nullopt}};
  const auto g = scene::build_scene_graph(nodes, models);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.nodes[g.edges[0].a].category, "chair");
  EXPECT_EQ(g.nodes[g.edges[0].b].category, "table");
}

TEST(TrainingPairs, SameCategoryUsesBothOrders) {
  const auto root = fresh_dir("pairs");
  auto store = make_store(root);
  store.ingest_image(write_image(root, "cc", "dining room", {chair(2, {200, 0, 0}, {0, 0, 200}), chair(20, {0, 200, 0}, {9, 9, 9})}));
  const auto pairs = store.training_pairs("chair", "chair");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].first, pairs[1].second);
  EXPECT_EQ(pairs[0].second, pairs[1].first);
  EXPECT_EQ(store.cooccurrence().images("chair", "chair").size(), 1u);
}

TEST(MatchScheme, IdenticalSingleAndNovel) {
  const auto root = fresh_dir("match");
  const auto store = make_store(root);
  palette::GuideObject g;
  g.category = "chair";
  g.parts = {{"legs", "wood", {}}, {"seat", "fabric", {}}};
  auto m = store.match_scheme("chair", g);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->id, "chair.two");

  g.parts = {{"body", "wood", {}}};
  m = store.match_scheme("chair", g);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->id, "chair.one");
  // Single part with no stored counterpart: the trivial scheme is synthesized.
  g.parts = {{"whole", "metal", {}}};
  m = store.match_scheme("chair", g);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->labels.size(), 1u);
  EXPECT_EQ(m->labels[0].material, "metal");

  g.parts = {{"seat", "fabric", {}}, {"back", "fabric", {}}, {"legs", "wood", {}}};
  EXPECT_FALSE(store.match_scheme("chair", g));
  g.parts = {{"seat", "leather", {}}, {"legs", "wood", {}}};
  EXPECT_FALSE(store.match_scheme("chair", g));
}

TEST(Persistence, IngestPersistLoadIsLossless) {
  const auto root = fresh_dir("persist");
  json entry;
  {
    auto store = make_store(root);
    entry = write_image(root, "l1", "living room", {chair(2, {200, 0, 0}, {0, 0, 200}), table(20, {150, 100, 50})});
    store.ingest_image(entry);
    const auto mesh = geometry::make_box({0, 0, 0}, {1, 1, 1});
    geometry::save_obj(root / "models" / "box.obj", mesh);
    store.ingest_model({{"id", "box"}, {"category", "chair"}, {"mesh", "models/box.obj"},
                        {"schemes", {{"chair.one", {{"box", "body"}}}}}});
  }
  const auto store = Datastore::open(root);
  ASSERT_EQ(store.images().size(), 1u);
  EXPECT_EQ(to_json(store.images()[0]), entry);
  EXPECT_EQ(to_json(store.images()[0]), read_json(root / "manifests" / "images" / "l1.json"));
  std::ifstream in(root / "manifests" / "images" / "l1.json");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(bytes, to_json(store.images()[0]).dump(2) + "\n");
  ASSERT_EQ(store.models().size(), 1u);
  EXPECT_EQ(to_json(store.models()[0]), read_json(root / "manifests" / "models" / "box.json"));
  EXPECT_EQ(store.schemes().size(), kSchemes.size());
}

TEST(CoOccurrence, RebuiltEqualsIncrementalAndIsSound) {
  const auto root = fresh_dir("cooc");
  auto store = make_store(root);
  Rng rng(11);
  const std::vector<std::string> cats = {"bed", "chair", "lamp", "sofa", "table"};
  for (int i = 0; i < 12; ++i) {
    std::vector<ObjSpec> objs;
    const std::size_t n = 1 + rng.index(3);
    for (std::size_t o = 0; o < n; ++o) {
      const auto c = static_cast<std::uint8_t>(rng.index(256));
      objs.push_back({cats[rng.index(cats.size())], 2 + 12 * o, 2, 10, 10, {{"p", "wood", {c, 80, 80}}}});
    }
    store.ingest_image(write_image(root, "i" + std::to_string(i), "office", objs));
  }
  EXPECT_EQ(store.cooccurrence(), store.rebuild_cooccurrence());
  EXPECT_EQ(store.cooccurrence(), Datastore::open(root).cooccurrence());
  for (const auto& [key, imgs] : store.cooccurrence().pairs()) {
    EXPECT_LE(key.first, key.second);
    EXPECT_EQ(store.cooccurrence().images(key.second, key.first), imgs);
    for (const auto& id : imgs) {
      int na = 0, nb = 0;
      for (const auto& o : store.image(id).objects) {
        na += o.category == key.first;
        nb += o.category == key.second;
      }
      EXPECT_TRUE(key.first == key.second ? na >= 2 : (na >= 1 && nb >= 1));
    }
  }
}

TEST(ModelIngest, MapsMustBeTotal) {
  const auto root = fresh_dir("model");
  auto store = make_store(root);
  geometry::TriangleMesh mesh;
  geometry::append_component(mesh, geometry::make_box({0, 0, 0}, {1, 0.1, 1}), "seat");
  geometry::append_component(mesh, geometry::make_box({0, -1, 0}, {0.1, 0, 0.1}), "leg");
  geometry::save_obj(root / "models" / "c.obj", mesh);
  json entry = {{"id", "c"}, {"category", "chair"}, {"mesh", "models/c.obj"},
                {"schemes", {{"chair.two", {{"seat", "seat"}, {"leg", "legs"}}}}}};
  EXPECT_NO_THROW(store.ingest_model(entry));
  auto bad = entry;
  bad["schemes"]["chair.two"].erase("leg");
  EXPECT_EQ(code_of([&] { store.ingest_model(bad); }), ErrorCode::ComponentSetMismatch);
  bad = entry;
  bad["schemes"]["chair.two"]["leg"] = "armrest";
  EXPECT_EQ(code_of([&] { store.ingest_model(bad); }), ErrorCode::InvalidArgument);
  bad = entry;
  bad["schemes"] = {{"table.two", {{"seat", "top"}, {"leg", "legs"}}}};
  EXPECT_EQ(code_of([&] { store.ingest_model(bad); }), ErrorCode::CategoryMismatch);
  bad = entry;
  bad["schemes"] = {{"nope", {{"seat", "top"}}}};
  EXPECT_EQ(code_of([&] { store.ingest_model(bad); }), ErrorCode::NotFound);
  EXPECT_EQ(store.load_mesh("c").components.size(), 2u);
}

TEST(Candidates, QualityIsPixelCountAndGuideMatchesScheme) {
  const auto root = fresh_dir("cand");
  auto store = make_store(root);
  store.ingest_image(write_image(root, "k1", "meeting room", {chair(2, {200, 0, 0}, {0, 0, 200}), table(20, {150, 100, 50})}));
  const auto c = store.candidates("chair");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].id, "k1/0");
  EXPECT_DOUBLE_EQ(c[0].quality, 120.0);
  const auto g = store.guide_object("k1/1");
  EXPECT_EQ(g.category, "table");
  EXPECT_EQ(g.scheme, "table.two");
  ASSERT_EQ(g.parts.size(), 2u);
  EXPECT_TRUE(near(g.parts[0].theme.colors[0], {150, 100, 50}));
  EXPECT_EQ(code_of([&] { (void)store.guide_object("k1/7"); }), ErrorCode::NotFound);
}
