#include <gtest/gtest.h>

#include "scenecolor/geometry/primitives.hpp"
#include "scenecolor/palette/colorize.hpp"

using namespace scenecolor;
using namespace scenecolor::palette;

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

std::vector<Rgb8> blocks(const std::vector<std::pair<Rgb8, std::size_t>>& runs) {
  std::vector<Rgb8> px;
  for (const auto& [c, n] : runs) px.insert(px.end(), n, c);
  return px;
}

ColorTheme theme_of(std::initializer_list<Rgb> colors) {
  ColorTheme t;
  std::size_t k = 0;
  for (const auto& c : colors) t.colors[k++] = c;
  return t;
}

// Directional theme distance by explicit 5 x 5 enumeration.
double brute_force_distance(const ColorTheme& q, const ColorTheme& c) {
  double sum = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    double best = 1e300;
    for (std::size_t j = 0; j < 5; ++j) {
      const double d = std::sqrt(std::pow(q.colors[k][0] - c.colors[j][0], 2) +
                                 std::pow(q.colors[k][1] - c.colors[j][1], 2) +
                                 std::pow(q.colors[k][2] - c.colors[j][2], 2));
      best = std::min(best, d);
    }
    sum += best;
  }
  return sum;
}

ColorTheme random_theme(Rng& rng) {
  ColorTheme t;
  for (auto& c : t.colors)
    for (auto& v : c) v = rng.uniform(0.0, 255.0);
  return t;
}

SwatchIndex small_index() {
  return SwatchIndex({
      {"wood-a", "wood", "", ColorTheme::uniform({120, 80, 40})},
      {"wood-b", "wood", "", ColorTheme::uniform({200, 160, 110})},
      {"wood-c", "wood", "", ColorTheme::uniform({60, 40, 20})},
      {"fabric-red", "fabric", "", ColorTheme::uniform({200, 20, 20})},
      {"fabric-blue", "fabric", "", ColorTheme::uniform({20, 30, 200})},
      {"fabric-grey", "fabric", "", ColorTheme::uniform({128, 128, 128})},
  });
}

segmentation::ComponentLabeling two_part_labeling(const geometry::TriangleMesh& mesh) {
  segmentation::ComponentLabeling l;
  l.labels = {"frame", "cushion"};
  for (const auto& c : mesh.components)
    l.components.push_back({c.id, c.id == "seat" ? "cushion" : "frame", {}, c.total_area});
  return l;
}

geometry::TriangleMesh chair() {
  using geometry::make_box;
  geometry::TriangleMesh m;
  geometry::append_component(m, make_box({0, 0.4, 0}, {0.45, 0.46, 0.42}), "seat");
  geometry::append_component(m, make_box({0, 0.46, 0.38}, {0.45, 0.9, 0.42}), "back");
  geometry::append_component(m, make_box({0, 0, 0}, {0.05, 0.4, 0.05}), "leg0");
  geometry::append_component(m, make_box({0.4, 0, 0}, {0.45, 0.4, 0.05}), "leg1");
  return m;
}

}  // namespace

TEST(ExtractTheme, FiveSolidBlocksInSizeOrder) {
  const std::vector<std::pair<Rgb8, std::size_t>> runs = {
      {{10, 200, 30}, 300}, {{250, 250, 250}, 500}, {{0, 0, 255}, 100}, {{128, 64, 0}, 400}, {{90, 90, 90}, 200}};
  auto px = blocks(runs);
  const auto t = extract_theme(px);
  const std::vector<Rgb> expected = {{250, 250, 250}, {128, 64, 0}, {10, 200, 30}, {90, 90, 90}, {0, 0, 255}};
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(t.colors[k][c], expected[k][c], 2.0) << k << "," << c;
  for (std::size_t k = 1; k < 5; ++k) EXPECT_GE(t.share[k - 1], t.share[k]);
}

TEST(ExtractTheme, JitteredBlocksRecoveredWithFiveClusters) {
  Rng rng(3);
  const std::vector<std::pair<Rgb, std::size_t>> runs = {
      {{200, 40, 40}, 900}, {{40, 200, 40}, 700}, {{40, 40, 200}, 500}, {{220, 220, 60}, 300}, {{30, 30, 30}, 150}};
  std::vector<Rgb8> px;
  for (const auto& [c, n] : runs)
    for (std::size_t i = 0; i < n; ++i) {
      Rgb8 p;
      for (std::size_t ch = 0; ch < 3; ++ch)
        p[ch] = static_cast<std::uint8_t>(std::clamp(c[ch] + std::round(rng.uniform(-3.0, 3.0)), 0.0, 255.0));
      px.push_back(p);
    }
  const auto t = extract_theme(px, {.k = 5});
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(t.colors[k][c], runs[k].first[c], 2.0) << k << "," << c;
}

TEST(ExtractTheme, MonochromeCollapsesToOneColor) {
  const std::vector<Rgb8> px(64, Rgb8{17, 34, 51});
  const auto t = extract_theme(px);
  for (const auto& c : t.colors) EXPECT_EQ(c, (Rgb{17, 34, 51}));
}

TEST(ExtractTheme, TwoColorsPadWithLargest) {
  auto px = blocks({{{255, 0, 0}, 10}, {{0, 0, 255}, 30}});
  const auto t = extract_theme(px);
  EXPECT_EQ(t.colors[0], (Rgb{0, 0, 255}));
  EXPECT_EQ(t.colors[1], (Rgb{255, 0, 0}));
  for (std::size_t k = 2; k < 5; ++k) EXPECT_EQ(t.colors[k], (Rgb{0, 0, 255}));
}

TEST(ExtractTheme, DeterministicAndWithinInputRange) {
  Rng rng(99);
  std::vector<Rgb8> px;
  for (int i = 0; i < 2000; ++i)
    px.push_back({static_cast<std::uint8_t>(40 + rng.index(100)), static_cast<std::uint8_t>(rng.index(60)),
                  static_cast<std::uint8_t>(200 + rng.index(50))});
  const auto a = extract_theme(px), b = extract_theme(px);
  EXPECT_EQ(a, b);
  for (const auto& c : a.colors) {
    EXPECT_GE(c[0], 40.0);
    EXPECT_LE(c[0], 139.0);
    EXPECT_GE(c[1], 0.0);
    EXPECT_LE(c[1], 59.0);
    EXPECT_GE(c[2], 200.0);
    EXPECT_LE(c[2], 249.0);
  }
}

TEST(ExtractTheme, TooFewPixels) {
  const std::vector<Rgb8> px(4, Rgb8{1, 2, 3});
  EXPECT_EQ(code_of([&] { extract_theme(px); }), ErrorCode::TooFewPixels);
}

TEST(ThemeDistance, SelfDistanceIsZero) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto t = random_theme(rng);
    EXPECT_EQ(theme_distance(t, t), 0.0);
  }
}

TEST(ThemeDistance, BlackToWhite) {
  const auto black = ColorTheme::uniform({0, 0, 0}), white = ColorTheme::uniform({255, 255, 255});
  EXPECT_NEAR(theme_distance(black, white), 5.0 * std::sqrt(3.0 * 255.0 * 255.0), 1e-9);
  EXPECT_NEAR(theme_distance(black, white), 2208.35, 0.02);  // exact value 2208.3648
}

TEST(ThemeDistance, RandomPairsMatchEnumeration) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_theme(rng), b = random_theme(rng);
    EXPECT_NEAR(theme_distance(a, b), brute_force_distance(a, b), 1e-9);
    EXPECT_GE(theme_distance(a, b), 0.0);
  }
}

TEST(ThemeDistance, DirectionalWitness) {
  const auto q = ColorTheme::uniform({0, 0, 0});
  const auto c = theme_of({{0, 0, 0}, {255, 255, 255}, {255, 255, 255}, {255, 255, 255}, {255, 255, 255}});
  EXPECT_EQ(theme_distance(q, c), 0.0);
  EXPECT_NEAR(theme_distance(c, q), 4.0 * std::sqrt(3.0) * 255.0, 1e-9);
}

TEST(ThemeText, HexRoundTripAndErrors) {
  const auto t = parse_theme("#ff0000,#00ff00,#0000ff,#ffffff,#102030");
  EXPECT_EQ(t.colors[4], (Rgb{16, 32, 48}));
  EXPECT_EQ(to_hex(t.colors[0]), "#ff0000");
  EXPECT_EQ(code_of([] { parse_theme("#ff0000,#00ff00"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_theme("#ff0000,#00ff00,#0000ff,#ffffff,#zz2030"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(theme_from_json(to_json(t)), t);
  EXPECT_EQ(code_of([] { theme_from_json(nlohmann::json::parse("[[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,300]]")); }),
            ErrorCode::InvalidArgument);
}

TEST(Retrieve, ExactThemeRanksFirst) {
  const auto index = small_index();
  const auto r = retrieve_textures(index, ColorTheme::uniform({200, 160, 110}), "wood");
  ASSERT_FALSE(r.empty());
  EXPECT_EQ(r[0].swatch->id, "wood-b");
  EXPECT_EQ(r[0].distance, 0.0);
}

TEST(Retrieve, OrderMatchesIndependentDistances) {
  const auto index = small_index();
  const auto query = theme_of({{100, 70, 30}, {150, 100, 60}, {90, 60, 30}, {70, 50, 30}, {210, 170, 120}});
  const auto r = retrieve_textures(index, query, "wood", 10);
  ASSERT_EQ(r.size(), 3u);  // m larger than the category
  std::vector<std::pair<double, std::string>> oracle;
  for (const auto& s : index.swatches())
    if (s.material == "wood") oracle.emplace_back(brute_force_distance(query, s.theme), s.id);
  std::sort(oracle.begin(), oracle.end());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r[i].swatch->id, oracle[i].second);
    EXPECT_NEAR(r[i].distance, oracle[i].first, 1e-9);
  }
}

TEST(Retrieve, TiesBrokenById) {
  SwatchIndex index({{"z", "paint", "", ColorTheme::uniform({1, 1, 1})},
                     {"a", "paint", "", ColorTheme::uniform({1, 1, 1})},
                     {"m", "paint", "", ColorTheme::uniform({1, 1, 1})}});
  const auto r = retrieve_textures(index, ColorTheme::uniform({0, 0, 0}), "paint", 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].swatch->id, "a");
  EXPECT_EQ(r[1].swatch->id, "m");
}

TEST(Retrieve, Errors) {
  auto index = small_index();
  EXPECT_EQ(code_of([&] { retrieve_textures(index, ColorTheme{}, "metal"); }), ErrorCode::UnknownMaterial);
  index.declare_material("metal");
  EXPECT_EQ(code_of([&] { retrieve_textures(index, ColorTheme{}, "metal"); }), ErrorCode::EmptyCategory);
}

TEST(Retrieve, RandomPolicyStaysInTopM) {
  const auto index = small_index();
  const auto r = retrieve_textures(index, ColorTheme::uniform({100, 60, 30}), "wood", 2);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto& pick = select_swatch(r, SelectionPolicy::RandomTopM, rng);
    EXPECT_TRUE(pick.swatch == r[0].swatch || pick.swatch == r[1].swatch);
  }
}

TEST(Retrieve, ManifestRoundTrip) {
  const auto index = small_index();
  const auto back = swatch_index_from_json(nlohmann::json::parse(to_json(index).dump()));
  ASSERT_EQ(back.swatches().size(), index.swatches().size());
  EXPECT_EQ(back.find("fabric-red")->theme, index.find("fabric-red")->theme);
}

TEST(Colorize, TwoPartGuideCoversEveryComponent) {
  const auto mesh = chair();
  const auto labeling = two_part_labeling(mesh);
  GuideObject guide{"img/0", "chair", "s", {}, {{"frame", "wood", ColorTheme::uniform({60, 40, 20})},
                                                {"cushion", "fabric", ColorTheme::uniform({20, 30, 190})}}};
  const auto out = colorize_object(mesh, &labeling, guide, small_index());
  ASSERT_EQ(out.parts.size(), 2u);
  for (const auto& c : mesh.components) {
    const auto* p = out.part_of_component(c.id);
    ASSERT_NE(p, nullptr) << c.id;
  }
  EXPECT_EQ(out.part_of_component("seat")->swatch_id, "fabric-blue");
  EXPECT_EQ(out.part_of_component("leg0")->swatch_id, "wood-c");
  std::size_t covered = 0;
  for (const auto& p : out.parts) covered += p.components.size();
  EXPECT_EQ(covered, mesh.components.size());
}

TEST(Colorize, SingleMaterialGuideNeedsNoSegmentation) {
  const auto mesh = chair();
  GuideObject guide{"img/1", "chair", "", {}, {{"whole", "wood", ColorTheme::uniform({118, 82, 41})}}};
  const auto out = colorize_object(mesh, nullptr, guide, small_index());
  ASSERT_EQ(out.parts.size(), 1u);
  EXPECT_EQ(out.parts[0].components.size(), mesh.components.size());
  EXPECT_EQ(out.parts[0].swatch_id, "wood-a");
}

TEST(Colorize, RecoloredPartFollowsTheNewColor) {
  const auto mesh = chair();
  const auto labeling = two_part_labeling(mesh);
  const auto index = small_index();
  GuideObject guide{"img/2", "chair", "", {}, {{"frame", "wood", ColorTheme::uniform({60, 40, 20})},
                                               {"cushion", "fabric", ColorTheme::uniform({128, 128, 128})}}};
  guide.parts[1].theme = ColorTheme::uniform({255, 0, 0});
  const auto out = colorize_object(mesh, &labeling, guide, index);
  const auto* seat = out.part_of_component("seat");
  double best = 1e300;
  std::string best_id;
  for (const auto& s : index.swatches())
    if (s.material == "fabric" && brute_force_distance(guide.parts[1].theme, s.theme) < best) {
      best = brute_force_distance(guide.parts[1].theme, s.theme);
      best_id = s.id;
    }
  EXPECT_EQ(seat->swatch_id, best_id);
  EXPECT_EQ(seat->swatch_id, "fabric-red");
}

TEST(Colorize, LabelSetMismatch) {
  const auto mesh = chair();
  const auto labeling = two_part_labeling(mesh);
  GuideObject guide{"img/3", "chair", "", {}, {{"frame", "wood", ColorTheme{}}, {"back", "fabric", ColorTheme{}}}};
  EXPECT_EQ(code_of([&] { colorize_object(mesh, &labeling, guide, small_index()); }), ErrorCode::SchemeMismatch);
}
