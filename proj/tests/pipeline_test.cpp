#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "test_store.hpp"

using namespace scenecolor;
using namespace scenecolor::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kTheme = "#c8a070,#3c3c3c,#e1d7be,#784628,#ececec";

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;  // sentinel: nothing thrown
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { root_ = new fs::path(scenecolor::testing::trained_store_copy("pipeline")); }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete root_;
  }
  datastore::Datastore store() const { return datastore::Datastore::open(*root_); }
  static fs::path* root_;
};
fs::path* Pipeline::root_ = nullptr;

/// First object of a category in an image, as "<image>/<index>".
std::string guide_of(const datastore::Datastore& s, const std::string& image, const std::string& category,
                     std::size_t parts) {
  const auto& img = s.image(image);
  for (std::size_t o = 0; o < img.objects.size(); ++o)
    if (img.objects[o].category == category && img.objects[o].parts.size() == parts) return image + "/" + std::to_string(o);
  return {};
}

}  // namespace

TEST(Config, JsonRoundTripAndOverrides) {
  Config c;
  c.energy.gamma = 3.5;
  c.seed = 42;
  c.policy = palette::SelectionPolicy::RandomTopM;
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  const auto over = config_from_json({{"gamma", 0.0}}, c);
  EXPECT_EQ(over.energy.gamma, 0.0);
  EXPECT_EQ(over.seed, 42u);
  EXPECT_EQ(code_of([] { config_from_json({{"gamm", 1.0}}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { config_from_json({{"policy", "best"}}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { config_from_json({{"m_retrieval", 0}}); }), ErrorCode::InvalidArgument);
}

TEST_F(Pipeline, ColorizeObjectHasOneEntryPerPartLabel) {
  const auto s = store();
  const auto guide = guide_of(s, "img000", "chair", 3);
  ASSERT_FALSE(guide.empty());
  const auto doc = colorize_object(s, "chair-test-0", guide);
  ASSERT_EQ(doc.objects.size(), 1u);
  const auto& o = doc.objects[0];
  EXPECT_EQ(o.scheme, "chair.seat-back-legs");
  std::set<std::string> labels;
  std::size_t covered = 0;
  for (const auto& p : o.parts) {
    labels.insert(p.label);
    covered += p.components.size();
    EXPECT_NE(s.swatches().find(p.swatch), nullptr);
    EXPECT_EQ(s.swatches().find(p.swatch)->material, p.material);
  }
  EXPECT_EQ(labels, (std::set<std::string>{"seat", "back", "legs"}));
  EXPECT_EQ(covered, s.load_mesh("chair-test-0").components.size());
  validate(doc, s);
}

TEST_F(Pipeline, SingleMaterialGuideNeedsNoClassifier) {
  const auto root = scenecolor::testing::trained_store_copy("single");
  fs::remove_all(root / "classifiers");
  const auto s = datastore::Datastore::open(root);
  const auto guide = guide_of(s, "img001", "table", 1);
  ASSERT_FALSE(guide.empty());
  const auto doc = colorize_object(s, "table-test-0", guide);
  ASSERT_EQ(doc.objects[0].parts.size(), 1u);
  EXPECT_EQ(doc.objects[0].parts[0].components.size(), s.load_mesh("table-test-0").components.size());
  // A multi-part guide does need one.
  EXPECT_EQ(code_of([&] { colorize_object(s, "chair-test-0", guide_of(s, "img000", "chair", 3)); }),
            ErrorCode::UntrainedModel);
  fs::remove_all(root);
}

TEST_F(Pipeline, WrongCategoryGuide) {
  const auto s = store();
  EXPECT_EQ(code_of([&] { colorize_object(s, "chair-test-0", guide_of(s, "img000", "table", 2)); }),
            ErrorCode::CategoryMismatch);
}

TEST_F(Pipeline, UnmatchedSchemeNamesCandidates) {
  const auto root = scenecolor::testing::trained_store_copy("novel");
  auto s = datastore::Datastore::open(root);
  auto j = datastore::read_json(root / "manifests" / "images" / "img000.json");
  j["id"] = "novel";
  std::size_t chair = 0;
  for (std::size_t o = 0; o < j["objects"].size(); ++o)
    if (j["objects"][o]["category"] == "chair" && j["objects"][o]["parts"].size() == 3) chair = o;
  j["objects"][chair]["parts"][1]["material"] = "metal";  // seat/back/legs with a metal back is no stored scheme
  s.ingest_image(j);
  const auto guide = "novel/" + std::to_string(chair);
  try {
    colorize_object(s, "chair-test-0", guide);
    FAIL() << "expected SchemeMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemeMismatch);
    EXPECT_NE(std::string(e.what()).find("chair.seat-back-legs"), std::string::npos);
    EXPECT_EQ(e.details().at("candidates").size(), 3u);
  }
  // An explicit scheme resolves it.
  const auto doc = colorize_object(s, "chair-test-0", guide, {}, "chair.seat-back-legs");
  EXPECT_EQ(doc.objects[0].parts.size(), 3u);
  fs::remove_all(root);
}

TEST_F(Pipeline, SceneByExampleCoversEveryObject) {
  const auto s = store();
  const auto doc = colorize_scene_by_example(s, "dining-3", "img000");
  ASSERT_EQ(doc.objects.size(), 3u);
  EXPECT_EQ(doc.objects[0].id, "table");
  EXPECT_EQ(doc.objects[0].guide, "img000/0");
  validate(doc, s);
  EXPECT_EQ(to_json(colorize_scene_by_example(s, "dining-3", "img000")).dump(), to_json(doc).dump());
}

TEST_F(Pipeline, SceneByExampleCyclesWithinCategory) {
  const auto s = store();
  const auto doc = colorize_scene_by_example(s, "dining-10", "img000");  // 2 chairs in the image, 6 in the scene
  std::vector<std::string> chair_guides;
  for (const auto& o : doc.objects)
    if (o.category == "chair") chair_guides.push_back(o.guide);
  ASSERT_EQ(chair_guides.size(), 6u);
  EXPECT_NE(chair_guides[0], chair_guides[1]);
  EXPECT_EQ(chair_guides[0], chair_guides[2]);
  EXPECT_EQ(chair_guides[1], chair_guides[5]);
}

TEST_F(Pipeline, ExampleMissingACategory) {
  const auto s = store();
  try {
    colorize_scene_by_example(s, "living-4", "img000");
    FAIL() << "expected MissingCategoryInExample";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingCategoryInExample);
    EXPECT_EQ(e.details().at("category"), "sofa");
  }
}

TEST_F(Pipeline, DocumentRoundTripAndValidation) {
  const auto s = store();
  auto doc = colorize_scene_by_example(s, "dining-3", "img000");
  const auto j = to_json(doc);
  EXPECT_EQ(to_json(scheme_document_from_json(j)).dump(), j.dump());
  auto dup = doc;
  dup.objects.push_back(dup.objects[0]);
  EXPECT_EQ(code_of([&] { validate(dup, s); }), ErrorCode::InvalidArgument);
  auto missing = doc;
  missing.objects.pop_back();
  EXPECT_EQ(code_of([&] { validate(missing, s); }), ErrorCode::InvalidArgument);
  auto bad = doc;
  bad.objects[0].parts[0].swatch = "nope";
  EXPECT_EQ(code_of([&] { validate(bad, s); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([] { scheme_document_from_json({{"scene", "x"}}); }), ErrorCode::ParseError);
}

TEST_F(Pipeline, RecommendHonoursPinsAndIsDeterministic) {
  const auto s = store();
  const auto user = palette::parse_theme(kTheme);
  const auto a = recommend(s, "dining-10", user);
  ASSERT_EQ(a.document.objects.size(), 10u);
  validate(a.document, s);
  EXPECT_EQ(to_json(recommend(s, "dining-10", user).document).dump(), to_json(a.document).dump());

  // Pin the table to a candidate it did not choose.
  const auto& table = a.problem.graph.nodes[0];
  std::string other;
  for (const auto& c : table.candidates)
    if (c.id != a.document.objects[0].guide) other = c.id;
  ASSERT_FALSE(other.empty());
  const auto b = recommend(s, "dining-10", user, {}, {{"table", other}});
  EXPECT_EQ(b.document.objects[0].guide, other);
  const auto states = assignment_states(b.problem.graph, b.result.best);
  EXPECT_EQ(states.at("table"), other);

  EXPECT_EQ(code_of([&] { recommend(s, "dining-10", user, {}, {{"sofa", other}}); }), ErrorCode::InvalidPin);
  EXPECT_EQ(code_of([&] { recommend(s, "dining-10", user, {}, {{"table", "img000/1"}}); }), ErrorCode::InvalidPin);
}

TEST_F(Pipeline, HigherGammaDoesNotMoveAwayFromTheTheme) {
  const auto s = store();
  const auto user = palette::parse_theme("#be282d,#5a1414,#c8aa5a,#8c3223,#323246");
  double previous = std::numeric_limits<double>::infinity();
  for (double gamma : {0.0, 10.0}) {
    Config cfg;
    cfg.energy.gamma = gamma;
    const auto r = recommend(s, "dining-10", user, cfg);
    scene::EnergyParams raw;
    raw.normalizer = scene::NormalizerMode::Raw;
    const double d = -scene::constraint_energy(r.problem.graph, r.result.best, user, raw);
    EXPECT_LE(d, previous + 1e-9) << "gamma " << gamma;
    previous = d;
  }
}

TEST_F(Pipeline, EvaluationRowsAndPerfectClassifier) {
  const auto s = store();
  const auto rows = evaluate(s);
  std::size_t test_models = 0;
  for (const auto& m : s.models()) test_models += m.split == "test";
  EXPECT_EQ(rows.size(), 2 * test_models);
  const auto csv = to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,scheme,config,1-precision,rand,GCE,LCE");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(rows.size() + 1));

  // In-distribution held-out models are labeled perfectly by both configurations.
  for (const auto& r : rows)
    if (r.model == "bed-test-0" || r.model == "lamp-test-1") {
      EXPECT_EQ(r.one_minus_precision, 0.0);
      EXPECT_EQ(r.rand, 0.0);
      EXPECT_EQ(r.gce, 0.0);
      EXPECT_EQ(r.lce, 0.0);
    }
}

// ------------------------------------------------------------------ CLI

#ifdef SCENECOLOR_CLI_PATH
namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::string& args) {
  static int n = 0;
  const auto dir = fs::temp_directory_path();
  const auto out = dir / ("cli-out-" + std::to_string(::getpid()) + "-" + std::to_string(n));
  const auto err = dir / ("cli-err-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
  const std::string cmd = std::string(SCENECOLOR_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int rc = std::system(cmd.c_str());
  Run r{WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, slurp(out), slurp(err)};
  fs::remove(out);
  fs::remove(err);
  return r;
}

}  // namespace

TEST_F(Pipeline, CliExitCodesAndErrorPayload) {
  const std::string store = "--store " + root_->string() + " ";
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli(store).code, 2);  // no subcommand

  const auto bad_theme = cli(store + "recommend --scene dining-10 --theme \"#ff0000,#00ff00\"");
  EXPECT_EQ(bad_theme.code, 2);
  const auto payload = json::parse(bad_theme.err);
  EXPECT_EQ(payload.at("code"), "InvalidArgument");
  EXPECT_TRUE(payload.contains("message"));
  EXPECT_TRUE(payload.contains("details"));

  EXPECT_EQ(cli(store + "recommend --scene nowhere --theme \"" + kTheme + "\"").code, 2);
  EXPECT_EQ(cli(store + "colorize-object --model chair-test-99 --guide img000/1").code, 3);

  const auto untrained = scenecolor::testing::trained_store_copy("cli-untrained");
  fs::remove_all(untrained / "classifiers");
  const auto r = cli("--store " + untrained.string() + " segment --model chair-test-0 --scheme chair.seat-back-legs");
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(json::parse(r.err).at("code"), "UntrainedModel");
  fs::remove_all(untrained);
}

TEST_F(Pipeline, CliConfigFileWithFlagOverride) {
  const auto cfg = *root_ / "cfg.json";
  datastore::write_json(cfg, {{"gamma", 0.0}, {"seed", 5}});
  const std::string base = "--store " + root_->string() + " --config " + cfg.string() + " ";
  const auto from_file = json::parse(cli(base + "recommend --scene dining-3 --theme \"" + kTheme + "\"").out);
  EXPECT_EQ(from_file["params"]["gamma"], 0.0);
  EXPECT_EQ(from_file["params"]["seed"], 5);
  const auto flagged = json::parse(cli(base + "--gamma 10 recommend --scene dining-3 --theme \"" + kTheme + "\"").out);
  EXPECT_EQ(flagged["params"]["gamma"], 10.0);
  EXPECT_EQ(flagged["params"]["seed"], 5);
}

TEST_F(Pipeline, CliSegmentColorizeAndRefine) {
  const std::string store = "--store " + root_->string() + " ";
  const auto seg = cli(store + "segment --model chair-test-4 --scheme chair.seat-back-legs --mode local");
  ASSERT_EQ(seg.code, 0) << seg.err;
  EXPECT_EQ(json::parse(seg.out).at("components").size(), datastore::Datastore::open(*root_).load_mesh("chair-test-4").components.size());

  const auto doc_path = *root_ / "rec.json";
  ASSERT_EQ(cli(store + "recommend --scene dining-3 --theme \"" + kTheme + "\" -o " + doc_path.string()).code, 0);
  const auto doc = json::parse(slurp(doc_path));
  ASSERT_EQ(doc.at("objects").size(), 3u);

  // Pin the lamp to a different candidate and refine from the previous document.
  const auto s = datastore::Datastore::open(*root_);
  std::string other;
  for (const auto& c : s.candidates("lamp", "dining room"))
    if (c.id != doc["objects"][2]["guide"]) other = c.id;
  const auto refined = cli(store + "refine --previous " + doc_path.string() + " --theme \"" + kTheme + "\" --pin lamp=" + other);
  ASSERT_EQ(refined.code, 0) << refined.err;
  EXPECT_EQ(json::parse(refined.out)["objects"][2]["guide"], other);

  EXPECT_EQ(cli(store + "refine --previous " + doc_path.string() + " --theme \"" + kTheme + "\" --pin lamp").code, 2);

  const auto ex = cli(store + "colorize-scene --scene living-4 --example img000");
  EXPECT_EQ(ex.code, 2);
  EXPECT_EQ(json::parse(ex.err).at("code"), "MissingCategoryInExample");

  const auto csv = cli(store + "evaluate");
  ASSERT_EQ(csv.code, 0);
  EXPECT_EQ(csv.out.rfind("model,scheme,config,1-precision,rand,GCE,LCE\n", 0), 0u);
}

TEST(Cli, IngestRejectsInvalidManifests) {
  const auto root = scenecolor::testing::trained_store_copy("cli-ingest");
  const auto bad = root / "bad.json";
  datastore::write_json(bad, {{"id", "x"}, {"scene", "garage"}, {"image", "images/img000.png"}, {"objects", json::array()}});
  const auto r = cli("--store " + root.string() + " ingest --kind image " + bad.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err).at("code"), "UnknownScene");
  const auto good = root / "scene.json";
  datastore::write_json(good, {{"id", "tiny"}, {"scene", "dining room"}, {"objects", {{{"id", "t"}, {"category", "table"}, {"model", "table-test-3"}}}}});
  const auto ok = cli("--store " + root.string() + " ingest --kind scene " + good.string());
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(datastore::Datastore::open(root).scene("tiny").objects.size(), 1u);
  fs::remove_all(root);
}
#endif
