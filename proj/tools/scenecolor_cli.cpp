// Command-line front end. Exit codes: 0 success, 2 validation error,
// 3 missing model or untrained classifier. Errors go to stderr as JSON.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "scenecolor/fixture/corpus.hpp"
#include "scenecolor/pipeline/pipeline.hpp"
#include "scenecolor/service/service.hpp"

namespace fs = std::filesystem;
namespace sc = scenecolor;
namespace pl = scenecolor::pipeline;
using nlohmann::json;

namespace {

int exit_code(const sc::Error& e) {
  if (e.code() == sc::ErrorCode::UntrainedModel) return 3;
  if (e.code() == sc::ErrorCode::NotFound && e.details().value("kind", "") == "model") return 3;
  return 2;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!(f << text)) sc::fail(sc::ErrorCode::Io, "cannot write " + out);
}

void emit(const json& j, const std::string& out) { emit(j.dump(2) + "\n", out); }

/// Resolves a model id, reporting a missing one as a missing-model error.
const sc::datastore::ModelAnnotation& require_model(const sc::datastore::Datastore& store, const std::string& id) {
  for (const auto& m : store.models())
    if (m.id == id) return m;
  sc::fail(sc::ErrorCode::NotFound, "no model " + id, {{"kind", "model"}, {"model", id}});
}

std::map<std::string, std::string> parse_pins(const std::vector<std::string>& pins) {
  std::map<std::string, std::string> out;
  for (const auto& p : pins) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == p.size())
      sc::fail(sc::ErrorCode::InvalidPin, "pin must be <scene object>=<image object>, got '" + p + "'");
    out[p.substr(0, eq)] = p.substr(eq + 1);
  }
  return out;
}

/// Flag values that override the config file when given.
struct Overrides {
  std::string config_path;
  std::uint64_t seed = 0;
  double beta = 0, gamma = 0, lambda = 0, normalizer_constant = 0;
  std::size_t m = 0, chains = 0, iterations = 0, patience = 0;
  std::string policy, normalizer;
  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App& app) {
    app.add_option("--config", config_path, "JSON config with energy and optimizer defaults")->check(CLI::ExistingFile);
    opts["seed"] = app.add_option("--seed", seed, "Random seed");
    opts["beta"] = app.add_option("--beta", beta, "Smoothness weight");
    opts["gamma"] = app.add_option("--gamma", gamma, "Theme constraint weight");
    opts["lambda"] = app.add_option("--lambda", lambda, "Local/global vote mix");
    opts["m_retrieval"] = app.add_option("--m", m, "Texture retrieval depth");
    opts["chains"] = app.add_option("--chains", chains, "Sampler restarts");
    opts["max_iterations"] = app.add_option("--iterations", iterations, "Proposals per chain");
    opts["patience"] = app.add_option("--patience", patience, "Proposals without improvement before a chain stops");
    opts["normalizer_constant"] = app.add_option("--normalizer-constant", normalizer_constant);
    opts["normalizer"] = app.add_option("--normalizer", normalizer)->check(CLI::IsMember({"calibrated", "raw"}));
    opts["policy"] = app.add_option("--policy", policy, "Swatch pick")->check(CLI::IsMember({"rank-one", "random-top-m"}));
  }

  pl::Config resolve() const {
    pl::Config cfg;
    if (!config_path.empty()) cfg = pl::config_from_json(sc::datastore::read_json(config_path));
    json o = json::object();
    auto set = [&](const char* key, const auto& v) {
      if (opts.at(key)->count()) o[key] = v;
    };
    set("seed", seed);
    set("beta", beta);
    set("gamma", gamma);
    set("lambda", lambda);
    set("m_retrieval", m);
    set("chains", chains);
    set("max_iterations", iterations);
    set("patience", patience);
    set("normalizer_constant", normalizer_constant);
    set("normalizer", normalizer);
    set("policy", policy);
    return pl::config_from_json(o, cfg);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Furniture scene colorization from annotated example images"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string store_path = ".";
  std::string out;
  Overrides ov;
  app.add_option("--store", store_path, "Datastore root")->capture_default_str();
  app.add_option("-o,--out", out, "Output file (default stdout)");
  ov.add(app);

  auto* fixture = app.add_subcommand("fixture", "Generate the procedural test corpus into --store");
  std::uint64_t fixture_seed = sc::fixture::CorpusOptions{}.seed;
  fixture->add_option("--corpus-seed", fixture_seed, "Corpus seed")->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "Validate and store image, model or scene manifests");
  std::string kind;
  std::vector<std::string> manifests;
  ingest->add_option("--kind", kind)->required()->check(CLI::IsMember({"image", "model", "scene"}));
  ingest->add_option("manifests", manifests)->required()->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train-seg", "Train part classifiers for segmentation schemes");
  std::vector<std::string> train_schemes;
  train->add_option("--scheme", train_schemes, "Scheme ids (default all)");

  auto* segment = app.add_subcommand("segment", "Label the components of a stored model");
  std::string seg_model, seg_scheme, seg_mode = "combined";
  segment->add_option("--model", seg_model)->required();
  segment->add_option("--scheme", seg_scheme)->required();
  segment->add_option("--mode", seg_mode)->check(CLI::IsMember({"combined", "local", "global"}))->capture_default_str();

  auto* cobj = app.add_subcommand("colorize-object", "Texture one model after one image object");
  std::string co_model, co_guide, co_scheme;
  cobj->add_option("--model", co_model)->required();
  cobj->add_option("--guide", co_guide, "Image object id <image>/<index>")->required();
  cobj->add_option("--scheme", co_scheme, "Override the matched segmentation scheme");

  auto* cscene = app.add_subcommand("colorize-scene", "Texture a scene after one example image");
  std::string cs_scene, cs_image;
  cscene->add_option("--scene", cs_scene)->required();
  cscene->add_option("--example", cs_image)->required();

  auto* rec = app.add_subcommand("recommend", "Optimize a scene under a target color theme");
  std::string r_scene, r_theme;
  std::vector<std::string> r_pins;
  bool r_report = false;
  rec->add_option("--scene", r_scene)->required();
  rec->add_option("--theme", r_theme, "Five colors: \"#rrggbb,#rrggbb,...\"")->required();
  rec->add_option("--pin", r_pins, "<scene object>=<image object>");
  rec->add_flag("--report", r_report, "Emit the sampler report instead of the document");

  auto* ref = app.add_subcommand("refine", "Re-optimize a previous document with pinned objects");
  std::string f_previous, f_theme;
  std::vector<std::string> f_pins;
  ref->add_option("--previous", f_previous, "Scheme document to start from")->required()->check(CLI::ExistingFile);
  ref->add_option("--theme", f_theme)->required();
  ref->add_option("--pin", f_pins, "<scene object>=<image object>");

  auto* eval = app.add_subcommand("evaluate", "Score held-out models; writes CSV");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto cfg = ov.resolve();
    if (fixture->parsed()) {
      sc::fixture::CorpusOptions opt;
      opt.seed = fixture_seed;
      const auto store = sc::fixture::generate_corpus(store_path, opt);
      emit(json{{"store", store_path}, {"images", store.images().size()}, {"models", store.models().size()},
                {"scenes", store.scenes().size()}, {"swatches", store.swatches().swatches().size()}},
           out);
      return 0;
    }
    auto store = sc::datastore::Datastore::open(store_path);
    if (ingest->parsed()) {
      json ids = json::array();
      for (const auto& m : manifests) {
        const auto j = sc::datastore::read_json(m);
        if (kind == "image") ids.push_back(store.ingest_image(j).id);
        if (kind == "model") ids.push_back(store.ingest_model(j).id);
        if (kind == "scene") ids.push_back(store.ingest_scene(j).id);
      }
      emit(json{{"ingested", ids}}, out);
    } else if (train->parsed()) {
      emit(json{{"trained", pl::train_all(store, cfg, train_schemes)}}, out);
    } else if (segment->parsed()) {
      require_model(store, seg_model);
      store.scheme(seg_scheme);
      const auto mode = seg_mode == "local"    ? sc::segmentation::VoteMode::LocalOnly
                        : seg_mode == "global" ? sc::segmentation::VoteMode::GlobalOnly
                                               : sc::segmentation::VoteMode::Combined;
      const auto model = pl::load_classifier(store, seg_scheme);
      emit(sc::segmentation::to_json(
               sc::segmentation::label_mesh(store.load_mesh(seg_model), model, cfg.energy.lambda, mode)),
           out);
    } else if (cobj->parsed()) {
      require_model(store, co_model);
      emit(pl::to_json(pl::colorize_object(store, co_model, co_guide, cfg, co_scheme)), out);
    } else if (cscene->parsed()) {
      for (const auto& o : store.scene(cs_scene).objects) require_model(store, o.model);
      emit(pl::to_json(pl::colorize_scene_by_example(store, cs_scene, cs_image, cfg)), out);
    } else if (rec->parsed()) {
      const auto r = pl::recommend(store, r_scene, sc::palette::parse_theme(r_theme), cfg, parse_pins(r_pins));
      emit(r_report ? sc::scene::report_json(r.problem.graph, r.result) : pl::to_json(r.document), out);
    } else if (ref->parsed()) {
      const auto prev = pl::scheme_document_from_json(sc::datastore::read_json(f_previous));
      if (prev.scene.empty()) sc::fail(sc::ErrorCode::InvalidArgument, "previous document has no scene");
      std::map<std::string, std::string> states;
      for (const auto& o : prev.objects) states[o.id] = o.guide;
      const auto r = pl::recommend(store, prev.scene, sc::palette::parse_theme(f_theme), cfg, parse_pins(f_pins), &states);
      emit(pl::to_json(r.document), out);
    } else if (eval->parsed()) {
      emit(pl::to_csv(pl::evaluate(store, cfg)), out);
    } else if (serve->parsed()) {
      httplib::Server server;
      sc::service::Service service(store, cfg);
      service.mount(server);
      std::cerr << "listening on " << host << ":" << port << "\n";
      if (!server.listen(host, port)) sc::fail(sc::ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
    }
    return 0;
  } catch (const sc::Error& e) {
    std::cerr << e.to_json().dump() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << sc::Error(sc::ErrorCode::Io, e.what()).to_json().dump() << "\n";
    return 2;
  }
}
