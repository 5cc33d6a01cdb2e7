#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "scenecolor/datastore/datastore.hpp"
#include "scenecolor/palette/colorize.hpp"
#include "scenecolor/scene/optimize.hpp"
#include "scenecolor/segmentation/metrics.hpp"
#include "scenecolor/segmentation/training.hpp"

namespace scenecolor::pipeline {

namespace fs = std::filesystem;
using datastore::Datastore;
using nlohmann::json;
using palette::ColorTheme;

/// Every tunable of an end-to-end run. Loaded from a JSON config, then
/// overridden by command-line flags.
struct Config {
  scene::EnergyParams energy;
  scene::OptimizeOptions optimize;
  palette::SelectionPolicy policy = palette::SelectionPolicy::RankOne;
  std::uint64_t seed = 1;
  std::size_t local_rounds = 200;
  std::size_t global_rounds = 200;
};

inline json to_json(const Config& c) {
  return {{"beta", c.energy.beta},
          {"gamma", c.energy.gamma},
          {"lambda", c.energy.lambda},
          {"k_clusters", c.energy.k_clusters},
          {"m_retrieval", c.energy.m_retrieval},
          {"normalizer", c.energy.normalizer == scene::NormalizerMode::Raw ? "raw" : "calibrated"},
          {"normalizer_constant", c.energy.normalizer_constant},
          {"seed", c.seed},
          {"chains", c.optimize.chains},
          {"max_iterations", c.optimize.max_iterations},
          {"patience", c.optimize.patience},
          {"history_size", c.optimize.history_size},
          {"policy", c.policy == palette::SelectionPolicy::RankOne ? "rank-one" : "random-top-m"},
          {"local_rounds", c.local_rounds},
          {"global_rounds", c.global_rounds}};
}

/// Keys absent from `j` keep the values of `base`; unknown keys are rejected.
inline Config config_from_json(const json& j, Config c = {}) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "config must be a JSON object");
  static const std::set<std::string> known = {"beta",    "gamma",         "lambda",       "k_clusters",   "m_retrieval",
                                              "normalizer", "normalizer_constant", "seed", "chains",   "max_iterations",
                                              "patience", "history_size", "policy",       "local_rounds", "global_rounds"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) fail(ErrorCode::InvalidArgument, "unknown config key " + k);
  try {
    c.energy.beta = j.value("beta", c.energy.beta);
    c.energy.gamma = j.value("gamma", c.energy.gamma);
    c.energy.lambda = j.value("lambda", c.energy.lambda);
    c.energy.k_clusters = j.value("k_clusters", c.energy.k_clusters);
    c.energy.m_retrieval = j.value("m_retrieval", c.energy.m_retrieval);
    c.energy.normalizer_constant = j.value("normalizer_constant", c.energy.normalizer_constant);
    c.seed = j.value("seed", c.seed);
    c.optimize.chains = j.value("chains", c.optimize.chains);
    c.optimize.max_iterations = j.value("max_iterations", c.optimize.max_iterations);
    c.optimize.patience = j.value("patience", c.optimize.patience);
    c.optimize.history_size = j.value("history_size", c.optimize.history_size);
    c.local_rounds = j.value("local_rounds", c.local_rounds);
    c.global_rounds = j.value("global_rounds", c.global_rounds);
    if (j.contains("normalizer")) {
      const auto n = j.at("normalizer").get<std::string>();
      if (n != "raw" && n != "calibrated") fail(ErrorCode::InvalidArgument, "normalizer must be raw or calibrated");
      c.energy.normalizer = n == "raw" ? scene::NormalizerMode::Raw : scene::NormalizerMode::Calibrated;
    }
    if (j.contains("policy")) {
      const auto p = j.at("policy").get<std::string>();
      if (p != "rank-one" && p != "random-top-m") fail(ErrorCode::InvalidArgument, "policy must be rank-one or random-top-m");
      c.policy = p == "rank-one" ? palette::SelectionPolicy::RankOne : palette::SelectionPolicy::RandomTopM;
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  if (c.energy.m_retrieval < 1) fail(ErrorCode::InvalidArgument, "m_retrieval must be at least 1");
  if (c.energy.normalizer_constant <= 0.0) fail(ErrorCode::InvalidArgument, "normalizer_constant must be positive");
  return c;
}

// ------------------------------------------------------------ document

struct PartEntry {
  std::string label;
  std::string material;
  std::string swatch;
  ColorTheme theme;  // guide part theme the swatch was retrieved for
  double distance = 0.0;
  std::vector<std::string> components;
};

struct ObjectEntry {
  std::string id;
  std::string model;
  std::string category;
  std::string guide;
  std::string scheme;  // matched or overridden segmentation scheme
  ColorTheme theme;    // whole-object theme of the guide
  std::vector<PartEntry> parts;
};

/// Serialized colorization scheme of a scene.
struct SchemeDocument {
  std::string scene;
  std::vector<ObjectEntry> objects;
  json energy;  // null when no optimization ran
  json params;
};

inline json to_json(const SchemeDocument& d) {
  json objs = json::array();
  for (const auto& o : d.objects) {
    json parts = json::array();
    for (const auto& p : o.parts)
      parts.push_back({{"label", p.label},
                       {"material", p.material},
                       {"swatch", p.swatch},
                       {"theme", palette::to_json(p.theme)},
                       {"distance", p.distance},
                       {"components", p.components}});
    objs.push_back({{"id", o.id},
                    {"model", o.model},
                    {"category", o.category},
                    {"guide", o.guide},
                    {"scheme", o.scheme},
                    {"theme", palette::to_json(o.theme)},
                    {"parts", parts}});
  }
  return {{"scene", d.scene}, {"objects", objs}, {"energy", d.energy}, {"params", d.params}};
}

inline SchemeDocument scheme_document_from_json(const json& j) {
  SchemeDocument d;
  try {
    d.scene = j.at("scene").get<std::string>();
    for (const auto& o : j.at("objects")) {
      ObjectEntry e{o.at("id").get<std::string>(), o.at("model").get<std::string>(), o.at("category").get<std::string>(),
                    o.at("guide").get<std::string>(), o.at("scheme").get<std::string>(),
                    palette::theme_from_json(o.at("theme")), {}};
      for (const auto& p : o.at("parts"))
        e.parts.push_back({p.at("label").get<std::string>(), p.at("material").get<std::string>(),
                           p.at("swatch").get<std::string>(), palette::theme_from_json(p.at("theme")),
                           p.at("distance").get<double>(), p.at("components").get<std::vector<std::string>>()});
      d.objects.push_back(std::move(e));
    }
    d.energy = j.value("energy", json());
    d.params = j.value("params", json());
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("scheme document: ") + e.what());
  }
  return d;
}

/// Every scene object appears exactly once; every swatch exists.
inline void validate(const SchemeDocument& d, const Datastore& store) {
  std::map<std::string, int> seen;
  for (const auto& o : d.objects) {
    ++seen[o.id];
    for (const auto& p : o.parts)
      if (!store.swatches().find(p.swatch)) fail(ErrorCode::NotFound, "document references unknown swatch " + p.swatch);
  }
  if (!d.scene.empty()) {
    const auto& s = store.scene(d.scene);
    if (s.objects.size() != d.objects.size())
      fail(ErrorCode::InvalidArgument, "document covers " + std::to_string(d.objects.size()) + " of " +
                                           std::to_string(s.objects.size()) + " scene objects");
    for (const auto& o : s.objects)
      if (seen[o.id] != 1) fail(ErrorCode::InvalidArgument, "scene object " + o.id + " must appear exactly once");
  }
}

// --------------------------------------------------------- classifiers

inline fs::path classifier_path(const Datastore& store, const std::string& scheme_id) {
  return store.root() / "classifiers" / (scheme_id + ".json");
}

/// Trains one scheme on every train-split model annotated under it.
inline segmentation::SegmentationModel train_scheme(const Datastore& store, const std::string& scheme_id,
                                                    const Config& cfg = {}) {
  const auto& scheme = store.scheme(scheme_id);
  std::vector<segmentation::LabeledMesh> meshes;
  for (const auto& m : store.models()) {
    if (m.split != "train" || m.category != scheme.category) continue;
    auto it = m.schemes.find(scheme_id);
    if (it == m.schemes.end()) continue;
    meshes.push_back({m.id, store.load_mesh(m.id), it->second});
  }
  if (meshes.empty()) fail(ErrorCode::InsufficientData, "no training models annotated under " + scheme_id);
  segmentation::TrainingOptions opt;
  opt.local_rounds = cfg.local_rounds;
  opt.global_rounds = cfg.global_rounds;
  return segmentation::train_segmentation(meshes, scheme.label_names(), opt);
}

inline void save_classifier(const Datastore& store, const std::string& scheme_id,
                            const segmentation::SegmentationModel& model) {
  datastore::write_json(classifier_path(store, scheme_id), segmentation::to_json(model));
}

inline segmentation::SegmentationModel load_classifier(const Datastore& store, const std::string& scheme_id) {
  const auto p = classifier_path(store, scheme_id);
  if (!fs::exists(p))
    fail(ErrorCode::UntrainedModel, "no trained classifier for scheme " + scheme_id, {{"scheme", scheme_id}});
  return segmentation::segmentation_model_from_json(datastore::read_json(p));
}

/// Trains and saves every scheme that has training models; returns their ids.
inline std::vector<std::string> train_all(const Datastore& store, const Config& cfg = {},
                                          const std::vector<std::string>& only = {}) {
  std::vector<std::string> done;
  for (const auto& s : store.schemes()) {
    if (!only.empty() && std::find(only.begin(), only.end(), s.id) == only.end()) continue;
    save_classifier(store, s.id, train_scheme(store, s.id, cfg));
    done.push_back(s.id);
  }
  return done;
}

// -------------------------------------------------------------- engine

/// Caches meshes, classifiers and labelings across objects of one run.
class Engine {
 public:
  Engine(const Datastore& store, Config cfg) : store_(store), cfg_(std::move(cfg)) {}

  const Datastore& store() const { return store_; }
  const Config& config() const { return cfg_; }

  const geometry::TriangleMesh& mesh(const std::string& model_id) {
    auto it = meshes_.find(model_id);
    if (it == meshes_.end()) it = meshes_.emplace(model_id, store_.load_mesh(model_id)).first;
    return it->second;
  }

  const segmentation::ComponentLabeling& labeling(const std::string& model_id, const std::string& scheme_id) {
    const auto key = std::make_pair(model_id, scheme_id);
    auto it = labelings_.find(key);
    if (it != labelings_.end()) return it->second;
    auto cit = classifiers_.find(scheme_id);
    if (cit == classifiers_.end()) cit = classifiers_.emplace(scheme_id, load_classifier(store_, scheme_id)).first;
    return labelings_.emplace(key, segmentation::label_mesh(mesh(model_id), cit->second, cfg_.energy.lambda)).first->second;
  }

  /// Segments the model under the guide's scheme (unless the guide is
  /// single-material) and retrieves one swatch per part.
  ObjectEntry colorize(const std::string& object_id, const std::string& model_id, const palette::GuideObject& guide,
                       std::uint64_t stream, const std::string& scheme_override = {}) {
    const auto& model = store_.model(model_id);
    if (guide.category != model.category)
      fail(ErrorCode::CategoryMismatch, "guide " + guide.id + " is a " + guide.category + ", model " + model_id +
                                            " is a " + model.category);
    std::string scheme_id = scheme_override.empty() ? guide.scheme : scheme_override;
    const segmentation::ComponentLabeling* lab = nullptr;
    if (guide.parts.size() > 1) {  // a single-part guide covers every component without a classifier
      if (scheme_id.empty()) {
        json candidates = json::array();
        for (const auto* s : store_.schemes_for(model.category)) candidates.push_back(s->id);
        fail(ErrorCode::SchemeMismatch,
             "guide " + guide.id + " matches no stored segmentation of " + model.category + "; select one of " +
                 candidates.dump(),
             {{"candidates", candidates}});
      }
      lab = &labeling(model_id, scheme_id);
    }
    palette::ColorizeOptions opt;
    opt.m = cfg_.energy.m_retrieval;
    opt.policy = cfg_.policy;
    opt.seed = mix_seed(cfg_.seed, stream);
    const auto c = palette::colorize_object(mesh(model_id), lab, guide, store_.swatches(), opt);
    ObjectEntry e{object_id, model_id, model.category, guide.id, scheme_id, guide.theme, {}};
    for (const auto& p : c.parts) e.parts.push_back({p.label, p.material, p.swatch_id, p.part_theme, p.distance, p.components});
    return e;
  }

 private:
  const Datastore& store_;
  Config cfg_;
  std::map<std::string, geometry::TriangleMesh> meshes_;
  std::map<std::string, segmentation::SegmentationModel> classifiers_;
  std::map<std::pair<std::string, std::string>, segmentation::ComponentLabeling> labelings_;
};

// ------------------------------------------------------------ commands

/// One model colorized after one annotated image object.
inline SchemeDocument colorize_object(const Datastore& store, const std::string& model_id, const std::string& guide_id,
                                      const Config& cfg = {}, const std::string& scheme_override = {}) {
  Engine engine(store, cfg);
  SchemeDocument d;
  d.objects.push_back(engine.colorize(model_id, model_id, store.guide_object(guide_id), 0, scheme_override));
  d.params = to_json(cfg);
  return d;
}

/// The i-th scene object of a category follows the example's i-th object of
/// that category, cycling when the example has fewer.
inline SchemeDocument colorize_scene_by_example(const Datastore& store, const std::string& scene_id,
                                                const std::string& image_id, const Config& cfg = {}) {
  const auto& scene = store.scene(scene_id);
  const auto& img = store.image(image_id);
  std::map<std::string, std::vector<std::size_t>> by_category;
  for (std::size_t o = 0; o < img.objects.size(); ++o) by_category[img.objects[o].category].push_back(o);
  for (const auto& o : scene.objects)
    if (!by_category.count(o.category))
      fail(ErrorCode::MissingCategoryInExample, "example " + image_id + " has no " + o.category,
           {{"category", o.category}, {"image", image_id}});
  Engine engine(store, cfg);
  SchemeDocument d;
  d.scene = scene_id;
  std::map<std::string, std::size_t> used;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    const auto& pool = by_category[o.category];
    const std::size_t pick = pool[used[o.category]++ % pool.size()];
    d.objects.push_back(engine.colorize(o.id, o.model, store.guide_object(image_id, pick), i));
  }
  d.params = to_json(cfg);
  return d;
}

/// Scene graph over the store's annotated objects: candidates and theme
/// models come from images of the scene's type when it has any.
struct SceneProblem {
  scene::SceneGraph graph;
  scene::ThemeModels models;
  std::vector<std::string> warnings;
};

inline SceneProblem build_problem(const Datastore& store, const std::string& scene_id,
                                  const std::map<std::string, std::string>& pins = {}) {
  const auto& sc = store.scene(scene_id);
  std::optional<std::string> type = sc.scene;
  if (std::none_of(store.images().begin(), store.images().end(), [&](const auto& i) { return i.scene == sc.scene; }))
    type.reset();
  SceneProblem p;
  p.models = store.fit_theme_models(type, &p.warnings);
  for (const auto& [obj, _] : pins)
    if (std::none_of(sc.objects.begin(), sc.objects.end(), [&](const auto& o) { return o.id == obj; }))
      fail(ErrorCode::InvalidPin, "scene " + scene_id + " has no object " + obj, {{"object", obj}});
  std::vector<scene::SceneNode> nodes;
  for (const auto& o : sc.objects) {
    auto cands = store.candidates(o.category, type);
    if (cands.empty()) cands = store.candidates(o.category);
    scene::SceneNode n{o.id, o.category, std::move(cands), std::nullopt};
    if (auto it = pins.find(o.id); it != pins.end()) {
      auto pos = std::find_if(n.candidates.begin(), n.candidates.end(), [&](const auto& c) { return c.id == it->second; });
      if (pos == n.candidates.end())
        fail(ErrorCode::InvalidPin, it->second + " is not a candidate for " + o.id, {{"object", o.id}, {"state", it->second}});
      n.pinned = static_cast<std::size_t>(pos - n.candidates.begin());
    }
    nodes.push_back(std::move(n));
  }
  p.graph = scene::build_scene_graph(std::move(nodes), p.models);
  return p;
}

/// Node id -> candidate id of an assignment.
inline std::map<std::string, std::string> assignment_states(const scene::SceneGraph& g, const scene::Assignment& a) {
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) out[g.nodes[i].id] = g.nodes[i].candidates[a.state[i]].id;
  return out;
}

inline scene::Assignment assignment_from_states(const scene::SceneGraph& g,
                                                const std::map<std::string, std::string>& states) {
  scene::Assignment a;
  for (const auto& n : g.nodes) {
    auto it = states.find(n.id);
    if (it == states.end()) fail(ErrorCode::InvalidArgument, "assignment has no state for " + n.id);
    auto pos = std::find_if(n.candidates.begin(), n.candidates.end(), [&](const auto& c) { return c.id == it->second; });
    if (pos == n.candidates.end()) fail(ErrorCode::InvalidArgument, it->second + " is not a candidate for " + n.id);
    a.state.push_back(static_cast<std::size_t>(pos - n.candidates.begin()));
  }
  return a;
}

/// Colorizes every scene object after the image object its node is set to.
inline SchemeDocument document_for(const Datastore& store, const std::string& scene_id, const SceneProblem& p,
                                   const scene::Assignment& a, const ColorTheme& user, const Config& cfg) {
  Engine engine(store, cfg);
  const auto& sc = store.scene(scene_id);
  SchemeDocument d;
  d.scene = scene_id;
  for (std::size_t i = 0; i < sc.objects.size(); ++i) {
    const auto& o = sc.objects[i];
    const auto& cand = p.graph.nodes[i].candidates[a.state[i]];
    d.objects.push_back(engine.colorize(o.id, o.model, store.guide_object(cand.id), i));
  }
  d.energy = scene::to_json(scene::total_energy(p.graph, a, p.models, user, cfg.energy));
  d.params = to_json(cfg);
  d.params["theme"] = palette::to_json(user);
  return d;
}

struct Recommendation {
  SceneProblem problem;
  scene::OptimizeResult result;
  SchemeDocument document;
};

/// Solves the scene MRF under a target theme, then segments and textures
/// each object after its solved image object. `previous` warm-starts the
/// sampler (refinement).
inline Recommendation recommend(const Datastore& store, const std::string& scene_id, const ColorTheme& user,
                                const Config& cfg = {}, const std::map<std::string, std::string>& pins = {},
                                const std::map<std::string, std::string>* previous = nullptr) {
  palette::validate(user);
  Recommendation r;
  r.problem = build_problem(store, scene_id, pins);
  auto opt = cfg.optimize;
  opt.seed = cfg.seed;
  if (previous) {
    auto start = assignment_from_states(r.problem.graph, *previous);
    for (std::size_t i = 0; i < r.problem.graph.nodes.size(); ++i)
      if (r.problem.graph.nodes[i].pinned) start.state[i] = *r.problem.graph.nodes[i].pinned;
    r.result = scene::optimize(r.problem.graph, r.problem.models, user, cfg.energy, opt, &start);
  } else {
    r.result = scene::optimize(r.problem.graph, r.problem.models, user, cfg.energy, opt);
  }
  r.document = document_for(store, scene_id, r.problem, r.result.best, user, cfg);
  return r;
}

// ---------------------------------------------------------- evaluation

struct EvalRow {
  std::string model;
  std::string scheme;
  std::string config;  // "local" or "local+global"
  double one_minus_precision = 0.0;
  double rand = 0.0;
  double gce = 0.0;
  double lce = 0.0;
};

/// The scheme a test model is scored under: the one with the most labels,
/// ties by id.
inline std::string evaluation_scheme(const Datastore& store, const datastore::ModelAnnotation& m) {
  std::string best;
  std::size_t most = 0;
  for (const auto& [id, _] : m.schemes) {
    const auto n = store.scheme(id).labels.size();
    if (n > most) {
      most = n;
      best = id;
    }
  }
  return best;
}

/// Scores every test-split model with local-only and local+global voting.
inline std::vector<EvalRow> evaluate(const Datastore& store, const Config& cfg = {}) {
  std::vector<EvalRow> rows;
  std::map<std::string, segmentation::SegmentationModel> classifiers;
  for (const auto& m : store.models()) {
    if (m.split != "test") continue;
    const auto scheme_id = evaluation_scheme(store, m);
    if (scheme_id.empty()) continue;
    auto cit = classifiers.find(scheme_id);
    if (cit == classifiers.end()) cit = classifiers.emplace(scheme_id, load_classifier(store, scheme_id)).first;
    const auto mesh = store.load_mesh(m.id);
    const auto& names = cit->second.local.labels;  // evidence column order
    const auto truth = segmentation::labeling_from_map(mesh, names, m.schemes.at(scheme_id));
    const auto ev = segmentation::gather_evidence(mesh, cit->second);
    for (const auto& [name, mode] : {std::pair{"local", segmentation::VoteMode::LocalOnly},
                                     std::pair{"local+global", segmentation::VoteMode::Combined}}) {
      const auto lab = segmentation::label_from_evidence(mesh, names, ev, cfg.energy.lambda, mode);
      const auto ce = segmentation::consistency_error(truth, lab);
      rows.push_back({m.id, scheme_id, name, segmentation::one_minus_precision(truth, lab),
                      segmentation::rand_dissimilarity(truth, lab), ce.gce, ce.lce});
    }
  }
  return rows;
}

inline std::string to_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "model,scheme,config,1-precision,rand,GCE,LCE\n";
  for (const auto& r : rows)
    out << r.model << ',' << r.scheme << ',' << r.config << ',' << r.one_minus_precision << ',' << r.rand << ','
        << r.gce << ',' << r.lce << '\n';
  return out.str();
}

}  // namespace scenecolor::pipeline
