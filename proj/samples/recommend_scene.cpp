// Builds the procedural fixture store, trains the part classifiers, then
// recommends a colorization of one scene for a target theme.
//
//   recommend_scene [store-dir] [theme] [scene]

#include <iostream>

#include "scenecolor/fixture/corpus.hpp"
#include "scenecolor/pipeline/pipeline.hpp"

namespace sc = scenecolor;

int main(int argc, char** argv) {
  const std::filesystem::path root = argc > 1 ? argv[1] : "scenecolor-sample-store";
  const std::string theme = argc > 2 ? argv[2] : "#be282d,#5a1414,#c8aa5a,#8c3223,#323246";
  const std::string scene = argc > 3 ? argv[3] : "dining-10";
  try {
    if (!std::filesystem::exists(root / "manifests")) sc::fixture::generate_corpus(root);
    auto store = sc::datastore::Datastore::open(root);
    if (!std::filesystem::exists(sc::pipeline::classifier_path(store, store.schemes().front().id)))
      sc::pipeline::train_all(store);

    const auto r = sc::pipeline::recommend(store, scene, sc::palette::parse_theme(theme));
    std::cout << "scene " << scene << ", energy " << r.result.energy.total << " (data " << r.result.energy.data
              << ", smoothness " << r.result.energy.smoothness << ", constraint " << r.result.energy.constraint
              << ")\n";
    for (const auto& o : r.document.objects) {
      std::cout << "  " << o.id << " <- " << o.guide;
      for (const auto& p : o.parts) std::cout << "  " << p.label << ":" << p.swatch;
      std::cout << "\n";
    }
    std::cout << r.result.history.size() << " alternatives kept; acceptance rate " << r.result.acceptance_rate()
              << "\n";
  } catch (const sc::Error& e) {
    std::cerr << e.to_json().dump() << "\n";
    return 2;
  }
  return 0;
}
