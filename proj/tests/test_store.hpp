#pragma once

#include <unistd.h>

#include "scenecolor/fixture/corpus.hpp"
#include "scenecolor/pipeline/pipeline.hpp"

namespace scenecolor::testing {

/// Generated and trained fixture store under a per-process temp directory.
inline std::filesystem::path trained_store_copy(const std::string& tag) {
  namespace fs = std::filesystem;
  static const fs::path master = [] {
    const auto root = fs::temp_directory_path() / ("scenecolor-master-" + std::to_string(::getpid()));
    fs::remove_all(root);
    const auto store = fixture::generate_corpus(root);
    pipeline::train_all(store);
    return root;
  }();
  static const struct Cleanup {
    fs::path root;
    ~Cleanup() { fs::remove_all(root); }
  } cleanup{master};
  const auto copy = fs::temp_directory_path() / ("scenecolor-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(copy);
  fs::copy(master, copy, fs::copy_options::recursive);
  return copy;
}

}  // namespace scenecolor::testing
