#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "scenecolor/geometry/features.hpp"

namespace scenecolor::geometry {

static_assert(std::endian::native == std::endian::little, "feature matrices are stored little-endian");

/// Writes `<base>.bin` (row-major float64, little-endian) and `<base>.json`
/// (shape, dtype, registry fingerprint and block layout).
inline void write_feature_matrix(const std::filesystem::path& base, const FeatureMatrix& m,
                                 const FeatureRegistry& reg = {}) {
  const auto bin = std::filesystem::path(base.string() + ".bin");
  const auto hdr = std::filesystem::path(base.string() + ".json");
  std::ofstream out(bin, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + bin.string());
  out.write(reinterpret_cast<const char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * sizeof(double)));

  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t b = 0; b < kNumFeatureBlocks; ++b) {
    const auto off = reg.offset(static_cast<FeatureBlock>(b));
    if (off == FeatureRegistry::npos) continue;
    blocks.push_back({{"name", FeatureRegistry::kBlockNames[b]}, {"offset", off}, {"dim", FeatureRegistry::kBlockDims[b]}});
  }
  nlohmann::json j = {{"rows", m.rows},           {"cols", m.cols},
                      {"dtype", "float64-le"},     {"order", "row-major"},
                      {"fingerprint", reg.fingerprint()}, {"blocks", blocks},
                      {"data", bin.filename().string()}};
  std::ofstream(hdr) << j.dump(2) << '\n';
}

inline FeatureMatrix read_feature_matrix(const std::filesystem::path& base, std::string* fingerprint = nullptr) {
  std::ifstream hdr(base.string() + ".json");
  if (!hdr) fail(ErrorCode::Io, "missing feature header for " + base.string());
  const auto j = nlohmann::json::parse(hdr);
  FeatureMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  std::ifstream in(base.string() + ".bin", std::ios::binary);
  in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  if (!in) fail(ErrorCode::ParseError, "truncated feature matrix " + base.string());
  if (fingerprint) *fingerprint = j.at("fingerprint").get<std::string>();
  return m;
}

}  // namespace scenecolor::geometry
