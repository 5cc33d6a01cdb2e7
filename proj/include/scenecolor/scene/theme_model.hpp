#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scenecolor/palette/theme.hpp"
#include "scenecolor/scene/gmm.hpp"

namespace scenecolor::scene {

using palette::ColorTheme;
using palette::kThemeSize;

/// One 3-d GMM per palette entry; a theme scores the sum of entry log-densities.
struct CategoryThemeModel {
  std::string category;
  std::array<Gmm, kThemeSize> entries;
  std::size_t training_size = 0;

  double log_density(const ColorTheme& t) const {
    double s = 0.0;
    for (std::size_t k = 0; k < kThemeSize; ++k)
      s += entries[k].log_density(Eigen::Vector3d(t.colors[k][0], t.colors[k][1], t.colors[k][2]));
    return s;
  }
};

/// Canonical key for an unordered category pair.
inline std::pair<std::string, std::string> pair_key(const std::string& a, const std::string& b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

/// 30-d vector of two themes; `first` is the theme of the category that sorts first.
inline VectorXd concat_themes(const ColorTheme& first, const ColorTheme& second) {
  VectorXd v(6 * kThemeSize);
  const auto a = first.flat(), b = second.flat();
  for (std::size_t i = 0; i < 3 * kThemeSize; ++i) {
    v[static_cast<Eigen::Index>(i)] = a[i];
    v[static_cast<Eigen::Index>(i + 3 * kThemeSize)] = b[i];
  }
  return v;
}

/// One GMM over concatenated theme pairs of two categories.
struct PairThemeModel {
  std::string first_category;
  std::string second_category;  // first_category <= second_category
  Gmm gmm;
  std::size_t training_size = 0;

  /// Themes given with their categories; swapped into canonical order.
  double log_density(const std::string& cat_a, const ColorTheme& a, const std::string& cat_b,
                     const ColorTheme& b) const {
    if (pair_key(cat_a, cat_b) != std::make_pair(first_category, second_category))
      fail(ErrorCode::CategoryMismatch, "pair model " + first_category + "+" + second_category + " queried with " +
                                            cat_a + "+" + cat_b);
    return cat_a <= cat_b ? gmm.log_density(concat_themes(a, b)) : gmm.log_density(concat_themes(b, a));
  }
};

struct ThemeModelOptions {
  std::size_t category_kernels = 16;
  std::size_t pair_kernels = 8;
  double entry_ridge = 1.0;  // RGB units squared
  double pair_ridge = 1e-3;
  std::uint64_t seed = 0x7e11;
};

inline CategoryThemeModel fit_category_model(const std::string& category, const std::vector<ColorTheme>& themes,
                                             const ThemeModelOptions& opt = {},
                                             std::vector<std::string>* warnings = nullptr) {
  if (themes.empty()) fail(ErrorCode::InsufficientData, "no training themes for category " + category);
  CategoryThemeModel m;
  m.category = category;
  m.training_size = themes.size();
  for (std::size_t k = 0; k < kThemeSize; ++k) {
    std::vector<VectorXd> x;
    for (const auto& t : themes) x.push_back(Eigen::Vector3d(t.colors[k][0], t.colors[k][1], t.colors[k][2]));
    GmmOptions g;
    g.kernels = opt.category_kernels;
    g.covariance = CovarianceType::Full;
    g.ridge = opt.entry_ridge;
    g.seed = mix_seed(opt.seed, k);
    auto fit = fit_gmm(x, g);
    if (warnings && k == 0)
      for (auto& w : fit.warnings) warnings->push_back(category + ": " + w);
    m.entries[k] = std::move(fit.model);
  }
  return m;
}

/// Pairs must already be in canonical order (theme of `first` category first).
inline PairThemeModel fit_pair_model(const std::string& first, const std::string& second,
                                     const std::vector<std::pair<ColorTheme, ColorTheme>>& pairs,
                                     const ThemeModelOptions& opt = {}, std::vector<std::string>* warnings = nullptr) {
  if (pairs.empty()) fail(ErrorCode::InsufficientData, "no training pairs for " + first + "+" + second);
  if (first > second) fail(ErrorCode::InvalidArgument, "pair categories must be in canonical order");
  std::vector<VectorXd> x;
  for (const auto& [a, b] : pairs) x.push_back(concat_themes(a, b));
  GmmOptions g;
  g.kernels = opt.pair_kernels;
  g.covariance = CovarianceType::Diagonal;
  g.ridge = opt.pair_ridge;
  g.seed = opt.seed;
  g.select_by_bic = true;
  auto fit = fit_gmm(x, g);
  if (warnings)
    for (auto& w : fit.warnings) warnings->push_back(first + "+" + second + ": " + w);
  return {first, second, std::move(fit.model), pairs.size()};
}

/// All fitted models for one scene type.
struct ThemeModels {
  std::map<std::string, CategoryThemeModel> categories;
  std::map<std::pair<std::string, std::string>, PairThemeModel> pairs;

  const CategoryThemeModel* category(const std::string& c) const {
    auto it = categories.find(c);
    return it == categories.end() ? nullptr : &it->second;
  }
  const PairThemeModel* pair(const std::string& a, const std::string& b) const {
    auto it = pairs.find(pair_key(a, b));
    return it == pairs.end() ? nullptr : &it->second;
  }
};

inline nlohmann::json to_json(const ThemeModels& m) {
  nlohmann::json cats = nlohmann::json::object(), pairs = nlohmann::json::array();
  for (const auto& [name, c] : m.categories) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& g : c.entries) entries.push_back(to_json(g));
    cats[name] = {{"training_size", c.training_size}, {"entries", entries}};
  }
  for (const auto& [key, p] : m.pairs)
    pairs.push_back({{"first", p.first_category},
                     {"second", p.second_category},
                     {"training_size", p.training_size},
                     {"gmm", to_json(p.gmm)}});
  return {{"categories", cats}, {"pairs", pairs}};
}

inline ThemeModels theme_models_from_json(const nlohmann::json& j) {
  ThemeModels m;
  for (const auto& [name, c] : j.at("categories").items()) {
    CategoryThemeModel cm;
    cm.category = name;
    cm.training_size = c.value("training_size", std::size_t{0});
    const auto& entries = c.at("entries");
    if (entries.size() != kThemeSize) fail(ErrorCode::ParseError, "category model needs 5 entry mixtures");
    for (std::size_t k = 0; k < kThemeSize; ++k) cm.entries[k] = gmm_from_json(entries[k]);
    m.categories.emplace(name, std::move(cm));
  }
  for (const auto& p : j.at("pairs")) {
    PairThemeModel pm{p.at("first").get<std::string>(), p.at("second").get<std::string>(), gmm_from_json(p.at("gmm")),
                      p.value("training_size", std::size_t{0})};
    m.pairs.emplace(pair_key(pm.first_category, pm.second_category), std::move(pm));
  }
  return m;
}

}  // namespace scenecolor::scene
