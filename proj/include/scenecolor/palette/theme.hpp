#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenecolor/core/error.hpp"
#include "scenecolor/core/random.hpp"

namespace scenecolor::palette {

using Rgb = std::array<double, 3>;
using Rgb8 = std::array<std::uint8_t, 3>;

inline constexpr std::size_t kThemeSize = 5;

/// Five RGB colors ordered by descending source-cluster population.
struct ColorTheme {
  std::array<Rgb, kThemeSize> colors{};
  std::array<double, kThemeSize> share{};  // population fraction; 0 for padding

  /// The 15-d vector view used by the theme models.
  std::array<double, 3 * kThemeSize> flat() const {
    std::array<double, 3 * kThemeSize> out{};
    for (std::size_t k = 0; k < kThemeSize; ++k)
      for (std::size_t c = 0; c < 3; ++c) out[3 * k + c] = colors[k][c];
    return out;
  }

  static ColorTheme uniform(const Rgb& c) {
    ColorTheme t;
    t.colors.fill(c);
    t.share = {1.0, 0.0, 0.0, 0.0, 0.0};
    return t;
  }

  bool operator==(const ColorTheme& o) const { return colors == o.colors; }
};

inline double color_distance(const Rgb& a, const Rgb& b) {
  const double dr = a[0] - b[0], dg = a[1] - b[1], db = a[2] - b[2];
  return std::sqrt(dr * dr + dg * dg + db * db);
}

/// Sum over query entries of the distance to the nearest candidate entry.
/// Directional: D(a, b) and D(b, a) generally differ.
inline double theme_distance(const ColorTheme& query, const ColorTheme& candidate) {
  double d = 0.0;
  for (const auto& q : query.colors) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : candidate.colors) best = std::min(best, color_distance(q, c));
    d += best;
  }
  return d;
}

struct KMeansOptions {
  std::size_t k = 50;
  std::size_t max_iterations = 100;
  double tolerance = 1e-4;  // relative change in inertia
  std::uint64_t seed = 0x5eed;
};

namespace detail {

inline double sq(const Rgb& a, const Rgb& b) {
  const double dr = a[0] - b[0], dg = a[1] - b[1], db = a[2] - b[2];
  return dr * dr + dg * dg + db * db;
}

// Index of the weighted sample hit by a uniform draw in [0, total).
inline std::size_t weighted_pick(Rng& rng, std::span<const double> weight, double total) {
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    if (u < weight[i]) return i;
    u -= weight[i];
  }
  for (std::size_t i = weight.size(); i-- > 0;)
    if (weight[i] > 0.0) return i;
  return 0;
}

}  // namespace detail

/// Weighted k-means over distinct colors, then the five most populated
/// clusters. Fewer than five clusters are padded with the largest centroid.
inline ColorTheme extract_theme(std::span<const Rgb8> pixels, const KMeansOptions& opt = {}) {
  if (pixels.size() < kThemeSize)
    fail(ErrorCode::TooFewPixels, "theme extraction needs at least 5 pixels", {{"pixels", pixels.size()}});
  if (opt.k < kThemeSize) fail(ErrorCode::InvalidArgument, "cluster count must be at least 5");

  std::map<std::uint32_t, double> counts;
  for (const auto& p : pixels) counts[(std::uint32_t{p[0]} << 16) | (std::uint32_t{p[1]} << 8) | p[2]] += 1.0;
  std::vector<Rgb> points;
  std::vector<double> weight;
  for (const auto& [key, n] : counts) {
    points.push_back({double((key >> 16) & 255), double((key >> 8) & 255), double(key & 255)});
    weight.push_back(n);
  }
  const std::size_t n = points.size();

  // k-means++ seeding; stops early once every point coincides with a center.
  Rng rng(opt.seed);
  std::vector<Rgb> centers;
  centers.push_back(points[detail::weighted_pick(rng, weight, static_cast<double>(pixels.size()))]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = detail::sq(points[i], centers[0]);
  while (centers.size() < opt.k) {
    std::vector<double> mass(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += (mass[i] = weight[i] * d2[i]);
    if (total <= 0.0) break;
    centers.push_back(points[detail::weighted_pick(rng, mass, total)]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], detail::sq(points[i], centers.back()));
  }

  const std::size_t k = centers.size();
  std::vector<std::size_t> assign(n, 0);
  std::vector<double> population(k, 0.0);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = detail::sq(points[i], centers[c]);
        if (d < best) {
          best = d;
          assign[i] = c;
        }
      }
      inertia += weight[i] * best;
    }
    std::vector<Rgb> sum(k, Rgb{0, 0, 0});
    std::fill(population.begin(), population.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      population[assign[i]] += weight[i];
      for (std::size_t ch = 0; ch < 3; ++ch) sum[assign[i]][ch] += weight[i] * points[i][ch];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (population[c] > 0.0)
        for (std::size_t ch = 0; ch < 3; ++ch) centers[c][ch] = sum[c][ch] / population[c];
    if (inertia == 0.0 || previous - inertia <= opt.tolerance * previous) break;
    previous = inertia;
  }
  // Final assignment against the updated centers fixes the populations.
  std::fill(population.begin(), population.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double d = detail::sq(points[i], centers[c]);
      if (d < best) {
        best = d;
        assign[i] = c;
      }
    }
    population[assign[i]] += weight[i];
  }

  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < k; ++c)
    if (population[c] > 0.0) order.push_back(c);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (population[a] != population[b]) return population[a] > population[b];
    return centers[a] < centers[b];
  });
  ColorTheme theme;
  const double total = static_cast<double>(pixels.size());
  for (std::size_t e = 0; e < kThemeSize; ++e) {
    if (e < order.size()) {
      theme.colors[e] = centers[order[e]];
      theme.share[e] = population[order[e]] / total;
    } else {
      theme.colors[e] = centers[order[0]];
      theme.share[e] = 0.0;
    }
  }
  return theme;
}

inline std::string to_hex(const Rgb& c) {
  char buf[8];
  auto ch = [](double v) { return static_cast<unsigned>(std::clamp(std::lround(v), 0L, 255L)); };
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", ch(c[0]), ch(c[1]), ch(c[2]));
  return buf;
}

inline Rgb from_hex(const std::string& s) {
  std::string h = s;
  if (!h.empty() && h[0] == '#') h.erase(0, 1);
  if (h.size() != 6 || h.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
    fail(ErrorCode::InvalidArgument, "bad hex color '" + s + "'");
  const unsigned long v = std::stoul(h, nullptr, 16);
  return {double((v >> 16) & 255), double((v >> 8) & 255), double(v & 255)};
}

/// Parses "#rrggbb,#rrggbb,..." with exactly five entries.
inline ColorTheme parse_theme(const std::string& text) {
  ColorTheme t;
  std::size_t start = 0, k = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    if (k >= kThemeSize) fail(ErrorCode::InvalidArgument, "theme must have exactly 5 colors");
    t.colors[k++] = from_hex(text.substr(start, end - start));
    start = end + 1;
  }
  if (k != kThemeSize) fail(ErrorCode::InvalidArgument, "theme must have exactly 5 colors");
  t.share.fill(1.0 / kThemeSize);
  return t;
}

inline void validate(const ColorTheme& t) {
  for (const auto& c : t.colors)
    for (double v : c)
      if (!(v >= 0.0 && v <= 255.0)) fail(ErrorCode::InvalidArgument, "theme channel outside [0, 255]");
}

/// Serialized as 5 x [r, g, b].
inline nlohmann::json to_json(const ColorTheme& t) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& c : t.colors) a.push_back({c[0], c[1], c[2]});
  return a;
}

inline ColorTheme theme_from_json(const nlohmann::json& j) {
  ColorTheme t;
  if (j.is_string()) return parse_theme(j.get<std::string>());
  if (!j.is_array() || j.size() != kThemeSize) fail(ErrorCode::InvalidArgument, "theme must be 5 colors");
  for (std::size_t k = 0; k < kThemeSize; ++k) {
    if (j[k].is_string()) {
      t.colors[k] = from_hex(j[k].get<std::string>());
    } else {
      if (!j[k].is_array() || j[k].size() != 3) fail(ErrorCode::InvalidArgument, "theme color must be [r, g, b]");
      for (std::size_t c = 0; c < 3; ++c) {
        if (!j[k][c].is_number()) fail(ErrorCode::InvalidArgument, "theme channel must be numeric");
        t.colors[k][c] = j[k][c].get<double>();
      }
    }
  }
  t.share.fill(1.0 / kThemeSize);
  validate(t);
  return t;
}

}  // namespace scenecolor::palette
