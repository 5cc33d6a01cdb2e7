#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scenecolor/segmentation/labeling.hpp"

namespace scenecolor::segmentation {

struct ConsistencyError {
  double gce = 0.0;
  double lce = 0.0;
};

namespace detail {

// Pairs (area, label_a, label_b) aligned by component id.
struct Aligned {
  std::vector<double> area;
  std::vector<std::string> a, b;
  double total = 0.0;
};

inline Aligned align(const ComponentLabeling& x, const ComponentLabeling& y) {
  if (x.components.size() != y.components.size())
    fail(ErrorCode::ComponentSetMismatch, "labelings cover different component sets");
  Aligned out;
  for (const auto& c : x.components) {
    const auto* other = y.find(c.component_id);
    if (!other) fail(ErrorCode::ComponentSetMismatch, "component " + c.component_id + " missing from one labeling");
    out.area.push_back(c.area);
    out.a.push_back(c.label);
    out.b.push_back(other->label);
    out.total += c.area;
  }
  if (out.total <= 0.0) fail(ErrorCode::InvalidArgument, "labelings have zero total area");
  return out;
}

}  // namespace detail

/// Area fraction whose label differs from ground truth.
inline double one_minus_precision(const ComponentLabeling& truth, const ComponentLabeling& predicted) {
  const auto al = detail::align(truth, predicted);
  double wrong = 0.0;
  for (std::size_t i = 0; i < al.area.size(); ++i)
    if (al.a[i] != al.b[i]) wrong += al.area[i];
  return wrong / al.total;
}

/// 1 - Rand index over component pairs weighted by the product of areas.
/// Computed from the contingency table; a single component scores 0.
inline double rand_dissimilarity(const ComponentLabeling& x, const ComponentLabeling& y) {
  const auto al = detail::align(x, y);
  std::map<std::string, double> ma, mb;
  std::map<std::pair<std::string, std::string>, double> mab;
  double sq = 0.0;
  for (std::size_t i = 0; i < al.area.size(); ++i) {
    ma[al.a[i]] += al.area[i];
    mb[al.b[i]] += al.area[i];
    mab[{al.a[i], al.b[i]}] += al.area[i];
    sq += al.area[i] * al.area[i];
  }
  // Pair mass within a cell, excluding self pairs: (sum^2 - sum of squares) / 2.
  auto within = [&](const auto& cells, auto key_of) {
    std::map<decltype(key_of(std::size_t{0})), double> self;
    for (std::size_t i = 0; i < al.area.size(); ++i) self[key_of(i)] += al.area[i] * al.area[i];
    double s = 0.0;
    for (const auto& [k, m] : cells) s += 0.5 * (m * m - self[k]);
    return s;
  };
  const double all = 0.5 * (al.total * al.total - sq);
  if (all <= 0.0) return 0.0;
  const double same_a = within(ma, [&](std::size_t i) { return al.a[i]; });
  const double same_b = within(mb, [&](std::size_t i) { return al.b[i]; });
  const double same_ab = within(mab, [&](std::size_t i) { return std::make_pair(al.a[i], al.b[i]); });
  const double disagree = same_a + same_b - 2.0 * same_ab;
  return std::clamp(disagree / all, 0.0, 1.0);
}

/// Global and local consistency error with label classes as regions and
/// component areas as element weights.
inline ConsistencyError consistency_error(const ComponentLabeling& x, const ComponentLabeling& y) {
  const auto al = detail::align(x, y);
  std::map<std::string, double> ma, mb;
  std::map<std::pair<std::string, std::string>, double> mab;
  for (std::size_t i = 0; i < al.area.size(); ++i) {
    ma[al.a[i]] += al.area[i];
    mb[al.b[i]] += al.area[i];
    mab[{al.a[i], al.b[i]}] += al.area[i];
  }
  double e_ab = 0.0, e_ba = 0.0, local = 0.0;
  for (std::size_t i = 0; i < al.area.size(); ++i) {
    const double ra = ma[al.a[i]], rb = mb[al.b[i]], both = mab[{al.a[i], al.b[i]}];
    const double lab = (ra - both) / ra, lba = (rb - both) / rb;
    e_ab += al.area[i] * lab;
    e_ba += al.area[i] * lba;
    local += al.area[i] * std::min(lab, lba);
  }
  return {std::min(e_ab, e_ba) / al.total, local / al.total};
}

}  // namespace scenecolor::segmentation
