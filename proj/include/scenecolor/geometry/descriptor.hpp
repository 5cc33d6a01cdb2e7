#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "scenecolor/geometry/features.hpp"

namespace scenecolor::geometry {

/// Weighted summary of one scalar signal over a component.
struct SignalSummary {
  static constexpr std::size_t kBins = 9;  // odd, so zero curvature sits mid-bin

  double mean = 0.0;
  double median = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;  // excess
  std::array<double, kBins> histogram{};
};

/// Gaussian curvature (per vertex), SDF and AGD (per face) summaries.
struct ComponentDescriptor {
  static constexpr std::size_t kDimension = 3 * (5 + SignalSummary::kBins);

  SignalSummary curvature;
  SignalSummary sdf;
  SignalSummary agd;

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(kDimension);
    for (const SignalSummary* s : {&curvature, &sdf, &agd}) {
      out.insert(out.end(), {s->mean, s->median, s->variance, s->skewness, s->kurtosis});
      out.insert(out.end(), s->histogram.begin(), s->histogram.end());
    }
    return out;
  }
};

/// Moments of (value, weight) samples; constant signals report zero spread.
/// `to_unit` maps a value into [0, 1] for histogramming.
template <typename ToUnit>
SignalSummary summarize(const std::vector<std::pair<double, double>>& samples, ToUnit to_unit) {
  SignalSummary out;
  double w = 0.0;
  for (const auto& [v, wt] : samples) {
    out.mean += wt * v;
    w += wt;
  }
  if (w <= 0.0) return out;
  out.mean /= w;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (const auto& [v, wt] : samples) {
    const double d = v - out.mean;
    m2 += wt * d * d;
    m3 += wt * d * d * d;
    m4 += wt * d * d * d * d;
  }
  m2 /= w;
  m3 /= w;
  m4 /= w;
  if (m2 <= 1e-14 * std::max(out.mean * out.mean, 1e-300)) {
    out.variance = 0.0;
  } else {
    out.variance = m2;
    out.skewness = m3 / std::pow(m2, 1.5);
    out.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  out.median = detail::weighted_median(samples);
  for (const auto& [v, wt] : samples) {
    const double u = std::clamp(to_unit(v), 0.0, 1.0);
    const auto bin = std::min(SignalSummary::kBins - 1, static_cast<std::size_t>(u * SignalSummary::kBins));
    out.histogram[bin] += wt / w;
  }
  return out;
}

inline ComponentDescriptor component_descriptor(const TriangleMesh& mesh, const MeshSignals& s,
                                                const Component& component) {
  const double scale = s.scale > 0.0 ? s.scale : 1.0;
  std::vector<std::pair<double, double>> curv, sdf, agd;
  std::map<std::size_t, double> vertex_weight;
  for (std::size_t t : component.triangle_ids) {
    sdf.emplace_back(s.sdf[t], s.face_area[t]);
    agd.emplace_back(s.agd[t], s.face_area[t]);
    for (std::size_t v : mesh.triangles[t]) vertex_weight[v] += s.face_area[t] / 3.0;
  }
  for (const auto& [v, w] : vertex_weight) curv.emplace_back(s.vertex_gaussian[v], w);

  ComponentDescriptor d;
  d.curvature = summarize(curv, [&](double k) { return 0.5 + std::atan(k * scale * scale) / detail::kPi; });
  d.sdf = summarize(sdf, [&](double x) { return x / (2.0 * scale); });
  d.agd = summarize(agd, [&](double x) { return x / (3.0 * scale); });
  return d;
}

/// Descriptor matrix, one row per component in mesh order.
inline FeatureMatrix component_descriptors(const TriangleMesh& mesh, const MeshSignals& s) {
  FeatureMatrix m(mesh.components.size(), ComponentDescriptor::kDimension);
  for (std::size_t c = 0; c < mesh.components.size(); ++c) {
    const auto row = component_descriptor(mesh, s, mesh.components[c]).flatten();
    std::copy(row.begin(), row.end(), m.row(c).begin());
  }
  for (auto& x : m.data)
    if (!std::isfinite(x)) x = 0.0;
  return m;
}

inline std::string descriptor_fingerprint() {
  return "component-descriptor/v1:curvature,sdf,agd:moments5+hist" + std::to_string(SignalSummary::kBins);
}

}  // namespace scenecolor::geometry
