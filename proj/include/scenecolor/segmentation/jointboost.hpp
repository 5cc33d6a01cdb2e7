#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenecolor/core/error.hpp"
#include "scenecolor/geometry/features.hpp"

namespace scenecolor::segmentation {

using geometry::FeatureMatrix;

/// Regression stump shared by a subset of classes. Classes in the subset
/// respond `above` or `below` depending on the threshold test; every other
/// class gets its own constant.
struct SharedStump {
  std::size_t feature = 0;
  double threshold = 0.0;
  double above = 0.0;
  double below = 0.0;
  std::vector<bool> sharing;
  std::vector<double> constant;

  double response(double value, std::size_t c) const {
    if (sharing[c]) return value > threshold ? above : below;
    return constant[c];
  }
};

/// Additive multiclass model F_c(x) = sum of stump responses.
struct JointBoostModel {
  std::vector<std::string> labels;
  std::size_t feature_dimension = 0;
  std::string fingerprint;
  std::vector<SharedStump> stumps;
  std::vector<double> loss_history;  // exponential loss before round 1, then after each round

  std::size_t num_classes() const { return labels.size(); }
  std::size_t rounds_trained() const { return stumps.size(); }

  std::vector<double> scores(std::span<const double> row) const {
    if (row.size() != feature_dimension)
      fail(ErrorCode::DimensionMismatch, "feature row has " + std::to_string(row.size()) + " entries, model expects " +
                                             std::to_string(feature_dimension));
    std::vector<double> f(labels.size(), 0.0);
    for (const auto& s : stumps)
      for (std::size_t c = 0; c < f.size(); ++c) f[c] += s.response(row[s.feature], c);
    return f;
  }

  /// Softmax of the additive scores, so they can be mixed with other votes.
  std::vector<double> probabilities(std::span<const double> row) const {
    auto f = scores(row);
    const double mx = *std::max_element(f.begin(), f.end());
    double z = 0.0;
    for (double& v : f) z += (v = std::exp(v - mx));
    for (double& v : f) v /= z;
    return f;
  }

  /// Argmax with ties to the smallest label index.
  std::size_t predict(std::span<const double> row) const {
    const auto f = scores(row);
    return static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
  }
};

/// Model that always answers its only label; used for one-part schemes.
inline JointBoostModel constant_model(std::string label, std::size_t feature_dimension, std::string fingerprint) {
  JointBoostModel m;
  m.labels = {std::move(label)};
  m.feature_dimension = feature_dimension;
  m.fingerprint = std::move(fingerprint);
  return m;
}

struct JointBoostOptions {
  std::size_t rounds = 200;
  std::size_t max_thresholds = 64;  // candidate cuts per feature, quantile spaced
};

namespace detail {

struct TrainingSet {
  FeatureMatrix x;
  std::vector<std::size_t> y;
  std::vector<double> w;
};

// Merges identical (row, label) pairs and sorts rows lexicographically, so
// the model does not depend on row order or on duplicated rows.
inline TrainingSet canonicalize(const FeatureMatrix& x, std::span<const std::size_t> y, std::span<const double> w) {
  std::vector<std::size_t> order(x.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    const auto ra = x.row(a), rb = x.row(b);
    if (auto cmp = std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end()); cmp) return true;
    if (std::lexicographical_compare(rb.begin(), rb.end(), ra.begin(), ra.end())) return false;
    return y[a] < y[b];
  };
  std::stable_sort(order.begin(), order.end(), less);
  TrainingSet out;
  out.x.cols = x.cols;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (k > 0) {
      const std::size_t p = order[k - 1];
      if (y[p] == y[i] && std::equal(x.row(p).begin(), x.row(p).end(), x.row(i).begin())) {
        out.w.back() += w[i];
        continue;
      }
    }
    out.x.data.insert(out.x.data.end(), x.row(i).begin(), x.row(i).end());
    out.y.push_back(y[i]);
    out.w.push_back(w[i]);
    ++out.x.rows;
  }
  return out;
}

// Weighted squared error of the best constant fit (z in {-1, +1}).
inline double region_error(double w, double wz) { return w > 0.0 ? w - wz * wz / w : 0.0; }

}  // namespace detail

/// Stage-wise JointBoost with greedy forward search over sharing subsets.
/// `sample_weight` need not be normalized. Every round adds one stump.
inline JointBoostModel train_jointboost(const FeatureMatrix& features, std::span<const std::size_t> labels,
                                        std::span<const double> sample_weight, std::vector<std::string> label_names,
                                        std::string fingerprint, const JointBoostOptions& opt = {}) {
  if (labels.size() != features.rows || sample_weight.size() != features.rows)
    fail(ErrorCode::DimensionMismatch, "labels and weights must have one entry per feature row");
  if (opt.rounds < 1) fail(ErrorCode::InvalidArgument, "at least one boosting round required");
  const std::size_t nc = label_names.size();
  std::vector<bool> present(nc, false);
  for (std::size_t l : labels) {
    if (l >= nc) fail(ErrorCode::InvalidArgument, "label index out of range");
    present[l] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2)
    fail(ErrorCode::SingleClass, "training set needs at least two distinct labels");

  const auto data = detail::canonicalize(features, labels, sample_weight);
  const std::size_t n = data.x.rows, nf = data.x.cols;
  const double wsum = std::accumulate(data.w.begin(), data.w.end(), 0.0);

  // weight[c][i] and sign z[c][i] = +1 when sample i belongs to class c.
  std::vector<std::vector<double>> weight(nc, std::vector<double>(n));
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t i = 0; i < n; ++i) weight[c][i] = data.w[i] / wsum;
  auto z = [&](std::size_t c, std::size_t i) { return data.y[i] == c ? 1.0 : -1.0; };

  // Presorted order and quantile-spaced candidate cuts per feature.
  struct Cuts {
    std::vector<std::size_t> order;
    std::vector<std::size_t> split_after;  // position in `order`: cut between split_after and split_after+1
    std::vector<double> threshold;
  };
  std::vector<Cuts> cuts(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    auto& cf = cuts[f];
    cf.order.resize(n);
    std::iota(cf.order.begin(), cf.order.end(), std::size_t{0});
    std::stable_sort(cf.order.begin(), cf.order.end(),
                     [&](std::size_t a, std::size_t b) { return data.x(a, f) < data.x(b, f); });
    std::vector<std::size_t> all;
    for (std::size_t k = 0; k + 1 < n; ++k)
      if (data.x(cf.order[k], f) < data.x(cf.order[k + 1], f)) all.push_back(k);
    if (all.size() > opt.max_thresholds) {
      std::vector<std::size_t> pick;
      for (std::size_t q = 0; q < opt.max_thresholds; ++q)
        pick.push_back(all[(2 * q + 1) * all.size() / (2 * opt.max_thresholds)]);
      all = std::move(pick);
    }
    for (std::size_t k : all) {
      cf.split_after.push_back(k);
      cf.threshold.push_back(0.5 * (data.x(cf.order[k], f) + data.x(cf.order[k + 1], f)));
    }
  }

  JointBoostModel model;
  model.labels = std::move(label_names);
  model.feature_dimension = nf;
  model.fingerprint = std::move(fingerprint);
  auto loss = [&] {
    double l = 0.0;
    for (const auto& wc : weight) l += std::accumulate(wc.begin(), wc.end(), 0.0);
    return l;
  };
  model.loss_history.push_back(loss());

  std::vector<double> total_w(nc), total_wz(nc), alone(nc);
  for (std::size_t round = 0; round < opt.rounds; ++round) {
    for (std::size_t c = 0; c < nc; ++c) {
      total_w[c] = total_wz[c] = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        total_w[c] += weight[c][i];
        total_wz[c] += weight[c][i] * z(c, i);
      }
      alone[c] = detail::region_error(total_w[c], total_wz[c]);
    }
    const double alone_sum = std::accumulate(alone.begin(), alone.end(), 0.0);

    double best_err = std::numeric_limits<double>::infinity();
    SharedStump best;
    bool found = false;
    for (std::size_t f = 0; f < nf; ++f) {
      const auto& cf = cuts[f];
      const std::size_t nt = cf.threshold.size();
      if (nt == 0) continue;
      // below_w[c][t], below_wz[c][t]: sums over samples at or under cut t.
      std::vector<std::vector<double>> below_w(nc, std::vector<double>(nt)), below_wz(nc, std::vector<double>(nt));
      for (std::size_t c = 0; c < nc; ++c) {
        double cw = 0.0, cwz = 0.0;
        std::size_t t = 0;
        for (std::size_t k = 0; k < n && t < nt; ++k) {
          const std::size_t i = cf.order[k];
          cw += weight[c][i];
          cwz += weight[c][i] * z(c, i);
          while (t < nt && cf.split_after[t] == k) {
            below_w[c][t] = cw;
            below_wz[c][t] = cwz;
            ++t;
          }
        }
      }
      // Greedy forward selection of the sharing subset.
      std::vector<bool> subset(nc, false);
      std::vector<double> sw(nt, 0.0), swz(nt, 0.0);
      double subset_tw = 0.0, subset_twz = 0.0, subset_alone = 0.0;
      for (std::size_t step = 0; step < nc; ++step) {
        double step_err = std::numeric_limits<double>::infinity();
        std::size_t step_class = nc, step_cut = 0;
        for (std::size_t c = 0; c < nc; ++c) {
          if (subset[c]) continue;
          const double tw = subset_tw + total_w[c], twz = subset_twz + total_wz[c];
          const double rest = alone_sum - subset_alone - alone[c];
          for (std::size_t t = 0; t < nt; ++t) {
            const double bw = sw[t] + below_w[c][t], bwz = swz[t] + below_wz[c][t];
            const double err = detail::region_error(bw, bwz) + detail::region_error(tw - bw, twz - bwz) + rest;
            if (err < step_err) {
              step_err = err;
              step_class = c;
              step_cut = t;
            }
          }
        }
        if (step_class == nc) break;
        subset[step_class] = true;
        subset_tw += total_w[step_class];
        subset_twz += total_wz[step_class];
        subset_alone += alone[step_class];
        for (std::size_t t = 0; t < nt; ++t) {
          sw[t] += below_w[step_class][t];
          swz[t] += below_wz[step_class][t];
        }
        if (step_err < best_err) {
          best_err = step_err;
          found = true;
          best.feature = f;
          best.threshold = cf.threshold[step_cut];
          best.sharing = subset;
          const double bw = sw[step_cut], bwz = swz[step_cut];
          best.below = bw > 0.0 ? bwz / bw : 0.0;
          best.above = subset_tw - bw > 0.0 ? (subset_twz - bwz) / (subset_tw - bw) : 0.0;
        }
      }
    }
    if (!found) {
      // Every feature is constant: fall back to per-class constants.
      best.feature = 0;
      best.threshold = 0.0;
      best.sharing.assign(nc, false);
    }
    best.constant.assign(nc, 0.0);
    for (std::size_t c = 0; c < nc; ++c)
      if (!best.sharing[c]) best.constant[c] = total_w[c] > 0.0 ? total_wz[c] / total_w[c] : 0.0;

    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t i = 0; i < n; ++i)
        weight[c][i] *= std::exp(-z(c, i) * best.response(nf ? data.x(i, best.feature) : 0.0, c));
    model.stumps.push_back(std::move(best));
    model.loss_history.push_back(loss());
  }
  return model;
}

inline nlohmann::json to_json(const JointBoostModel& m) {
  nlohmann::json stumps = nlohmann::json::array();
  for (const auto& s : m.stumps) {
    std::vector<int> sharing(s.sharing.begin(), s.sharing.end());
    stumps.push_back({{"feature", s.feature},
                      {"threshold", s.threshold},
                      {"above", s.above},
                      {"below", s.below},
                      {"sharing", sharing},
                      {"constant", s.constant}});
  }
  return {{"type", "jointboost"},
          {"labels", m.labels},
          {"feature_dimension", m.feature_dimension},
          {"fingerprint", m.fingerprint},
          {"rounds", m.stumps.size()},
          {"loss_history", m.loss_history},
          {"stumps", stumps}};
}

inline JointBoostModel jointboost_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != "jointboost") fail(ErrorCode::ParseError, "not a jointboost model");
  JointBoostModel m;
  m.labels = j.at("labels").get<std::vector<std::string>>();
  m.feature_dimension = j.at("feature_dimension").get<std::size_t>();
  m.fingerprint = j.at("fingerprint").get<std::string>();
  m.loss_history = j.value("loss_history", std::vector<double>{});
  for (const auto& s : j.at("stumps")) {
    SharedStump st;
    st.feature = s.at("feature").get<std::size_t>();
    st.threshold = s.at("threshold").get<double>();
    st.above = s.at("above").get<double>();
    st.below = s.at("below").get<double>();
    for (int b : s.at("sharing").get<std::vector<int>>()) st.sharing.push_back(b != 0);
    st.constant = s.at("constant").get<std::vector<double>>();
    if (st.feature >= m.feature_dimension || st.sharing.size() != m.labels.size() ||
        st.constant.size() != m.labels.size() || std::none_of(st.sharing.begin(), st.sharing.end(), [](bool b) { return b; }))
      fail(ErrorCode::ParseError, "malformed stump in jointboost model");
    m.stumps.push_back(std::move(st));
  }
  return m;
}

}  // namespace scenecolor::segmentation
