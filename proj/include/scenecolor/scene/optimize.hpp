#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "scenecolor/scene/energy.hpp"

namespace scenecolor::scene {

struct OptimizeOptions {
  std::uint64_t seed = 1;
  std::size_t max_iterations = 20000;  // per chain
  std::size_t patience = 500;          // per chain, iterations without a new chain best
  std::size_t chains = 1024;           // independent random restarts; unit-temperature chains trap in local optima
  std::size_t history_size = 10;
};

struct Sample {
  Assignment assignment;
  double energy = 0.0;
};

struct OptimizeResult {
  Assignment best;
  EnergyTerms energy;
  std::vector<double> best_trace;  // best-so-far after each proposal, chains back to back
  std::vector<Sample> history;     // distinct accepted samples, best first
  std::size_t proposals = 0;
  std::size_t accepted = 0;

  double acceptance_rate() const { return proposals ? static_cast<double>(accepted) / proposals : 0.0; }
};

/// Unary and pairwise tables so a single-node move costs O(degree).
class EnergyTables {
 public:
  EnergyTables(const SceneGraph& g, const ThemeModels& m, const ColorTheme& user, const EnergyParams& p) : g_(g) {
    const double z = constraint_normalizer(g.nodes.size(), p);
    unary_.resize(g.nodes.size());
    incident_.resize(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const auto& cm = category_model(m, g.nodes[i].category);
      for (const auto& c : g.nodes[i].candidates)
        unary_[i].push_back(cm.log_density(c.theme) - p.gamma * palette::theme_distance(user, c.theme) / z);
    }
    pair_.resize(g.edges.size());
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      const auto& edge = g.edges[e];
      const std::size_t na = g.nodes[edge.a].candidates.size(), nb = g.nodes[edge.b].candidates.size();
      pair_[e].resize(na * nb);
      for (std::size_t sa = 0; sa < na; ++sa)
        for (std::size_t sb = 0; sb < nb; ++sb) pair_[e][sa * nb + sb] = p.beta * edge_energy(g, edge, sa, sb, m);
      incident_[edge.a].push_back(e);
      incident_[edge.b].push_back(e);
    }
  }

  double energy(const Assignment& a) const {
    double e = 0.0;
    for (std::size_t i = 0; i < unary_.size(); ++i) e += unary_[i][a.state[i]];
    for (std::size_t k = 0; k < pair_.size(); ++k) e += pair_value(k, a.state[g_.edges[k].a], a.state[g_.edges[k].b]);
    return e;
  }

  /// Energy change when node i moves to state s.
  double delta(const Assignment& a, std::size_t i, std::size_t s) const {
    double d = unary_[i][s] - unary_[i][a.state[i]];
    for (std::size_t k : incident_[i]) {
      const auto& edge = g_.edges[k];
      if (edge.a == i)
        d += pair_value(k, s, a.state[edge.b]) - pair_value(k, a.state[i], a.state[edge.b]);
      else
        d += pair_value(k, a.state[edge.a], s) - pair_value(k, a.state[edge.a], a.state[i]);
    }
    return d;
  }

 private:
  double pair_value(std::size_t k, std::size_t sa, std::size_t sb) const {
    return pair_[k][sa * g_.nodes[g_.edges[k].b].candidates.size() + sb];
  }

  const SceneGraph& g_;
  std::vector<std::vector<double>> unary_;
  std::vector<std::vector<double>> pair_;
  std::vector<std::vector<std::size_t>> incident_;
};

namespace detail {

inline void remember(std::vector<Sample>& history, const Assignment& a, double e, std::size_t cap) {
  if (cap == 0) return;
  for (auto& s : history)
    if (s.assignment == a) return;
  if (history.size() == cap && e <= history.back().energy) return;
  auto pos = std::find_if(history.begin(), history.end(), [&](const Sample& s) { return e > s.energy; });
  history.insert(pos, {a, e});
  if (history.size() > cap) history.pop_back();
}

}  // namespace detail

/// Metropolis-Hastings over discrete assignments, maximizing the energy.
/// Each chain resamples one unpinned node per step; the best state seen wins.
/// `warm_start`, when given, seeds the first chain.
inline OptimizeResult optimize(const SceneGraph& g, const ThemeModels& m, const ColorTheme& user,
                               const EnergyParams& p, const OptimizeOptions& opt = {},
                               const Assignment* warm_start = nullptr) {
  for (const auto& n : g.nodes) {
    if (n.candidates.empty()) fail(ErrorCode::NoCandidates, "node " + n.id + " has no candidate states");
    if (n.pinned && *n.pinned >= n.candidates.size()) fail(ErrorCode::InvalidPin, "pinned state out of range");
  }
  if (warm_start) validate(g, *warm_start);
  const EnergyTables tables(g, m, user, p);

  std::vector<std::size_t> movable;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (!g.nodes[i].pinned && g.nodes[i].candidates.size() > 1) movable.push_back(i);

  OptimizeResult out;
  double best_energy = -std::numeric_limits<double>::infinity();
  const std::size_t chains = std::max<std::size_t>(opt.chains, 1);
  for (std::size_t chain = 0; chain < chains; ++chain) {
    Rng rng(mix_seed(opt.seed, chain));
    Assignment cur;
    cur.state.resize(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (g.nodes[i].pinned)
        cur.state[i] = *g.nodes[i].pinned;
      else if (warm_start && chain == 0)
        cur.state[i] = warm_start->state[i];
      else
        cur.state[i] = rng.index(g.nodes[i].candidates.size());
    }
    double e = tables.energy(cur);
    double chain_best = e;
    detail::remember(out.history, cur, e, opt.history_size);
    if (e > best_energy) {
      best_energy = e;
      out.best = cur;
    }
    if (movable.empty()) break;  // nothing to sample; every chain would be identical

    std::size_t stale = 0;
    for (std::size_t it = 0; it < opt.max_iterations && stale < opt.patience; ++it) {
      const std::size_t i = movable[rng.index(movable.size())];
      const std::size_t ns = g.nodes[i].candidates.size();
      std::size_t s = rng.index(ns - 1);
      if (s >= cur.state[i]) ++s;
      const double d = tables.delta(cur, i, s);
      ++out.proposals;
      if (d >= 0.0 || rng.uniform() < std::exp(d)) {
        cur.state[i] = s;
        e += d;
        ++out.accepted;
        detail::remember(out.history, cur, e, opt.history_size);
      }
      if (e > chain_best + 1e-12 * std::max(1.0, std::abs(chain_best))) {
        chain_best = e;
        stale = 0;
      } else {
        ++stale;
      }
      if (e > best_energy) {
        best_energy = e;
        out.best = cur;
      }
      out.best_trace.push_back(best_energy);
    }
  }
  // Recompute sample energies directly so reported values do not carry drift
  // from the incremental updates.
  for (auto& s : out.history) s.energy = tables.energy(s.assignment);
  std::stable_sort(out.history.begin(), out.history.end(),
                   [](const Sample& a, const Sample& b) { return a.energy > b.energy; });
  out.energy = total_energy(g, out.best, m, user, p);
  return out;
}

/// Applies pins (node index to state) and re-optimizes from `previous`.
inline OptimizeResult refine(SceneGraph g, const Assignment& previous, const std::map<std::size_t, std::size_t>& pins,
                             const ThemeModels& m, const ColorTheme& user, const EnergyParams& p,
                             const OptimizeOptions& opt = {}) {
  validate(g, previous);
  Assignment start = previous;
  for (const auto& [node, state] : pins) {
    if (node >= g.nodes.size()) fail(ErrorCode::InvalidPin, "pin refers to unknown node " + std::to_string(node));
    if (state >= g.nodes[node].candidates.size())
      fail(ErrorCode::InvalidPin, "pin state out of range for node " + g.nodes[node].id);
    g.nodes[node].pinned = state;
    start.state[node] = state;
  }
  return optimize(g, m, user, p, opt, &start);
}

inline nlohmann::json report_json(const SceneGraph& g, const OptimizeResult& r) {
  auto states = [&](const Assignment& a) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < g.nodes.size(); ++i) j[g.nodes[i].id] = g.nodes[i].candidates[a.state[i]].id;
    return j;
  };
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& s : r.history) hist.push_back({{"energy", s.energy}, {"assignment", states(s.assignment)}});
  return {{"energy", to_json(r.energy)},
          {"assignment", states(r.best)},
          {"proposals", r.proposals},
          {"accepted", r.accepted},
          {"acceptance_rate", r.acceptance_rate()},
          {"history", hist}};
}

}  // namespace scenecolor::scene
