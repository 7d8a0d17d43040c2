// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "clonesig/distance.hpp"
#include "clonesig/error.hpp"

namespace clonesig {

enum class Weighting : uint8_t { binary, inverse };

inline std::string_view weighting_name(Weighting w) {
  return w == Weighting::binary ? "binary" : "inverse";
}

/// Thresholded affinity graph over packages: edge (i,j) present iff
/// distance[i][j] <= tau for i != j.
struct AffinityGraph {
  std::vector<std::string> node_ids;
  std::vector<std::vector<std::pair<uint32_t, double>>> adjacency;  // sorted by neighbor
  uint32_t threshold = 0;
  Weighting weighting = Weighting::binary;

  std::size_t size() const { return node_ids.size(); }
};

inline AffinityGraph build_graph(const DistanceMatrix& d, uint32_t tau,
                                 Weighting weighting = Weighting::binary) {
  AffinityGraph g;
  g.node_ids = d.package_ids;
  g.threshold = tau;
  g.weighting = weighting;
  g.adjacency.assign(d.size(), {});
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (i == j) continue;
      uint32_t dist = d.at(i, j);
      if (dist > tau) continue;
      double w = weighting == Weighting::binary ? 1.0 : 1.0 / (1.0 + dist);
      g.adjacency[i].emplace_back(static_cast<uint32_t>(j), w);
    }
  }
  return g;
}

/// A partition of package ids into disjoint non-empty clusters plus noise.
struct Clustering {
  std::string algorithm;
  std::map<std::string, double> params;
  std::vector<std::vector<std::string>> clusters;
  std::vector<std::string> noise;
  bool converged = true;  // false only for MCL hitting max_iterations

  /// Canonical form: members sorted, clusters by size (desc) then smallest
  /// member, noise sorted. Applied before serialization and comparisons.
  void normalize() {
    for (auto& cluster : clusters) std::sort(cluster.begin(), cluster.end());
    std::sort(clusters.begin(), clusters.end(),
              [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
                if (a.size() != b.size()) return a.size() > b.size();
                return a < b;
              });
    std::sort(noise.begin(), noise.end());
  }

  std::size_t covered_count() const {
    std::size_t n = noise.size();
    for (const auto& c : clusters) n += c.size();
    return n;
  }
};

namespace detail {

// Converts index-based groups to a Clustering; singletons handling differs
// per algorithm, so the caller chooses via `singletons_are_noise`.
inline Clustering groups_to_clustering(const std::vector<std::string>& ids,
                                       const std::vector<std::vector<std::size_t>>& groups,
                                       const std::vector<std::size_t>& leftover,
                                       bool singletons_are_noise) {
  Clustering out;
  for (const auto& group : groups) {
    if (group.empty()) continue;
    if (group.size() == 1 && singletons_are_noise) {
      out.noise.push_back(ids[group[0]]);
      continue;
    }
    std::vector<std::string> cluster;
    cluster.reserve(group.size());
    for (std::size_t idx : group) cluster.push_back(ids[idx]);
    out.clusters.push_back(std::move(cluster));
  }
  for (std::size_t idx : leftover) out.noise.push_back(ids[idx]);
  out.normalize();
  return out;
}

}  // namespace detail

/// Connected components of the thresholded graph; singletons become noise.
inline Clustering connected_components(const AffinityGraph& g) {
  std::vector<int32_t> component(g.size(), -1);
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t start = 0; start < g.size(); ++start) {
    if (component[start] >= 0) continue;
    int32_t id = static_cast<int32_t>(groups.size());
    groups.emplace_back();
    std::deque<std::size_t> queue{start};
    component[start] = id;
    while (!queue.empty()) {
      std::size_t v = queue.front();
      queue.pop_front();
      groups[id].push_back(v);
      for (auto [w, weight] : g.adjacency[v]) {
        if (component[w] < 0) {
          component[w] = id;
          queue.push_back(w);
        }
      }
    }
  }
  Clustering out = detail::groups_to_clustering(g.node_ids, groups, {}, true);
  out.algorithm = "ccomp";
  out.params = {{"tau", static_cast<double>(g.threshold)}};
  return out;
}

struct CliqueOptions {
  std::size_t max_cliques = 1000000;  // exponential blowup guard
};

/// Maximal cliques via Bron-Kerbosch with pivoting, made disjoint by
/// assigning each node to its largest containing clique (ties broken by the
/// clique's canonical index). Nodes outside every edge become noise.
inline Clustering maximal_cliques(const AffinityGraph& g, const CliqueOptions& opts = {}) {
  const std::size_t n = g.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (auto [j, w] : g.adjacency[i]) adj[i][j] = true;

  std::vector<std::vector<std::size_t>> cliques;

  // Bron-Kerbosch with pivot selection by maximum |P ∩ N(u)|.
  std::vector<std::size_t> R;
  auto bk = [&](auto&& self, std::vector<std::size_t> P, std::vector<std::size_t> X) -> void {
    if (P.empty() && X.empty()) {
      if (R.size() >= 2) {
        cliques.push_back(R);
        if (cliques.size() > opts.max_cliques)
          throw Error("maximal clique enumeration exceeded cap of " +
                      std::to_string(opts.max_cliques));
      }
      return;
    }
    std::size_t pivot = 0, best = 0;
    bool have_pivot = false;
    for (const auto& candidates : {P, X}) {
      for (std::size_t u : candidates) {
        std::size_t count = 0;
        for (std::size_t v : P)
          if (adj[u][v]) ++count;
        if (!have_pivot || count > best) {
          pivot = u;
          best = count;
          have_pivot = true;
        }
      }
    }
    std::vector<std::size_t> candidates;
    for (std::size_t v : P)
      if (!adj[pivot][v]) candidates.push_back(v);
    for (std::size_t v : candidates) {
      std::vector<std::size_t> P2, X2;
      for (std::size_t w : P)
        if (adj[v][w]) P2.push_back(w);
      for (std::size_t w : X)
        if (adj[v][w]) X2.push_back(w);
      R.push_back(v);
      self(self, std::move(P2), std::move(X2));
      R.pop_back();
      P.erase(std::find(P.begin(), P.end(), v));
      X.push_back(v);
    }
  };

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  bk(bk, all, {});

  // Canonical clique order: size desc, then lexicographic member list.
  for (auto& c : cliques) std::sort(c.begin(), c.end());
  std::sort(cliques.begin(), cliques.end(),
            [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
              if (a.size() != b.size()) return a.size() > b.size();
              return a < b;
            });

  // Size-then-lowest-index assignment; downstream signature derivation
  // requires disjoint clusters.
  std::vector<int32_t> assigned(n, -1);
  for (std::size_t c = 0; c < cliques.size(); ++c)
    for (std::size_t v : cliques[c])
      if (assigned[v] < 0) assigned[v] = static_cast<int32_t>(c);

  std::vector<std::vector<std::size_t>> groups(cliques.size());
  std::vector<std::size_t> leftover;
  for (std::size_t v = 0; v < n; ++v) {
    if (assigned[v] >= 0)
      groups[assigned[v]].push_back(v);
    else
      leftover.push_back(v);
  }

  Clustering out = detail::groups_to_clustering(g.node_ids, groups, leftover, false);
  out.algorithm = "clique";
  out.params = {{"tau", static_cast<double>(g.threshold)}};
  return out;
}

/// Density clustering on the precomputed distance matrix. A point's
/// neighborhood includes itself, so minPts=2 clusters any pair at distance
/// <= eps. Border points join the first discovered core cluster in
/// canonical scan order.
inline Clustering dbscan(const DistanceMatrix& d, uint32_t eps, std::size_t min_pts) {
  const std::size_t n = d.size();
  auto neighbors = [&](std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n; ++q)
      if (d.at(p, q) <= eps) out.push_back(q);  // includes p itself
    return out;
  };

  constexpr int32_t kUnvisited = -1, kNoise = -2;
  std::vector<int32_t> label(n, kUnvisited);
  std::vector<std::vector<std::size_t>> groups;

  for (std::size_t p = 0; p < n; ++p) {
    if (label[p] != kUnvisited) continue;
    std::vector<std::size_t> nb = neighbors(p);
    if (nb.size() < min_pts) {
      label[p] = kNoise;
      continue;
    }
    int32_t cluster = static_cast<int32_t>(groups.size());
    groups.emplace_back();
    label[p] = cluster;
    groups[cluster].push_back(p);
    std::deque<std::size_t> seeds(nb.begin(), nb.end());
    while (!seeds.empty()) {
      std::size_t q = seeds.front();
      seeds.pop_front();
      if (label[q] == kNoise) {  // border point
        label[q] = cluster;
        groups[cluster].push_back(q);
      }
      if (label[q] != kUnvisited) continue;
      label[q] = cluster;
      groups[cluster].push_back(q);
      std::vector<std::size_t> qn = neighbors(q);
      if (qn.size() >= min_pts)
        for (std::size_t r : qn) seeds.push_back(r);
    }
  }

  std::vector<std::size_t> leftover;
  for (std::size_t p = 0; p < n; ++p)
    if (label[p] == kNoise) leftover.push_back(p);

  Clustering out = detail::groups_to_clustering(d.package_ids, groups, leftover, false);
  out.algorithm = "dbscan";
  out.params = {{"eps", static_cast<double>(eps)},
                {"minPts", static_cast<double>(min_pts)}};
  return out;
}

// ---- clusters.json ----------------------------------------------------

inline nlohmann::json clustering_to_json(const Clustering& c) {
  nlohmann::json j;
  j["algorithm"] = c.algorithm;
  j["params"] = c.params;
  j["clusters"] = c.clusters;
  j["noise"] = c.noise;
  if (!c.converged) j["converged"] = false;
  return j;
}

inline Clustering clustering_from_json(const nlohmann::json& j) {
  Clustering c;
  c.algorithm = j.value("algorithm", "");
  if (j.contains("params"))
    c.params = j.at("params").get<std::map<std::string, double>>();
  c.clusters = j.at("clusters").get<std::vector<std::vector<std::string>>>();
  if (j.contains("noise")) c.noise = j.at("noise").get<std::vector<std::string>>();
  c.converged = j.value("converged", true);
  c.normalize();
  return c;
}

inline void save_clusters_json(const Clustering& c, const std::filesystem::path& path) {
  Clustering copy = c;
  copy.normalize();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << clustering_to_json(copy).dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

inline Clustering load_clusters_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("malformed clusters file " + path.string() + ": " + e.what());
  }
  return clustering_from_json(j);
}

}  // namespace clonesig
