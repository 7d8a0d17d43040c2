// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "clonesig/clustering.hpp"
#include "clonesig/error.hpp"

namespace clonesig {

struct PairwiseConfusion {
  uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  uint64_t total() const { return tp + tn + fp + fn; }
};

struct MetricsReport {
  double precision = 0, recall = 0, f1 = 0;
  PairwiseConfusion confusion;
  double size_variance = 0;
};

namespace detail {

// Cluster membership per package; noise nodes count as singleton clusters,
// encoded as unique negative labels.
inline std::map<std::string, int64_t> membership(const Clustering& c) {
  std::map<std::string, int64_t> m;
  int64_t cluster_id = 0;
  for (const auto& cluster : c.clusters) {
    for (const std::string& id : cluster) m[id] = cluster_id;
    ++cluster_id;
  }
  int64_t noise_id = -1;
  for (const std::string& id : c.noise) m[id] = noise_id--;
  return m;
}

}  // namespace detail

/// Counts unordered package pairs by same/different-cluster agreement.
/// tp: same cluster in both; tn: different in both; fp: same only in `auto`;
/// fn: same only in `reference`.
inline PairwiseConfusion pairwise_confusion(const Clustering& automatic,
                                            const Clustering& reference) {
  auto ma = detail::membership(automatic);
  auto mr = detail::membership(reference);

  std::vector<std::string> only_a, only_r;
  for (const auto& [id, label] : ma)
    if (!mr.count(id)) only_a.push_back(id);
  for (const auto& [id, label] : mr)
    if (!ma.count(id)) only_r.push_back(id);
  if (!only_a.empty() || !only_r.empty()) {
    std::string msg = "clusterings cover different package universes;";
    if (!only_a.empty()) {
      msg += " only in automatic:";
      for (const auto& id : only_a) msg += " " + id;
    }
    if (!only_r.empty()) {
      msg += " only in reference:";
      for (const auto& id : only_r) msg += " " + id;
    }
    throw EvaluationError(msg);
  }

  // Same-pair counts via label-intersection sizes; O(n + k) instead of the
  // quadratic pair walk (the test suite keeps that walk as oracle).
  auto pairs2 = [](uint64_t k) { return k * (k - 1) / 2; };

  std::map<int64_t, uint64_t> size_a, size_r;
  std::map<std::pair<int64_t, int64_t>, uint64_t> joint;
  for (const auto& [id, la] : ma) {
    int64_t lr = mr.at(id);
    ++size_a[la];
    ++size_r[lr];
    ++joint[{la, lr}];
  }

  uint64_t same_both = 0;
  for (const auto& [labels, count] : joint) same_both += pairs2(count);
  uint64_t same_a = 0;
  for (const auto& [label, count] : size_a) same_a += pairs2(count);
  uint64_t same_r = 0;
  for (const auto& [label, count] : size_r) same_r += pairs2(count);

  const uint64_t n = ma.size();
  PairwiseConfusion c;
  c.tp = same_both;
  c.fp = same_a - same_both;
  c.fn = same_r - same_both;
  c.tn = pairs2(n) - c.tp - c.fp - c.fn;
  return c;
}

/// Precision/recall/F1 with explicit zero-denominator conventions: an empty
/// prediction makes no false claims, so P (and symmetrically R) default to 1.
inline MetricsReport precision_recall_f1(const PairwiseConfusion& c) {
  MetricsReport r;
  r.confusion = c;
  r.precision = (c.tp + c.fp) == 0 ? 1.0 : static_cast<double>(c.tp) / (c.tp + c.fp);
  r.recall = (c.tp + c.fn) == 0 ? 1.0 : static_cast<double>(c.tp) / (c.tp + c.fn);
  r.f1 = (r.precision + r.recall) == 0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

inline MetricsReport evaluate_clustering(const Clustering& automatic,
                                         const Clustering& reference) {
  return precision_recall_f1(pairwise_confusion(automatic, reference));
}

struct ClusterSizeStats {
  std::vector<std::size_t> sizes;  // noise excluded
  double mean = 0;
  double variance = 0;  // population variance
};

inline ClusterSizeStats cluster_size_stats(const Clustering& c) {
  ClusterSizeStats s;
  for (const auto& cluster : c.clusters) s.sizes.push_back(cluster.size());
  if (s.sizes.empty()) return s;
  double sum = 0;
  for (std::size_t size : s.sizes) sum += static_cast<double>(size);
  s.mean = sum / s.sizes.size();
  double sq = 0;
  for (std::size_t size : s.sizes) {
    double d = static_cast<double>(size) - s.mean;
    sq += d * d;
  }
  s.variance = sq / s.sizes.size();
  return s;
}

}  // namespace clonesig
