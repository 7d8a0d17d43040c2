// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "clonesig/clustering.hpp"
#include "clonesig/error.hpp"

namespace clonesig {

struct MclParams {
  int expansion = 2;            // e >= 2
  double inflation = 2.0;       // r > 1
  double prune_threshold = 1e-5;
  int max_iterations = 100;
  double convergence_epsilon = 1e-8;
};

namespace detail {

// Row-major square matrix with column-stochastic helpers.
class StochasticMatrix {
public:
  explicit StochasticMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::size_t size() const { return n_; }

  void normalize_columns() {
    for (std::size_t j = 0; j < n_; ++j) {
      double sum = 0;
      for (std::size_t i = 0; i < n_; ++i) sum += at(i, j);
      if (sum <= 0) {
        at(j, j) = 1.0;  // re-seed an emptied column on its own node
        continue;
      }
      for (std::size_t i = 0; i < n_; ++i) at(i, j) /= sum;
    }
  }

  StochasticMatrix multiply(const StochasticMatrix& rhs) const {
    StochasticMatrix out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t k = 0; k < n_; ++k) {
        double v = at(i, k);
        if (v == 0.0) continue;
        for (std::size_t j = 0; j < n_; ++j) out.at(i, j) += v * rhs.at(k, j);
      }
    }
    return out;
  }

  double max_abs_difference(const StochasticMatrix& other) const {
    double best = 0;
    for (std::size_t i = 0; i < data_.size(); ++i)
      best = std::max(best, std::abs(data_[i] - other.data_[i]));
    return best;
  }

private:
  std::size_t n_;
  std::vector<double> data_;
};

}  // namespace detail

/// Markov Cluster Algorithm: alternate expansion (matrix power e) and
/// inflation (elementwise power r, prune, column renormalization) on the
/// column-stochastic transition matrix until the iterate stops changing.
/// Clusters are the supports of attractor rows; overlaps go to the cluster
/// with the lowest attractor index; singletons are reported as noise.
inline Clustering mcl(const AffinityGraph& g, const MclParams& p = {}) {
  if (g.size() == 0) throw Error("mcl requires a non-empty graph");
  if (p.expansion < 2) throw ConfigError("mcl expansion must be >= 2");
  if (p.inflation <= 1.0) throw ConfigError("mcl inflation must be > 1");

  const std::size_t n = g.size();
  detail::StochasticMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.at(i, i) = 1.0;  // self-loops prevent odd-cycle oscillation
    for (auto [j, w] : g.adjacency[i]) m.at(i, j) = w;
  }
  m.normalize_columns();

  bool converged = false;
  for (int iter = 0; iter < p.max_iterations && !converged; ++iter) {
    detail::StochasticMatrix expanded = m.multiply(m);
    for (int e = 2; e < p.expansion; ++e) expanded = expanded.multiply(m);

    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double v = std::pow(expanded.at(i, j), p.inflation);
        if (v < p.prune_threshold) v = 0;
        expanded.at(i, j) = v;
        sum += v;
      }
      if (sum <= 0) {
        expanded.at(j, j) = 1.0;
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) expanded.at(i, j) /= sum;
    }

    converged = m.max_abs_difference(expanded) < p.convergence_epsilon;
    m = std::move(expanded);
  }

  // Interpretation: attractors are nodes with positive diagonal mass; each
  // attractor row's support is one cluster.
  constexpr double support_eps = 1e-7;
  std::vector<int32_t> assigned(n, -1);
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    if (m.at(i, i) <= support_eps) continue;
    std::vector<std::size_t> members;
    for (std::size_t j = 0; j < n; ++j)
      if (m.at(i, j) > support_eps && assigned[j] < 0) {
        assigned[j] = static_cast<int32_t>(groups.size());
        members.push_back(j);
      }
    if (!members.empty()) groups.push_back(std::move(members));
  }

  // Columns whose mass sits entirely on non-attractor rows (possible when
  // not converged) fall back to singletons.
  std::vector<std::size_t> leftover;
  for (std::size_t j = 0; j < n; ++j)
    if (assigned[j] < 0) leftover.push_back(j);

  Clustering out = detail::groups_to_clustering(g.node_ids, groups, leftover, true);
  out.algorithm = "mcl";
  out.params = {{"expansion", static_cast<double>(p.expansion)},
                {"inflation", p.inflation},
                {"prune_threshold", p.prune_threshold},
                {"tau", static_cast<double>(g.threshold)}};
  out.converged = converged;
  return out;
}

}  // namespace clonesig
