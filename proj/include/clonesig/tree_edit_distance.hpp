// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "clonesig/ast.hpp"
#include "clonesig/error.hpp"

namespace clonesig {

/// Zhang-Shasha working representation of an ordered labeled tree:
/// post-order node kinds, leftmost-leaf indices, and keyroots.
struct TedTree {
  std::vector<uint16_t> postorder_kinds;
  std::vector<int32_t> leftmost_leaf;  // l(i), post-order index of the leftmost leaf under i
  std::vector<int32_t> keyroots;       // ascending; nodes with no left sibling on the root path

  std::size_t size() const { return postorder_kinds.size(); }
  bool empty() const { return postorder_kinds.empty(); }

  static TedTree from_ast(const AstNode& root) {
    TedTree t;
    build(root, t);
    t.compute_keyroots();
    return t;
  }

private:
  // Returns the post-order index assigned to `node`.
  static int32_t build(const AstNode& node, TedTree& t) {
    int32_t leftmost = -1;
    for (const AstNode& child : node.children) {
      int32_t child_index = build(child, t);
      if (leftmost < 0) leftmost = t.leftmost_leaf[child_index];
    }
    int32_t index = static_cast<int32_t>(t.postorder_kinds.size());
    t.postorder_kinds.push_back(static_cast<uint16_t>(node.kind));
    t.leftmost_leaf.push_back(leftmost < 0 ? index : leftmost);
    return index;
  }

  // Keyroots are the highest node for each distinct leftmost-leaf value;
  // ascending iteration keeps the result sorted.
  void compute_keyroots() {
    std::vector<int32_t> highest(size(), -1);
    for (int32_t i = 0; i < static_cast<int32_t>(size()); ++i)
      highest[leftmost_leaf[i]] = i;
    for (int32_t i = 0; i < static_cast<int32_t>(size()); ++i)
      if (highest[leftmost_leaf[i]] == i) keyroots.push_back(i);
  }
};

/// Minimum number of unit-cost node insertions, deletions, and relabels
/// transforming `a` into `b` (Zhang & Shasha's keyroot dynamic program).
inline uint32_t ted(const TedTree& a, const TedTree& b) {
  if (a.empty() || b.empty())
    throw Error("tree edit distance requires non-empty trees");

  const auto n1 = static_cast<int32_t>(a.size());
  const auto n2 = static_cast<int32_t>(b.size());
  std::vector<uint32_t> treedist(static_cast<std::size_t>(n1) * n2, 0);
  auto td = [&](int32_t i, int32_t j) -> uint32_t& {
    return treedist[static_cast<std::size_t>(i) * n2 + j];
  };

  // Forest-distance scratch, sized for the worst keyroot pair.
  std::vector<uint32_t> fd(static_cast<std::size_t>(n1 + 1) * (n2 + 1));

  for (int32_t k1 : a.keyroots) {
    const int32_t li = a.leftmost_leaf[k1];
    const int32_t m = k1 - li + 2;
    for (int32_t k2 : b.keyroots) {
      const int32_t lj = b.leftmost_leaf[k2];
      const int32_t n = k2 - lj + 2;

      auto f = [&](int32_t i, int32_t j) -> uint32_t& {
        return fd[static_cast<std::size_t>(i) * n + j];
      };

      f(0, 0) = 0;
      for (int32_t i = 1; i < m; ++i) f(i, 0) = f(i - 1, 0) + 1;
      for (int32_t j = 1; j < n; ++j) f(0, j) = f(0, j - 1) + 1;

      for (int32_t i = 1; i < m; ++i) {
        const int32_t node_i = i + li - 1;
        for (int32_t j = 1; j < n; ++j) {
          const int32_t node_j = j + lj - 1;
          if (a.leftmost_leaf[node_i] == li && b.leftmost_leaf[node_j] == lj) {
            const uint32_t relabel =
                a.postorder_kinds[node_i] == b.postorder_kinds[node_j] ? 0 : 1;
            uint32_t best = std::min({f(i - 1, j) + 1, f(i, j - 1) + 1,
                                      f(i - 1, j - 1) + relabel});
            f(i, j) = best;
            td(node_i, node_j) = best;
          } else {
            const int32_t fi = a.leftmost_leaf[node_i] - li;  // forest prefix before subtree i
            const int32_t fj = b.leftmost_leaf[node_j] - lj;
            f(i, j) = std::min({f(i - 1, j) + 1, f(i, j - 1) + 1,
                                f(fi, fj) + td(node_i, node_j)});
          }
        }
      }
    }
  }
  return td(n1 - 1, n2 - 1);
}

}  // namespace clonesig
