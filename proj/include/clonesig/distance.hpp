// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "clonesig/corpus.hpp"
#include "clonesig/error.hpp"
#include "clonesig/fingerprint.hpp"
#include "clonesig/parallel.hpp"
#include "clonesig/tree_edit_distance.hpp"

namespace clonesig {

/// Everything needed to compare one package against others: one TED tree and
/// one fingerprint per function unit.
struct PackageAsts {
  std::string package_id;
  std::vector<TedTree> trees;
  std::vector<Fingerprint> unit_fingerprints;  // parallel to trees
  std::set<Fingerprint> fingerprint_set;

  bool empty() const { return trees.empty(); }
};

inline PackageAsts package_asts(const Package& pkg,
                                std::vector<Diagnostic>* diagnostics = nullptr) {
  PackageAsts out;
  out.package_id = pkg.id;
  for (const SourceFile& file : pkg.files) {
    Ast ast;
    try {
      ast = parse_source(file);
    } catch (const ParseError& e) {
      if (diagnostics) diagnostics->push_back({pkg.id, file.relative_path, e.what()});
      continue;
    }
    for (const FunctionUnit& unit : extract_functions(ast, pkg.id)) {
      out.trees.push_back(TedTree::from_ast(unit.root));
      Fingerprint fp = hash_node(unit.root);
      out.unit_fingerprints.push_back(fp);
      out.fingerprint_set.insert(fp);
    }
  }
  return out;
}

struct DistanceOptions {
  // Skip the TED dynamic program for unit pairs whose size ratio exceeds the
  // bound, substituting the |size difference| lower bound. The package
  // minimum is attained at similar-size pairs, so values near the minimum
  // are unaffected; oracle tests run with the guard off.
  double size_ratio_guard = 10.0;
  bool guard_enabled = true;
  unsigned jobs = 0;  // 0 = hardware concurrency
};

/// Minimum tree edit distance over all cross-package function-unit pairs.
/// Identical-fingerprint pairs short-circuit to 0 without running the DP.
inline uint32_t package_distance(const PackageAsts& a, const PackageAsts& b,
                                 const DistanceOptions& opts = {}) {
  if (a.empty() || b.empty())
    throw Error("package distance undefined for a package with zero function units");

  for (const Fingerprint& fp : a.fingerprint_set)
    if (b.fingerprint_set.count(fp)) return 0;

  uint32_t best = std::numeric_limits<uint32_t>::max();
  for (std::size_t i = 0; i < a.trees.size(); ++i) {
    const auto size_a = static_cast<uint32_t>(a.trees[i].size());
    for (std::size_t j = 0; j < b.trees.size(); ++j) {
      const auto size_b = static_cast<uint32_t>(b.trees[j].size());
      const uint32_t lower = size_a > size_b ? size_a - size_b : size_b - size_a;
      if (lower >= best) continue;
      if (opts.guard_enabled) {
        const double ratio = static_cast<double>(std::max(size_a, size_b)) /
                             static_cast<double>(std::min(size_a, size_b));
        if (ratio > opts.size_ratio_guard) {
          best = std::min(best, lower);
          continue;
        }
      }
      best = std::min(best, ted(a.trees[i], b.trees[j]));
      if (best == 0) return 0;
    }
  }
  return best;
}

/// Symmetric matrix of minimum inter-function tree edit distances.
struct DistanceMatrix {
  std::vector<std::string> package_ids;
  std::vector<std::vector<uint32_t>> values;

  std::size_t size() const { return package_ids.size(); }
  uint32_t at(std::size_t i, std::size_t j) const { return values[i][j]; }
};

/// All-pairs distances over the corpus. Packages with zero units are
/// excluded from the matrix with a diagnostic. Pair computations are
/// independent and run in parallel; assembly is deterministic.
inline DistanceMatrix distance_matrix(const std::vector<PackageAsts>& corpus,
                                      const DistanceOptions& opts = {},
                                      std::vector<Diagnostic>* diagnostics = nullptr) {
  std::vector<const PackageAsts*> included;
  for (const PackageAsts& pkg : corpus) {
    if (pkg.empty()) {
      if (diagnostics)
        diagnostics->push_back({pkg.package_id, "",
                                "package has no function units; excluded from distance matrix"});
      continue;
    }
    included.push_back(&pkg);
  }

  DistanceMatrix m;
  const std::size_t n = included.size();
  m.package_ids.reserve(n);
  for (const PackageAsts* pkg : included) m.package_ids.push_back(pkg->package_id);
  m.values.assign(n, std::vector<uint32_t>(n, 0));

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  parallel_for(pairs.size(), opts.jobs, [&](std::size_t k) {
    auto [i, j] = pairs[k];
    uint32_t d = package_distance(*included[i], *included[j], opts);
    m.values[i][j] = d;
    m.values[j][i] = d;
  });
  return m;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

/// Persists the matrix as `distances.csv` (one row per unordered pair) for
/// pipeline re-entry.
inline void save_distances_csv(const DistanceMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "package_id_a,package_id_b,distance\n";
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j)
      out << detail::csv_escape(m.package_ids[i]) << ','
          << detail::csv_escape(m.package_ids[j]) << ',' << m.values[i][j] << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

inline DistanceMatrix load_distances_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());

  std::string line;
  if (!std::getline(in, line) || line.rfind("package_id_a,", 0) != 0)
    throw IntegrityError("missing distances.csv header in " + path.string());

  // Minimal CSV field reader supporting the quoting used by csv_escape.
  auto split = [&](const std::string& row) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < row.size(); ++i) {
      char c = row[i];
      if (quoted) {
        if (c == '"' && i + 1 < row.size() && row[i + 1] == '"') {
          field += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          field += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else {
        field += c;
      }
    }
    fields.push_back(std::move(field));
    return fields;
  };

  std::vector<std::tuple<std::string, std::string, uint32_t>> rows;
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> index;
  auto note_id = [&](const std::string& id) {
    if (index.emplace(id, ids.size()).second) ids.push_back(id);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.back() == '\r') line.pop_back();
    auto fields = split(line);
    if (fields.size() != 3)
      throw IntegrityError("malformed distances.csv row: " + line);
    rows.emplace_back(fields[0], fields[1], static_cast<uint32_t>(std::stoul(fields[2])));
    note_id(fields[0]);
    note_id(fields[1]);
  }

  DistanceMatrix m;
  m.package_ids = ids;
  m.values.assign(ids.size(), std::vector<uint32_t>(ids.size(), 0));
  for (auto& [a, b, d] : rows) {
    std::size_t i = index.at(a), j = index.at(b);
    m.values[i][j] = d;
    m.values[j][i] = d;
  }
  return m;
}

}  // namespace clonesig
