// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace clonesig {

enum class TextRatioMode : uint8_t { simple, partial, token_sort, token_set };

/// Plain Levenshtein distance (unit insert/delete/substitute costs).
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      diag = row[j];
      row[j] = std::min({row[j - 1] + 1, row[j] + 1, sub});
    }
  }
  return row[b.size()];
}

namespace detail {

inline int simple_ratio(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 100;
  std::size_t longest = std::max(a.size(), b.size());
  double similarity = 1.0 - static_cast<double>(levenshtein(a, b)) / longest;
  return static_cast<int>(std::lround(100.0 * similarity));
}

// Best simple ratio of the shorter string against any equal-length substring
// of the longer one.
inline int partial_ratio(std::string_view a, std::string_view b) {
  std::string_view shorter = a.size() <= b.size() ? a : b;
  std::string_view longer = a.size() <= b.size() ? b : a;
  if (shorter.empty()) return longer.empty() ? 100 : 0;
  int best = 0;
  for (std::size_t i = 0; i + shorter.size() <= longer.size(); ++i) {
    best = std::max(best, simple_ratio(shorter, longer.substr(i, shorter.size())));
    if (best == 100) break;
  }
  return best;
}

inline std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

inline std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

inline int token_sort_ratio(std::string_view a, std::string_view b) {
  std::vector<std::string> ta = tokenize(a), tb = tokenize(b);
  std::sort(ta.begin(), ta.end());
  std::sort(tb.begin(), tb.end());
  return simple_ratio(join(ta), join(tb));
}

inline int token_set_ratio(std::string_view a, std::string_view b) {
  std::vector<std::string> ta = tokenize(a), tb = tokenize(b);
  std::set<std::string> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());

  std::vector<std::string> common, only_a, only_b;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                        std::back_inserter(common));
  std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(),
                      std::back_inserter(only_a));
  std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(),
                      std::back_inserter(only_b));

  std::string t0 = join(common);
  std::string t1 = t0;
  if (!only_a.empty()) t1 += (t1.empty() ? "" : " ") + join(only_a);
  std::string t2 = t0;
  if (!only_b.empty()) t2 += (t2.empty() ? "" : " ") + join(only_b);

  return std::max({simple_ratio(t0, t1), simple_ratio(t0, t2), simple_ratio(t1, t2)});
}

}  // namespace detail

/// Levenshtein-based similarity on a 0..100 scale; 100 means identical.
/// Evaluation-only baseline; the pipeline default is the AST route.
inline int text_ratio(std::string_view a, std::string_view b, TextRatioMode mode) {
  switch (mode) {
    case TextRatioMode::simple: return detail::simple_ratio(a, b);
    case TextRatioMode::partial: return detail::partial_ratio(a, b);
    case TextRatioMode::token_sort: return detail::token_sort_ratio(a, b);
    case TextRatioMode::token_set: return detail::token_set_ratio(a, b);
  }
  return 0;
}

}  // namespace clonesig
