// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clonesig/vocabulary.hpp"

namespace clonesig {

/// Half-open byte range [start, end) into the decoded source text.
struct Span {
  uint32_t start = 0;
  uint32_t end = 0;

  friend auto operator<=>(const Span&, const Span&) = default;
};

/// A typed syntax tree node. Only the structural shape matters downstream:
/// identifier names, literal values, and operator symbols are not stored.
struct AstNode {
  NodeKind kind = NodeKind::Program;
  Span span;
  bool is_function_boundary = false;
  std::vector<AstNode> children;

  AstNode() = default;
  explicit AstNode(NodeKind k) : kind(k), is_function_boundary(is_function_kind(k)) {}
  AstNode(NodeKind k, Span s) : kind(k), span(s), is_function_boundary(is_function_kind(k)) {}

  std::string_view kind_label() const { return kind_name(kind); }

  std::size_t node_count() const {
    std::size_t n = 1;
    for (const AstNode& child : children) n += child.node_count();
    return n;
  }
};

/// Parsed representation of one source file.
struct Ast {
  AstNode root;
  std::string source_ref;
};

enum class UnitOrigin : uint8_t {
  declared_function,
  member_function,
  global_scope_dummy,
};

inline std::string_view origin_name(UnitOrigin origin) {
  switch (origin) {
    case UnitOrigin::declared_function: return "declared_function";
    case UnitOrigin::member_function: return "member_function";
    case UnitOrigin::global_scope_dummy: return "global_scope_dummy";
  }
  return "declared_function";
}

/// One function's subtree G_f with nested function subtrees removed, plus
/// the dummy unit that groups global-scope statements.
struct FunctionUnit {
  std::string package_id;
  std::string source_ref;
  AstNode root;
  UnitOrigin origin = UnitOrigin::declared_function;
  std::size_t node_count = 0;

  Span span() const { return root.span; }
};

namespace detail {

// Copies `node` while dropping any descendant subtree rooted at a function
// boundary. The copied root itself may be a boundary node.
inline AstNode prune_nested_functions(const AstNode& node) {
  AstNode out(node.kind, node.span);
  out.is_function_boundary = node.is_function_boundary;
  out.children.reserve(node.children.size());
  for (const AstNode& child : node.children) {
    if (child.is_function_boundary) continue;
    out.children.push_back(prune_nested_functions(child));
  }
  return out;
}

inline void collect_function_units(const AstNode& node, const AstNode* parent,
                                   const std::string& package_id,
                                   const std::string& source_ref,
                                   std::vector<FunctionUnit>& out) {
  if (node.is_function_boundary) {
    FunctionUnit unit;
    unit.package_id = package_id;
    unit.source_ref = source_ref;
    unit.root = prune_nested_functions(node);
    unit.origin = (parent != nullptr && parent->kind == NodeKind::MethodDefinition)
                      ? UnitOrigin::member_function
                      : UnitOrigin::declared_function;
    unit.node_count = unit.root.node_count();
    out.push_back(std::move(unit));
  }
  for (const AstNode& child : node.children)
    collect_function_units(child, &node, package_id, source_ref, out);
}

}  // namespace detail

/// Extracts one FunctionUnit per function declaration/expression/method and
/// exactly one global-scope dummy unit holding everything outside functions.
/// Units are ordered by span start (enclosing spans first on ties).
inline std::vector<FunctionUnit> extract_functions(const Ast& ast,
                                                   const std::string& package_id) {
  std::vector<FunctionUnit> units;
  detail::collect_function_units(ast.root, nullptr, package_id, ast.source_ref, units);

  FunctionUnit dummy;
  dummy.package_id = package_id;
  dummy.source_ref = ast.source_ref;
  dummy.root = detail::prune_nested_functions(ast.root);
  dummy.origin = UnitOrigin::global_scope_dummy;
  dummy.node_count = dummy.root.node_count();
  units.push_back(std::move(dummy));

  std::stable_sort(units.begin(), units.end(),
                   [](const FunctionUnit& a, const FunctionUnit& b) {
                     if (a.root.span.start != b.root.span.start)
                       return a.root.span.start < b.root.span.start;
                     return a.root.span.end > b.root.span.end;
                   });
  return units;
}

}  // namespace clonesig
