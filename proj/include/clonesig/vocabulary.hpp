// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "clonesig/error.hpp"

namespace clonesig {

/// The frozen node-kind vocabulary of the JavaScript parser adapter.
///
/// Fingerprints hash these labels, so the list (names and order) is part of
/// the on-disk format contract: entries may be appended, never renamed,
/// reordered, or removed. The same table is shipped as `vocabulary.tsv`.
enum class NodeKind : uint16_t {
  Program,
  FunctionDeclaration,
  FunctionExpression,
  ArrowFunctionExpression,
  ClassDeclaration,
  ClassExpression,
  ClassBody,
  MethodDefinition,
  PropertyDefinition,
  Identifier,
  PrivateIdentifier,
  Literal,
  TemplateLiteral,
  TemplateElement,
  TaggedTemplateExpression,
  BinaryExpression,
  LogicalExpression,
  UnaryExpression,
  UpdateExpression,
  AssignmentExpression,
  ConditionalExpression,
  CallExpression,
  NewExpression,
  MemberExpression,
  SequenceExpression,
  ObjectExpression,
  Property,
  ArrayExpression,
  SpreadElement,
  RestElement,
  ObjectPattern,
  ArrayPattern,
  AssignmentPattern,
  ThisExpression,
  Super,
  MetaProperty,
  ImportExpression,
  YieldExpression,
  AwaitExpression,
  BlockStatement,
  VariableDeclaration,
  VariableDeclarator,
  ExpressionStatement,
  IfStatement,
  ForStatement,
  ForInStatement,
  ForOfStatement,
  WhileStatement,
  DoWhileStatement,
  SwitchStatement,
  SwitchCase,
  TryStatement,
  CatchClause,
  ThrowStatement,
  ReturnStatement,
  BreakStatement,
  ContinueStatement,
  LabeledStatement,
  EmptyStatement,
  DebuggerStatement,
  WithStatement,
  ImportDeclaration,
  ImportSpecifier,
  ImportDefaultSpecifier,
  ImportNamespaceSpecifier,
  ExportNamedDeclaration,
  ExportDefaultDeclaration,
  ExportAllDeclaration,
  ExportSpecifier,
};

inline constexpr std::array<std::string_view, 69> kNodeKindNames = {
    "Program",
    "FunctionDeclaration",
    "FunctionExpression",
    "ArrowFunctionExpression",
    "ClassDeclaration",
    "ClassExpression",
    "ClassBody",
    "MethodDefinition",
    "PropertyDefinition",
    "Identifier",
    "PrivateIdentifier",
    "Literal",
    "TemplateLiteral",
    "TemplateElement",
    "TaggedTemplateExpression",
    "BinaryExpression",
    "LogicalExpression",
    "UnaryExpression",
    "UpdateExpression",
    "AssignmentExpression",
    "ConditionalExpression",
    "CallExpression",
    "NewExpression",
    "MemberExpression",
    "SequenceExpression",
    "ObjectExpression",
    "Property",
    "ArrayExpression",
    "SpreadElement",
    "RestElement",
    "ObjectPattern",
    "ArrayPattern",
    "AssignmentPattern",
    "ThisExpression",
    "Super",
    "MetaProperty",
    "ImportExpression",
    "YieldExpression",
    "AwaitExpression",
    "BlockStatement",
    "VariableDeclaration",
    "VariableDeclarator",
    "ExpressionStatement",
    "IfStatement",
    "ForStatement",
    "ForInStatement",
    "ForOfStatement",
    "WhileStatement",
    "DoWhileStatement",
    "SwitchStatement",
    "SwitchCase",
    "TryStatement",
    "CatchClause",
    "ThrowStatement",
    "ReturnStatement",
    "BreakStatement",
    "ContinueStatement",
    "LabeledStatement",
    "EmptyStatement",
    "DebuggerStatement",
    "WithStatement",
    "ImportDeclaration",
    "ImportSpecifier",
    "ImportDefaultSpecifier",
    "ImportNamespaceSpecifier",
    "ExportNamedDeclaration",
    "ExportDefaultDeclaration",
    "ExportAllDeclaration",
    "ExportSpecifier",
};

inline constexpr std::size_t vocabulary_size() { return kNodeKindNames.size(); }

/// Returns the label t(v) for a vocabulary kind.
inline std::string_view kind_name(NodeKind kind) {
  auto index = static_cast<std::size_t>(kind);
  if (index >= kNodeKindNames.size())
    throw VocabularyError("node kind id " + std::to_string(index) +
                          " outside the frozen vocabulary");
  return kNodeKindNames[index];
}

inline std::optional<NodeKind> kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNodeKindNames.size(); ++i)
    if (kNodeKindNames[i] == name) return static_cast<NodeKind>(i);
  return std::nullopt;
}

/// Function-boundary kinds: subtrees rooted here become FunctionUnits and
/// are pruned from enclosing units.
inline constexpr bool is_function_kind(NodeKind kind) {
  return kind == NodeKind::FunctionDeclaration ||
         kind == NodeKind::FunctionExpression ||
         kind == NodeKind::ArrowFunctionExpression;
}

}  // namespace clonesig
