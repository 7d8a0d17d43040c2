// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clonesig/ast.hpp"
#include "clonesig/error.hpp"
#include "clonesig/js_lexer.hpp"

namespace clonesig::js {

/// Recursive-descent parser covering the JavaScript found in npm packages:
/// ES2020 statements and expressions, modules, classes with fields, template
/// literals, destructuring, async/generators, optional chaining.
///
/// Deliberate simplifications, all invisible to structural fingerprints:
///  - no strict-mode or early-error validation (this is a scanner, not a linter)
///  - `a?.b` produces the same MemberExpression shape as `a.b`
///  - identifier names, literal values, and operator symbols are discarded
class Parser {
public:
  explicit Parser(std::string_view source) : lex_(source) {}

  AstNode parse_program() {
    cur_ = lex_.scan(0, /*regex_ok=*/false);
    prev_end_ = 0;
    AstNode program(NodeKind::Program);
    program.span = {0, static_cast<uint32_t>(lex_.source().size())};
    while (cur_.type != TokenType::End)
      program.children.push_back(parse_statement_list_item());
    return program;
  }

private:
  // ---- token plumbing -------------------------------------------------

  struct State {
    Token cur;
    uint32_t prev_end;
  };

  State save() const { return {cur_, prev_end_}; }
  void restore(const State& s) {
    cur_ = s.cur;
    prev_end_ = s.prev_end;
  }

  // Tokens are lexed under the division interpretation; a primary-position
  // `/` is re-lexed as a regex in parse_primary.
  void advance() {
    prev_end_ = cur_.end;
    cur_ = lex_.scan(cur_.end, /*regex_ok=*/false);
  }

  Token peek() const { return lex_.scan(cur_.end, /*regex_ok=*/false); }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, cur_.start);
  }

  void expect_punct(std::string_view p) {
    if (!cur_.is_punct(p)) fail("expected '" + std::string(p) + "'");
    advance();
  }

  bool eat_punct(std::string_view p) {
    if (!cur_.is_punct(p)) return false;
    advance();
    return true;
  }

  bool eat_word(std::string_view w) {
    if (!cur_.is_word(w)) return false;
    advance();
    return true;
  }

  void expect_word(std::string_view w) {
    if (!cur_.is_word(w)) fail("expected '" + std::string(w) + "'");
    advance();
  }

  // Automatic semicolon insertion.
  void consume_semicolon() {
    if (eat_punct(";")) return;
    if (cur_.is_punct("}") || cur_.type == TokenType::End || cur_.newline_before) return;
    fail("expected ';'");
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : parser(p) {
      if (++parser.depth_ > kMaxDepth)
        throw ParseError("expression nesting too deep", parser.cur_.start);
    }
    ~DepthGuard() { --parser.depth_; }
    Parser& parser;
    static constexpr int kMaxDepth = 1500;
  };

  AstNode begin(NodeKind kind) const { return AstNode(kind, {cur_.start, cur_.start}); }
  AstNode finish(AstNode node) const {
    node.span.end = prev_end_;
    return node;
  }

  static bool is_keyword(std::string_view w) {
    static constexpr std::string_view words[] = {
        "break", "case", "catch", "class", "const", "continue", "debugger",
        "default", "delete", "do", "else", "export", "extends", "finally",
        "for", "function", "if", "import", "in", "instanceof", "new",
        "return", "super", "switch", "this", "throw", "try", "typeof", "var",
        "void", "while", "with", "enum",
    };
    for (std::string_view k : words)
      if (k == w) return true;
    return false;
  }

  static bool can_start_expr(const Token& t) {
    switch (t.type) {
      case TokenType::End:
        return false;
      case TokenType::Punctuator:
        return t.is_punct("(") || t.is_punct("[") || t.is_punct("{") || t.is_punct("+") ||
               t.is_punct("-") || t.is_punct("!") || t.is_punct("~") || t.is_punct("++") ||
               t.is_punct("--") || t.is_punct("/") || t.is_punct("/=");
      case TokenType::Identifier:
        return !is_keyword(t.text) || t.text == "this" || t.text == "super" ||
               t.text == "function" || t.text == "class" || t.text == "new" ||
               t.text == "typeof" || t.text == "void" || t.text == "delete" ||
               t.text == "import";
      default:
        return true;
    }
  }

  bool at_expression_start() const { return can_start_expr(cur_); }

  // ---- statements ------------------------------------------------------

  AstNode parse_statement_list_item() {
    if (cur_.is_word("function")) return parse_function(NodeKind::FunctionDeclaration);
    if (cur_.is_word("class")) return parse_class(NodeKind::ClassDeclaration);
    if (cur_.is_word("async")) {
      Token next = peek();
      if (next.is_word("function") && !next.newline_before) {
        AstNode fn = begin(NodeKind::FunctionDeclaration);
        advance();  // async
        advance();  // function
        return parse_function_rest(std::move(fn));
      }
    }
    if (cur_.is_word("import")) {
      Token next = peek();
      if (!next.is_punct("(") && !next.is_punct(".")) return parse_import();
    }
    if (cur_.is_word("export")) return parse_export();
    if (cur_.is_word("const") || cur_.is_word("var")) return parse_variable_statement();
    if (cur_.is_word("let")) {
      Token next = peek();
      if ((next.type == TokenType::Identifier && !is_keyword(next.text)) ||
          next.is_punct("[") || next.is_punct("{"))
        return parse_variable_statement();
    }
    return parse_statement();
  }

  AstNode parse_statement() {
    DepthGuard guard(*this);
    if (cur_.is_punct("{")) return parse_block();
    if (cur_.is_punct(";")) {
      AstNode node = begin(NodeKind::EmptyStatement);
      advance();
      return finish(std::move(node));
    }
    if (cur_.type == TokenType::Identifier) {
      std::string_view w = cur_.text;
      if (w == "if") return parse_if();
      if (w == "for") return parse_for();
      if (w == "while") return parse_while();
      if (w == "do") return parse_do_while();
      if (w == "switch") return parse_switch();
      if (w == "try") return parse_try();
      if (w == "throw") return parse_throw();
      if (w == "return") return parse_return();
      if (w == "break" || w == "continue") return parse_break_continue(w == "break");
      if (w == "debugger") {
        AstNode node = begin(NodeKind::DebuggerStatement);
        advance();
        consume_semicolon();
        return finish(std::move(node));
      }
      if (w == "with") return parse_with();
      if (w == "var" || w == "const") return parse_variable_statement();
      if (w == "function") return parse_function(NodeKind::FunctionDeclaration);
      if (w == "class") return parse_class(NodeKind::ClassDeclaration);
      if (!is_keyword(w) && peek().is_punct(":")) {
        AstNode node = begin(NodeKind::LabeledStatement);
        node.children.push_back(parse_identifier());
        advance();  // ':'
        node.children.push_back(parse_statement_list_item());
        return finish(std::move(node));
      }
    }
    return parse_expression_statement();
  }

  AstNode parse_block() {
    AstNode node = begin(NodeKind::BlockStatement);
    expect_punct("{");
    while (!cur_.is_punct("}")) {
      if (cur_.type == TokenType::End) fail("unterminated block");
      node.children.push_back(parse_statement_list_item());
    }
    advance();
    return finish(std::move(node));
  }

  AstNode parse_expression_statement() {
    AstNode node = begin(NodeKind::ExpressionStatement);
    node.children.push_back(parse_expression());
    consume_semicolon();
    return finish(std::move(node));
  }

  AstNode parse_variable_statement() {
    AstNode node = parse_variable_declaration(/*no_in=*/false);
    consume_semicolon();
    node.span.end = prev_end_;
    return node;
  }

  AstNode parse_variable_declaration(bool no_in) {
    AstNode node = begin(NodeKind::VariableDeclaration);
    advance();  // var / let / const — the flavor is not part of the label
    while (true) {
      AstNode decl = begin(NodeKind::VariableDeclarator);
      decl.children.push_back(parse_binding_target());
      if (eat_punct("=")) decl.children.push_back(parse_assignment(no_in));
      node.children.push_back(finish(std::move(decl)));
      if (!eat_punct(",")) break;
    }
    return finish(std::move(node));
  }

  AstNode parse_if() {
    AstNode node = begin(NodeKind::IfStatement);
    advance();
    expect_punct("(");
    node.children.push_back(parse_expression());
    expect_punct(")");
    node.children.push_back(parse_statement());
    if (eat_word("else")) node.children.push_back(parse_statement());
    return finish(std::move(node));
  }

  AstNode parse_for() {
    AstNode node = begin(NodeKind::ForStatement);
    advance();
    eat_word("await");  // for await (... of ...)
    expect_punct("(");

    std::optional<AstNode> init;
    if (!cur_.is_punct(";")) {
      bool is_decl = cur_.is_word("var") || cur_.is_word("const") ||
                     (cur_.is_word("let") &&
                      ((peek().type == TokenType::Identifier && !is_keyword(peek().text)) ||
                       peek().is_punct("[") || peek().is_punct("{")));
      init = is_decl ? parse_variable_declaration(/*no_in=*/true)
                     : parse_expression(/*no_in=*/true);
    }

    if (init && (cur_.is_word("in") || cur_.is_word("of"))) {
      node.kind = cur_.is_word("in") ? NodeKind::ForInStatement : NodeKind::ForOfStatement;
      advance();
      AstNode left = std::move(*init);
      if (left.kind != NodeKind::VariableDeclaration) to_pattern(left);
      node.children.push_back(std::move(left));
      node.children.push_back(parse_assignment(false));
      expect_punct(")");
      node.children.push_back(parse_statement());
      return finish(std::move(node));
    }

    if (init) node.children.push_back(std::move(*init));
    expect_punct(";");
    if (!cur_.is_punct(";")) node.children.push_back(parse_expression());
    expect_punct(";");
    if (!cur_.is_punct(")")) node.children.push_back(parse_expression());
    expect_punct(")");
    node.children.push_back(parse_statement());
    return finish(std::move(node));
  }

  AstNode parse_while() {
    AstNode node = begin(NodeKind::WhileStatement);
    advance();
    expect_punct("(");
    node.children.push_back(parse_expression());
    expect_punct(")");
    node.children.push_back(parse_statement());
    return finish(std::move(node));
  }

  AstNode parse_do_while() {
    AstNode node = begin(NodeKind::DoWhileStatement);
    advance();
    node.children.push_back(parse_statement());
    expect_word("while");
    expect_punct("(");
    node.children.push_back(parse_expression());
    expect_punct(")");
    eat_punct(";");
    return finish(std::move(node));
  }

  AstNode parse_switch() {
    AstNode node = begin(NodeKind::SwitchStatement);
    advance();
    expect_punct("(");
    node.children.push_back(parse_expression());
    expect_punct(")");
    expect_punct("{");
    while (!cur_.is_punct("}")) {
      if (cur_.type == TokenType::End) fail("unterminated switch");
      AstNode clause = begin(NodeKind::SwitchCase);
      if (eat_word("case"))
        clause.children.push_back(parse_expression());
      else
        expect_word("default");
      expect_punct(":");
      while (!cur_.is_punct("}") && !cur_.is_word("case") && !cur_.is_word("default")) {
        if (cur_.type == TokenType::End) fail("unterminated switch");
        clause.children.push_back(parse_statement_list_item());
      }
      node.children.push_back(finish(std::move(clause)));
    }
    advance();
    return finish(std::move(node));
  }

  AstNode parse_try() {
    AstNode node = begin(NodeKind::TryStatement);
    advance();
    node.children.push_back(parse_block());
    bool handled = false;
    if (cur_.is_word("catch")) {
      handled = true;
      AstNode handler = begin(NodeKind::CatchClause);
      advance();
      if (eat_punct("(")) {
        handler.children.push_back(parse_binding_target());
        expect_punct(")");
      }
      handler.children.push_back(parse_block());
      node.children.push_back(finish(std::move(handler)));
    }
    if (eat_word("finally")) {
      handled = true;
      node.children.push_back(parse_block());
    }
    if (!handled) fail("missing catch or finally after try");
    return finish(std::move(node));
  }

  AstNode parse_throw() {
    AstNode node = begin(NodeKind::ThrowStatement);
    advance();
    if (cur_.newline_before) fail("newline not allowed after 'throw'");
    node.children.push_back(parse_expression());
    consume_semicolon();
    return finish(std::move(node));
  }

  AstNode parse_return() {
    AstNode node = begin(NodeKind::ReturnStatement);
    advance();
    if (!cur_.newline_before && !cur_.is_punct(";") && !cur_.is_punct("}") &&
        cur_.type != TokenType::End)
      node.children.push_back(parse_expression());
    consume_semicolon();
    return finish(std::move(node));
  }

  AstNode parse_break_continue(bool is_break) {
    AstNode node = begin(is_break ? NodeKind::BreakStatement : NodeKind::ContinueStatement);
    advance();
    if (!cur_.newline_before && cur_.type == TokenType::Identifier && !is_keyword(cur_.text))
      node.children.push_back(parse_identifier());
    consume_semicolon();
    return finish(std::move(node));
  }

  AstNode parse_with() {
    AstNode node = begin(NodeKind::WithStatement);
    advance();
    expect_punct("(");
    node.children.push_back(parse_expression());
    expect_punct(")");
    node.children.push_back(parse_statement());
    return finish(std::move(node));
  }

  // ---- modules -----------------------------------------------------------

  AstNode parse_import() {
    AstNode node = begin(NodeKind::ImportDeclaration);
    advance();
    if (cur_.type == TokenType::String) {  // import "mod";
      node.children.push_back(parse_literal());
      consume_semicolon();
      return finish(std::move(node));
    }
    bool after_default = false;
    if (cur_.type == TokenType::Identifier && !is_keyword(cur_.text)) {
      AstNode spec = begin(NodeKind::ImportDefaultSpecifier);
      spec.children.push_back(parse_identifier());
      node.children.push_back(finish(std::move(spec)));
      after_default = !eat_punct(",");
    }
    if (!after_default && cur_.is_punct("*")) {
      AstNode spec = begin(NodeKind::ImportNamespaceSpecifier);
      advance();
      expect_word("as");
      spec.children.push_back(parse_identifier());
      node.children.push_back(finish(std::move(spec)));
    } else if (!after_default && cur_.is_punct("{")) {
      advance();
      while (!cur_.is_punct("}")) {
        AstNode spec = begin(NodeKind::ImportSpecifier);
        spec.children.push_back(parse_identifier_name());
        if (eat_word("as")) spec.children.push_back(parse_identifier());
        node.children.push_back(finish(std::move(spec)));
        if (!eat_punct(",")) break;
      }
      expect_punct("}");
    }
    expect_word("from");
    if (cur_.type != TokenType::String) fail("expected module specifier string");
    node.children.push_back(parse_literal());
    consume_semicolon();
    return finish(std::move(node));
  }

  AstNode parse_export() {
    AstNode node = begin(NodeKind::ExportNamedDeclaration);
    advance();
    if (cur_.is_punct("*")) {
      node.kind = NodeKind::ExportAllDeclaration;
      advance();
      if (eat_word("as")) node.children.push_back(parse_identifier_name());
      expect_word("from");
      if (cur_.type != TokenType::String) fail("expected module specifier string");
      node.children.push_back(parse_literal());
      consume_semicolon();
      return finish(std::move(node));
    }
    if (eat_word("default")) {
      node.kind = NodeKind::ExportDefaultDeclaration;
      if (cur_.is_word("function") ||
          (cur_.is_word("async") && peek().is_word("function") && !peek().newline_before)) {
        AstNode fn = begin(NodeKind::FunctionDeclaration);
        eat_word("async");
        advance();  // function
        node.children.push_back(parse_function_rest(std::move(fn), /*id_optional=*/true));
      } else if (cur_.is_word("class")) {
        node.children.push_back(parse_class(NodeKind::ClassDeclaration, /*id_optional=*/true));
      } else {
        node.children.push_back(parse_assignment(false));
        consume_semicolon();
      }
      return finish(std::move(node));
    }
    if (cur_.is_punct("{")) {
      advance();
      while (!cur_.is_punct("}")) {
        AstNode spec = begin(NodeKind::ExportSpecifier);
        spec.children.push_back(parse_identifier_name());
        if (eat_word("as")) spec.children.push_back(parse_identifier_name());
        node.children.push_back(finish(std::move(spec)));
        if (!eat_punct(",")) break;
      }
      expect_punct("}");
      if (eat_word("from")) {
        if (cur_.type != TokenType::String) fail("expected module specifier string");
        node.children.push_back(parse_literal());
      }
      consume_semicolon();
      return finish(std::move(node));
    }
    node.children.push_back(parse_statement_list_item());
    return finish(std::move(node));
  }

  // ---- functions and classes ----------------------------------------------

  AstNode parse_function(NodeKind kind) {
    AstNode node = begin(kind);
    advance();  // function
    return parse_function_rest(std::move(node));
  }

  // Caller consumed `function` (and any `async`). Parses *, id?, params, body.
  AstNode parse_function_rest(AstNode node, bool id_optional = false) {
    (void)id_optional;
    eat_punct("*");
    if (cur_.type == TokenType::Identifier && !is_keyword(cur_.text))
      node.children.push_back(parse_identifier());
    parse_params_into(node);
    node.children.push_back(parse_block());
    return finish(std::move(node));
  }

  void parse_params_into(AstNode& node) {
    expect_punct("(");
    while (!cur_.is_punct(")")) {
      node.children.push_back(parse_binding_element());
      if (!eat_punct(",")) break;
    }
    expect_punct(")");
  }

  AstNode parse_binding_element() {
    if (cur_.is_punct("...")) {
      AstNode rest = begin(NodeKind::RestElement);
      advance();
      rest.children.push_back(parse_binding_target());
      return finish(std::move(rest));
    }
    AstNode target = parse_binding_target();
    if (cur_.is_punct("=")) {
      AstNode assigned(NodeKind::AssignmentPattern, target.span);
      advance();
      assigned.children.push_back(std::move(target));
      assigned.children.push_back(parse_assignment(false));
      return finish(std::move(assigned));
    }
    return target;
  }

  AstNode parse_binding_target() {
    if (cur_.is_punct("[")) return parse_array_pattern();
    if (cur_.is_punct("{")) return parse_object_pattern();
    return parse_identifier();
  }

  AstNode parse_array_pattern() {
    AstNode node = begin(NodeKind::ArrayPattern);
    expect_punct("[");
    while (!cur_.is_punct("]")) {
      if (eat_punct(",")) continue;  // elision
      node.children.push_back(parse_binding_element());
      if (!cur_.is_punct("]")) expect_punct(",");
    }
    advance();
    return finish(std::move(node));
  }

  AstNode parse_object_pattern() {
    AstNode node = begin(NodeKind::ObjectPattern);
    expect_punct("{");
    while (!cur_.is_punct("}")) {
      if (cur_.is_punct("...")) {
        AstNode rest = begin(NodeKind::RestElement);
        advance();
        rest.children.push_back(parse_binding_target());
        node.children.push_back(finish(std::move(rest)));
      } else {
        AstNode prop = begin(NodeKind::Property);
        bool computed = parse_property_key_into(prop);
        if (eat_punct(":")) {
          prop.children.push_back(parse_binding_element());
        } else if (cur_.is_punct("=")) {
          AstNode assigned(NodeKind::AssignmentPattern, prop.span);
          advance();
          assigned.children.push_back(std::move(prop.children.back()));
          assigned.children.push_back(parse_assignment(false));
          prop.children.back() = finish(std::move(assigned));
        } else if (computed) {
          fail("computed property in pattern requires a value");
        }
        node.children.push_back(finish(std::move(prop)));
      }
      if (!cur_.is_punct("}")) expect_punct(",");
    }
    advance();
    return finish(std::move(node));
  }

  AstNode parse_class(NodeKind kind, bool id_optional = false) {
    AstNode node = begin(kind);
    advance();  // class
    if (cur_.type == TokenType::Identifier && !is_keyword(cur_.text))
      node.children.push_back(parse_identifier());
    else if (!id_optional && kind == NodeKind::ClassDeclaration && !cur_.is_punct("{") &&
             !cur_.is_word("extends"))
      fail("expected class name");
    if (eat_word("extends")) node.children.push_back(parse_left_hand_side());
    node.children.push_back(parse_class_body());
    return finish(std::move(node));
  }

  AstNode parse_class_body() {
    AstNode body = begin(NodeKind::ClassBody);
    expect_punct("{");
    while (!cur_.is_punct("}")) {
      if (cur_.type == TokenType::End) fail("unterminated class body");
      if (eat_punct(";")) continue;
      body.children.push_back(parse_class_element());
    }
    advance();
    return finish(std::move(body));
  }

  AstNode parse_class_element() {
    AstNode elem = begin(NodeKind::MethodDefinition);
    if (cur_.is_word("static") && !peek().is_punct("(") && !peek().is_punct("=") &&
        !peek().is_punct(";") && !peek().is_punct("}")) {
      advance();
      if (cur_.is_punct("{")) {  // static initialization block
        elem.kind = NodeKind::PropertyDefinition;
        elem.children.push_back(parse_block());
        return finish(std::move(elem));
      }
    }
    bool is_accessor = (cur_.is_word("get") || cur_.is_word("set")) &&
                       !peek().is_punct("(") && !peek().is_punct("=") &&
                       !peek().is_punct(";") && !peek().is_punct("}");
    if (is_accessor) advance();
    bool is_async = cur_.is_word("async") && !peek().newline_before &&
                    !peek().is_punct("(") && !peek().is_punct("=") &&
                    !peek().is_punct(";") && !peek().is_punct("}");
    if (is_async) advance();
    eat_punct("*");

    parse_property_key_into(elem);

    if (cur_.is_punct("(")) {
      AstNode value(NodeKind::FunctionExpression, {cur_.start, cur_.start});
      parse_params_into(value);
      value.children.push_back(parse_block());
      elem.children.push_back(finish(std::move(value)));
      return finish(std::move(elem));
    }

    // Class field
    elem.kind = NodeKind::PropertyDefinition;
    if (eat_punct("=")) elem.children.push_back(parse_assignment(false));
    consume_semicolon();
    return finish(std::move(elem));
  }

  // Parses a property key (identifier, string, number, private name, or
  // computed [expr]) into `node.children`. Returns true when computed.
  bool parse_property_key_into(AstNode& node) {
    if (cur_.is_punct("[")) {
      advance();
      node.children.push_back(parse_assignment(false));
      expect_punct("]");
      return true;
    }
    if (cur_.type == TokenType::String || cur_.type == TokenType::Number) {
      node.children.push_back(parse_literal());
      return false;
    }
    if (cur_.type == TokenType::PrivateName) {
      AstNode key = begin(NodeKind::PrivateIdentifier);
      advance();
      node.children.push_back(finish(std::move(key)));
      return false;
    }
    node.children.push_back(parse_identifier_name());
    return false;
  }

  // ---- expressions ---------------------------------------------------------

  AstNode parse_expression(bool no_in = false) {
    DepthGuard guard(*this);
    AstNode first = parse_assignment(no_in);
    if (!cur_.is_punct(",")) return first;
    AstNode node(NodeKind::SequenceExpression, first.span);
    node.children.push_back(std::move(first));
    while (eat_punct(","))
      node.children.push_back(parse_assignment(no_in));
    return finish(std::move(node));
  }

  AstNode parse_assignment(bool no_in) {
    DepthGuard guard(*this);

    if (cur_.is_word("yield")) {
      Token next = peek();
      bool ident_like = next.is_punct(".") || next.is_punct("[") || next.is_punct("(") ||
                        next.is_punct("=") || next.is_punct("=>") || next.is_punct(":") ||
                        next.is_punct("++") || next.is_punct("--") ||
                        (!next.is_punct("*") && binary_precedence(next, true) >= 0);
      if (!ident_like) {
        AstNode node = begin(NodeKind::YieldExpression);
        advance();
        if (eat_punct("*"))
          node.children.push_back(parse_assignment(no_in));
        else if (!cur_.newline_before && at_expression_start())
          node.children.push_back(parse_assignment(no_in));
        return finish(std::move(node));
      }
    }

    // Arrow functions: `x => ...`, `async x => ...`, `(params) => ...`,
    // `async (params) => ...`. Parenthesized parameter lists need a trial
    // parse against the cover grammar.
    if (cur_.type == TokenType::Identifier && !is_keyword(cur_.text)) {
      Token next = peek();
      if (next.is_punct("=>") && !next.newline_before) return parse_arrow_from_identifier();
    }
    if (cur_.is_word("async") && !peek().newline_before) {
      Token next = peek();
      if (next.type == TokenType::Identifier && !is_keyword(next.text) &&
          !next.is_word("function")) {
        State mark = save();
        advance();  // async
        Token after = peek();
        if (after.is_punct("=>") && !after.newline_before) return parse_arrow_from_identifier();
        restore(mark);
      } else if (next.is_punct("(")) {
        State mark = save();
        advance();  // async
        if (auto arrow = try_parse_arrow()) return std::move(*arrow);
        restore(mark);
      }
    }
    if (cur_.is_punct("(")) {
      if (auto arrow = try_parse_arrow()) return std::move(*arrow);
    }

    AstNode lhs = parse_conditional(no_in);

    static constexpr std::string_view assign_ops[] = {
        "=", "+=", "-=", "*=", "/=", "%=", "**=", "<<=", ">>=", ">>>=",
        "&=", "|=", "^=", "&&=", "||=", "?\?=",
    };
    for (std::string_view op : assign_ops) {
      if (cur_.is_punct(op)) {
        if (op == "=" &&
            (lhs.kind == NodeKind::ObjectExpression || lhs.kind == NodeKind::ArrayExpression))
          to_pattern(lhs);
        AstNode node(NodeKind::AssignmentExpression, lhs.span);
        advance();
        node.children.push_back(std::move(lhs));
        node.children.push_back(parse_assignment(no_in));
        return finish(std::move(node));
      }
    }
    return lhs;
  }

  AstNode parse_arrow_from_identifier() {
    AstNode node = begin(NodeKind::ArrowFunctionExpression);
    node.children.push_back(parse_identifier());
    expect_punct("=>");
    parse_arrow_body_into(node);
    return finish(std::move(node));
  }

  // Trial-parses `( params ) =>` from the current position. Restores the
  // token state and returns nullopt when the parenthesized text turns out to
  // be an ordinary expression.
  std::optional<AstNode> try_parse_arrow() {
    State mark = save();
    try {
      AstNode node(NodeKind::ArrowFunctionExpression, {cur_.start, cur_.start});
      parse_params_into(node);
      if (!cur_.is_punct("=>") || cur_.newline_before) {
        restore(mark);
        return std::nullopt;
      }
      advance();
      parse_arrow_body_into(node);
      return finish(std::move(node));
    } catch (const ParseError&) {
      restore(mark);
      return std::nullopt;
    }
  }

  void parse_arrow_body_into(AstNode& node) {
    if (cur_.is_punct("{"))
      node.children.push_back(parse_block());
    else
      node.children.push_back(parse_assignment(false));
  }

  AstNode parse_conditional(bool no_in) {
    AstNode test = parse_binary(0, no_in);
    if (!cur_.is_punct("?")) return test;
    AstNode node(NodeKind::ConditionalExpression, test.span);
    advance();
    node.children.push_back(std::move(test));
    node.children.push_back(parse_assignment(false));
    expect_punct(":");
    node.children.push_back(parse_assignment(no_in));
    return finish(std::move(node));
  }

  // Precedence table; `in` participates only when allowed by context.
  static int binary_precedence(const Token& t, bool no_in) {
    if (t.type == TokenType::Identifier) {
      if (t.text == "instanceof") return 7;
      if (t.text == "in") return no_in ? -1 : 7;
      return -1;
    }
    if (t.type != TokenType::Punctuator) return -1;
    std::string_view p = t.text;
    if (p == "?\?") return 1;
    if (p == "||") return 2;
    if (p == "&&") return 3;
    if (p == "|") return 4;
    if (p == "^") return 5;
    if (p == "&") return 6;
    if (p == "==" || p == "!=" || p == "===" || p == "!==") return 7;
    if (p == "<" || p == ">" || p == "<=" || p == ">=") return 7;
    if (p == "<<" || p == ">>" || p == ">>>") return 9;
    if (p == "+" || p == "-") return 10;
    if (p == "*" || p == "/" || p == "%") return 11;
    if (p == "**") return 12;
    return -1;
  }

  static bool is_logical_op(const Token& t) {
    return t.is_punct("&&") || t.is_punct("||") || t.is_punct("?\?");
  }

  AstNode parse_binary(int min_prec, bool no_in) {
    DepthGuard guard(*this);
    AstNode left = parse_unary(no_in);
    while (true) {
      int prec = binary_precedence(cur_, no_in);
      if (prec < 0 || prec < min_prec) return left;
      bool logical = is_logical_op(cur_);
      bool right_assoc = cur_.is_punct("**");
      advance();
      AstNode right = parse_binary(right_assoc ? prec : prec + 1, no_in);
      AstNode node(logical ? NodeKind::LogicalExpression : NodeKind::BinaryExpression,
                   left.span);
      node.children.push_back(std::move(left));
      node.children.push_back(std::move(right));
      node.span.end = prev_end_;
      left = std::move(node);
    }
  }

  AstNode parse_unary(bool no_in) {
    DepthGuard guard(*this);
    if (cur_.type == TokenType::Identifier) {
      std::string_view w = cur_.text;
      if (w == "delete" || w == "void" || w == "typeof") {
        AstNode node = begin(NodeKind::UnaryExpression);
        advance();
        node.children.push_back(parse_unary(no_in));
        return finish(std::move(node));
      }
      if (w == "await" && at_await_operand()) {
        AstNode node = begin(NodeKind::AwaitExpression);
        advance();
        node.children.push_back(parse_unary(no_in));
        return finish(std::move(node));
      }
    }
    if (cur_.is_punct("+") || cur_.is_punct("-") || cur_.is_punct("!") || cur_.is_punct("~")) {
      AstNode node = begin(NodeKind::UnaryExpression);
      advance();
      node.children.push_back(parse_unary(no_in));
      return finish(std::move(node));
    }
    if (cur_.is_punct("++") || cur_.is_punct("--")) {
      AstNode node = begin(NodeKind::UpdateExpression);
      advance();
      node.children.push_back(parse_unary(no_in));
      return finish(std::move(node));
    }
    return parse_postfix();
  }

  bool at_await_operand() const {
    Token next = peek();
    return can_start_expr(next) && !next.is_punct("=") && !next.is_punct("=>") &&
           !next.is_punct("++") && !next.is_punct("--");
  }

  AstNode parse_postfix() {
    AstNode expr = parse_left_hand_side();
    if ((cur_.is_punct("++") || cur_.is_punct("--")) && !cur_.newline_before) {
      AstNode node(NodeKind::UpdateExpression, expr.span);
      node.children.push_back(std::move(expr));
      advance();
      node.span.end = prev_end_;
      return node;
    }
    return expr;
  }

  AstNode parse_left_hand_side() {
    DepthGuard guard(*this);
    AstNode expr = cur_.is_word("new") ? parse_new() : parse_primary();
    return parse_call_member_tail(std::move(expr));
  }

  AstNode parse_new() {
    AstNode node = begin(NodeKind::NewExpression);
    advance();  // new
    if (cur_.is_punct(".")) {  // new.target
      AstNode meta(NodeKind::MetaProperty, node.span);
      advance();
      parse_identifier_name();
      return finish(std::move(meta));
    }
    AstNode callee = cur_.is_word("new") ? parse_new() : parse_primary();
    // Member accesses bind tighter than the argument list of `new`.
    while (true) {
      if (cur_.is_punct(".")) {
        AstNode member(NodeKind::MemberExpression, callee.span);
        advance();
        member.children.push_back(std::move(callee));
        member.children.push_back(parse_identifier_name_or_private());
        member.span.end = prev_end_;
        callee = std::move(member);
      } else if (cur_.is_punct("[")) {
        AstNode member(NodeKind::MemberExpression, callee.span);
        advance();
        member.children.push_back(std::move(callee));
        member.children.push_back(parse_expression());
        expect_punct("]");
        member.span.end = prev_end_;
        callee = std::move(member);
      } else {
        break;
      }
    }
    node.children.push_back(std::move(callee));
    if (cur_.is_punct("(")) parse_arguments_into(node);
    return finish(std::move(node));
  }

  void parse_arguments_into(AstNode& node) {
    expect_punct("(");
    while (!cur_.is_punct(")")) {
      if (cur_.is_punct("...")) {
        AstNode spread = begin(NodeKind::SpreadElement);
        advance();
        spread.children.push_back(parse_assignment(false));
        node.children.push_back(finish(std::move(spread)));
      } else {
        node.children.push_back(parse_assignment(false));
      }
      if (!eat_punct(",")) break;
    }
    expect_punct(")");
  }

  AstNode parse_call_member_tail(AstNode expr) {
    while (true) {
      if (cur_.is_punct(".")) {
        AstNode node(NodeKind::MemberExpression, expr.span);
        advance();
        node.children.push_back(std::move(expr));
        node.children.push_back(parse_identifier_name_or_private());
        node.span.end = prev_end_;
        expr = std::move(node);
      } else if (cur_.is_punct("?.")) {
        advance();
        if (cur_.is_punct("(")) {
          AstNode node(NodeKind::CallExpression, expr.span);
          node.children.push_back(std::move(expr));
          parse_arguments_into(node);
          node.span.end = prev_end_;
          expr = std::move(node);
        } else if (cur_.is_punct("[")) {
          AstNode node(NodeKind::MemberExpression, expr.span);
          advance();
          node.children.push_back(std::move(expr));
          node.children.push_back(parse_expression());
          expect_punct("]");
          node.span.end = prev_end_;
          expr = std::move(node);
        } else {
          AstNode node(NodeKind::MemberExpression, expr.span);
          node.children.push_back(std::move(expr));
          node.children.push_back(parse_identifier_name_or_private());
          node.span.end = prev_end_;
          expr = std::move(node);
        }
      } else if (cur_.is_punct("[")) {
        AstNode node(NodeKind::MemberExpression, expr.span);
        advance();
        node.children.push_back(std::move(expr));
        node.children.push_back(parse_expression());
        expect_punct("]");
        node.span.end = prev_end_;
        expr = std::move(node);
      } else if (cur_.is_punct("(")) {
        AstNode node(NodeKind::CallExpression, expr.span);
        node.children.push_back(std::move(expr));
        parse_arguments_into(node);
        node.span.end = prev_end_;
        expr = std::move(node);
      } else if (cur_.type == TokenType::TemplateFull ||
                 cur_.type == TokenType::TemplateHead) {
        AstNode node(NodeKind::TaggedTemplateExpression, expr.span);
        node.children.push_back(std::move(expr));
        node.children.push_back(parse_template());
        node.span.end = prev_end_;
        expr = std::move(node);
      } else {
        return expr;
      }
    }
  }

  AstNode parse_primary() {
    DepthGuard guard(*this);
    switch (cur_.type) {
      case TokenType::Number:
      case TokenType::String:
      case TokenType::Regex:
        return parse_literal();
      case TokenType::TemplateFull:
      case TokenType::TemplateHead:
        return parse_template();
      case TokenType::PrivateName: {
        AstNode node = begin(NodeKind::PrivateIdentifier);  // `#field in obj`
        advance();
        return finish(std::move(node));
      }
      case TokenType::Punctuator: {
        if (cur_.is_punct("(")) {
          advance();
          AstNode inner = parse_expression();
          expect_punct(")");
          return inner;  // parenthesization is shape, not a node
        }
        if (cur_.is_punct("[")) return parse_array_literal();
        if (cur_.is_punct("{")) return parse_object_literal();
        if (cur_.is_punct("/") || cur_.is_punct("/=")) {
          // Lexed under the division interpretation; re-lex as a regex.
          Token regex = lex_.scan(cur_.start, /*regex_ok=*/true);
          if (regex.type != TokenType::Regex) fail("unexpected '/'");
          cur_ = regex;
          return parse_literal();
        }
        break;
      }
      case TokenType::Identifier: {
        std::string_view w = cur_.text;
        if (w == "function") return parse_function(NodeKind::FunctionExpression);
        if (w == "class") return parse_class(NodeKind::ClassExpression, /*id_optional=*/true);
        if (w == "async" && peek().is_word("function") && !peek().newline_before) {
          AstNode fn = begin(NodeKind::FunctionExpression);
          advance();  // async
          advance();  // function
          return parse_function_rest(std::move(fn), /*id_optional=*/true);
        }
        if (w == "this") {
          AstNode node = begin(NodeKind::ThisExpression);
          advance();
          return finish(std::move(node));
        }
        if (w == "super") {
          AstNode node = begin(NodeKind::Super);
          advance();
          return finish(std::move(node));
        }
        if (w == "import") {
          AstNode node = begin(NodeKind::ImportExpression);
          advance();
          if (cur_.is_punct(".")) {  // import.meta
            AstNode meta(NodeKind::MetaProperty, node.span);
            advance();
            parse_identifier_name();
            return finish(std::move(meta));
          }
          expect_punct("(");
          node.children.push_back(parse_assignment(false));
          eat_punct(",");
          if (!cur_.is_punct(")")) node.children.push_back(parse_assignment(false));
          eat_punct(",");
          expect_punct(")");
          return finish(std::move(node));
        }
        if (w == "true" || w == "false" || w == "null") return parse_literal();
        if (is_keyword(w)) fail("unexpected keyword '" + std::string(w) + "'");
        return parse_identifier();
      }
      default:
        break;
    }
    fail("unexpected token");
  }

  AstNode parse_literal() {
    AstNode node = begin(NodeKind::Literal);
    advance();
    return finish(std::move(node));
  }

  AstNode parse_identifier() {
    if (cur_.type != TokenType::Identifier || is_keyword(cur_.text))
      fail("expected identifier");
    AstNode node = begin(NodeKind::Identifier);
    advance();
    return finish(std::move(node));
  }

  // IdentifierName: keywords are valid after `.` and as property keys.
  AstNode parse_identifier_name() {
    if (cur_.type != TokenType::Identifier) fail("expected identifier");
    AstNode node = begin(NodeKind::Identifier);
    advance();
    return finish(std::move(node));
  }

  AstNode parse_identifier_name_or_private() {
    if (cur_.type == TokenType::PrivateName) {
      AstNode node = begin(NodeKind::PrivateIdentifier);
      advance();
      return finish(std::move(node));
    }
    return parse_identifier_name();
  }

  AstNode parse_array_literal() {
    AstNode node = begin(NodeKind::ArrayExpression);
    expect_punct("[");
    while (!cur_.is_punct("]")) {
      if (eat_punct(",")) continue;  // elision
      if (cur_.is_punct("...")) {
        AstNode spread = begin(NodeKind::SpreadElement);
        advance();
        spread.children.push_back(parse_assignment(false));
        node.children.push_back(finish(std::move(spread)));
      } else {
        node.children.push_back(parse_assignment(false));
      }
      if (!cur_.is_punct("]")) expect_punct(",");
    }
    advance();
    return finish(std::move(node));
  }

  AstNode parse_object_literal() {
    AstNode node = begin(NodeKind::ObjectExpression);
    expect_punct("{");
    while (!cur_.is_punct("}")) {
      if (cur_.type == TokenType::End) fail("unterminated object literal");
      if (cur_.is_punct("...")) {
        AstNode spread = begin(NodeKind::SpreadElement);
        advance();
        spread.children.push_back(parse_assignment(false));
        node.children.push_back(finish(std::move(spread)));
      } else {
        node.children.push_back(parse_object_property());
      }
      if (!cur_.is_punct("}")) expect_punct(",");
    }
    advance();
    return finish(std::move(node));
  }

  AstNode parse_object_property() {
    AstNode prop = begin(NodeKind::Property);

    auto modifier_applies = [&](const Token& next) {
      return !next.is_punct(",") && !next.is_punct(":") && !next.is_punct("}") &&
             !next.is_punct("(") && !next.is_punct("=");
    };
    if ((cur_.is_word("get") || cur_.is_word("set")) && modifier_applies(peek())) advance();
    if (cur_.is_word("async") && !peek().newline_before && modifier_applies(peek())) advance();
    eat_punct("*");

    parse_property_key_into(prop);

    if (cur_.is_punct("(")) {  // method shorthand
      AstNode value(NodeKind::FunctionExpression, {cur_.start, cur_.start});
      parse_params_into(value);
      value.children.push_back(parse_block());
      prop.children.push_back(finish(std::move(value)));
      return finish(std::move(prop));
    }
    if (eat_punct(":")) {
      prop.children.push_back(parse_assignment(false));
      return finish(std::move(prop));
    }
    if (cur_.is_punct("=")) {  // shorthand with default (cover grammar)
      AstNode assigned(NodeKind::AssignmentPattern, prop.span);
      advance();
      assigned.children.push_back(std::move(prop.children.back()));
      assigned.children.push_back(parse_assignment(false));
      prop.children.back() = finish(std::move(assigned));
      return finish(std::move(prop));
    }
    return finish(std::move(prop));  // plain shorthand { a }
  }

  AstNode parse_template() {
    AstNode node = begin(NodeKind::TemplateLiteral);
    if (cur_.type == TokenType::TemplateFull) {
      node.children.emplace_back(NodeKind::TemplateElement, Span{cur_.start, cur_.end});
      advance();
      return finish(std::move(node));
    }
    node.children.emplace_back(NodeKind::TemplateElement, Span{cur_.start, cur_.end});
    advance();
    while (true) {
      node.children.push_back(parse_expression());
      if (!cur_.is_punct("}")) fail("expected '}' in template literal");
      Token part = lex_.continue_template(cur_.start);
      node.children.emplace_back(NodeKind::TemplateElement, Span{part.start, part.end});
      bool done = part.type == TokenType::TemplateTail;
      prev_end_ = part.end;
      cur_ = lex_.scan(part.end, /*regex_ok=*/false);
      if (done) break;
    }
    return finish(std::move(node));
  }

  // Reinterprets an expression parsed under the cover grammar as a
  // destructuring pattern (`[a, b] = rhs`, `({x} = rhs)`).
  static void to_pattern(AstNode& node) {
    switch (node.kind) {
      case NodeKind::ObjectExpression:
        node.kind = NodeKind::ObjectPattern;
        for (AstNode& child : node.children) to_pattern(child);
        break;
      case NodeKind::ArrayExpression:
        node.kind = NodeKind::ArrayPattern;
        for (AstNode& child : node.children) to_pattern(child);
        break;
      case NodeKind::Property:
        if (!node.children.empty()) to_pattern(node.children.back());
        break;
      case NodeKind::SpreadElement:
        node.kind = NodeKind::RestElement;
        for (AstNode& child : node.children) to_pattern(child);
        break;
      case NodeKind::AssignmentExpression:
        node.kind = NodeKind::AssignmentPattern;
        if (!node.children.empty()) to_pattern(node.children.front());
        break;
      default:
        break;
    }
  }

  Lexer lex_;
  Token cur_{};
  uint32_t prev_end_ = 0;
  int depth_ = 0;
};

/// Parses JavaScript source into a typed tree. Throws ParseError on the
/// first syntax error; comments and whitespace never become nodes.
inline AstNode parse_js(std::string_view source) {
  Parser parser(source);
  return parser.parse_program();
}

}  // namespace clonesig::js
