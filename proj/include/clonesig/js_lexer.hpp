// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include "clonesig/error.hpp"

namespace clonesig::js {

enum class TokenType : uint8_t {
  End,
  Identifier,      // includes keywords; parser tells them apart via text
  Number,
  String,
  Regex,
  Punctuator,
  TemplateHead,    // `...${
  TemplateMiddle,  // }...${
  TemplateTail,    // }...`
  TemplateFull,    // `...`
  PrivateName,     // #name
};

struct Token {
  TokenType type = TokenType::End;
  uint32_t start = 0;
  uint32_t end = 0;
  bool newline_before = false;
  std::string_view text;  // raw source slice, valid while the source lives

  bool is_punct(std::string_view p) const {
    return type == TokenType::Punctuator && text == p;
  }
  bool is_word(std::string_view w) const {
    return type == TokenType::Identifier && text == w;
  }
};

/// Stateless scanner over a UTF-8 source buffer. Each call lexes the token
/// beginning at (or after) a byte offset, so callers can re-lex from any
/// position; that is how the `/`-vs-regex and `}`-vs-template ambiguities
/// are resolved by the parser.
class Lexer {
public:
  explicit Lexer(std::string_view source) : src_(source) {}

  std::string_view source() const { return src_; }

  /// Scans the next token starting from `pos`, skipping whitespace and
  /// comments. `regex_ok` controls whether `/` starts a regex literal.
  Token scan(uint32_t pos, bool regex_ok) const {
    Token tok;
    bool newline = false;
    pos = skip_trivia(pos, newline);
    tok.newline_before = newline;
    tok.start = pos;

    if (pos >= src_.size()) {
      tok.type = TokenType::End;
      tok.end = pos;
      return tok;
    }

    char c = src_[pos];
    if (is_ident_start(static_cast<unsigned char>(c))) {
      tok.type = TokenType::Identifier;
      tok.end = scan_identifier(pos);
    } else if (is_digit(c) || (c == '.' && pos + 1 < src_.size() && is_digit(src_[pos + 1]))) {
      tok.type = TokenType::Number;
      tok.end = scan_number(pos);
    } else if (c == '"' || c == '\'') {
      tok.type = TokenType::String;
      tok.end = scan_string(pos);
    } else if (c == '`') {
      tok.end = scan_template_part(pos + 1, tok.type, /*head=*/true);
    } else if (c == '/' && regex_ok) {
      tok.type = TokenType::Regex;
      tok.end = scan_regex(pos);
    } else if (c == '#') {
      uint32_t id_end = pos + 1 < src_.size() ? scan_identifier(pos + 1) : pos + 1;
      if (id_end == pos + 1) throw ParseError("unexpected character '#'", pos);
      tok.type = TokenType::PrivateName;
      tok.end = id_end;
    } else {
      tok.type = TokenType::Punctuator;
      tok.end = scan_punctuator(pos);
    }

    tok.text = src_.substr(tok.start, tok.end - tok.start);
    return tok;
  }

  /// Re-lexes a `}` punctuator as the continuation of a template literal.
  /// `pos` must be the offset of the closing brace of a `${...}` hole.
  Token continue_template(uint32_t pos) const {
    if (pos >= src_.size() || src_[pos] != '}')
      throw ParseError("expected '}' to continue template literal", pos);
    Token tok;
    tok.start = pos;
    tok.end = scan_template_part(pos + 1, tok.type, /*head=*/false);
    tok.text = src_.substr(tok.start, tok.end - tok.start);
    return tok;
  }

private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_hex(char c) {
    return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
  }
  // Non-ASCII bytes are accepted as identifier constituents; full Unicode
  // ID tables are overkill for a scanner that discards names anyway.
  static bool is_ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' ||
           c >= 0x80 || c == '\\';
  }
  static bool is_ident_part(unsigned char c) {
    return is_ident_start(c) || is_digit(static_cast<char>(c));
  }

  uint32_t skip_trivia(uint32_t pos, bool& newline) const {
    // Hashbang line (npm bin scripts).
    if (pos == 0 && src_.size() >= 2 && src_[0] == '#' && src_[1] == '!') {
      while (pos < src_.size() && src_[pos] != '\n') ++pos;
    }
    while (pos < src_.size()) {
      char c = src_[pos];
      if (c == '\n' || c == '\r') {
        newline = true;
        ++pos;
      } else if (c == ' ' || c == '\t' || c == '\v' || c == '\f') {
        ++pos;
      } else if (static_cast<unsigned char>(c) == 0xC2 && pos + 1 < src_.size() &&
                 static_cast<unsigned char>(src_[pos + 1]) == 0xA0) {
        pos += 2;  // NBSP
      } else if (static_cast<unsigned char>(c) == 0xEF && pos + 2 < src_.size() &&
                 static_cast<unsigned char>(src_[pos + 1]) == 0xBB &&
                 static_cast<unsigned char>(src_[pos + 2]) == 0xBF) {
        pos += 3;  // BOM
      } else if (static_cast<unsigned char>(c) == 0xE2 && pos + 2 < src_.size() &&
                 static_cast<unsigned char>(src_[pos + 1]) == 0x80 &&
                 (static_cast<unsigned char>(src_[pos + 2]) == 0xA8 ||
                  static_cast<unsigned char>(src_[pos + 2]) == 0xA9)) {
        newline = true;  // U+2028 / U+2029
        pos += 3;
      } else if (c == '/' && pos + 1 < src_.size() && src_[pos + 1] == '/') {
        pos += 2;
        while (pos < src_.size() && src_[pos] != '\n' && src_[pos] != '\r') ++pos;
      } else if (c == '/' && pos + 1 < src_.size() && src_[pos + 1] == '*') {
        uint32_t comment_start = pos;
        pos += 2;
        bool closed = false;
        while (pos < src_.size()) {
          if (src_[pos] == '\n' || src_[pos] == '\r') newline = true;
          if (src_[pos] == '*' && pos + 1 < src_.size() && src_[pos + 1] == '/') {
            pos += 2;
            closed = true;
            break;
          }
          ++pos;
        }
        if (!closed) throw ParseError("unterminated block comment", comment_start);
      } else {
        break;
      }
    }
    return pos;
  }

  uint32_t scan_identifier(uint32_t pos) const {
    while (pos < src_.size()) {
      unsigned char c = static_cast<unsigned char>(src_[pos]);
      if (c == '\\') {
        // \uXXXX or \u{...} escape inside an identifier
        if (pos + 1 >= src_.size() || src_[pos + 1] != 'u')
          throw ParseError("invalid identifier escape", pos);
        pos += 2;
        if (pos < src_.size() && src_[pos] == '{') {
          ++pos;
          while (pos < src_.size() && src_[pos] != '}') ++pos;
          if (pos >= src_.size()) throw ParseError("unterminated unicode escape", pos);
          ++pos;
        } else {
          for (int i = 0; i < 4; ++i, ++pos)
            if (pos >= src_.size() || !is_hex(src_[pos]))
              throw ParseError("invalid unicode escape", pos);
        }
      } else if (is_ident_part(c)) {
        ++pos;
      } else {
        break;
      }
    }
    return pos;
  }

  uint32_t scan_number(uint32_t pos) const {
    uint32_t start = pos;
    if (src_[pos] == '0' && pos + 1 < src_.size()) {
      char p = src_[pos + 1];
      if (p == 'x' || p == 'X' || p == 'o' || p == 'O' || p == 'b' || p == 'B') {
        pos += 2;
        uint32_t digits = pos;
        while (pos < src_.size() && (is_hex(src_[pos]) || src_[pos] == '_')) ++pos;
        if (pos == digits) throw ParseError("missing digits in numeric literal", start);
        if (pos < src_.size() && src_[pos] == 'n') ++pos;  // BigInt
        return pos;
      }
    }
    while (pos < src_.size() && (is_digit(src_[pos]) || src_[pos] == '_')) ++pos;
    if (pos < src_.size() && src_[pos] == '.') {
      ++pos;
      while (pos < src_.size() && (is_digit(src_[pos]) || src_[pos] == '_')) ++pos;
    }
    if (pos < src_.size() && (src_[pos] == 'e' || src_[pos] == 'E')) {
      uint32_t mark = pos++;
      if (pos < src_.size() && (src_[pos] == '+' || src_[pos] == '-')) ++pos;
      if (pos >= src_.size() || !is_digit(src_[pos]))
        pos = mark;  // `1e` is `1` followed by identifier `e`
      else
        while (pos < src_.size() && (is_digit(src_[pos]) || src_[pos] == '_')) ++pos;
    }
    if (pos < src_.size() && src_[pos] == 'n') ++pos;  // BigInt
    return pos;
  }

  uint32_t scan_string(uint32_t pos) const {
    char quote = src_[pos];
    uint32_t start = pos++;
    while (pos < src_.size()) {
      char c = src_[pos];
      if (c == quote) return pos + 1;
      if (c == '\\') {
        // Escape swallows the next byte; a \<CRLF> continuation swallows both.
        if (pos + 2 < src_.size() && src_[pos + 1] == '\r' && src_[pos + 2] == '\n')
          pos += 3;
        else
          pos += 2;
        continue;
      }
      if (c == '\n' || c == '\r')
        throw ParseError("unterminated string literal", start);
      ++pos;
    }
    throw ParseError("unterminated string literal", start);
  }

  // Scans a template chunk starting right after ` or }. Produces
  // TemplateFull/TemplateHead when head, TemplateTail/TemplateMiddle otherwise.
  uint32_t scan_template_part(uint32_t pos, TokenType& type, bool head) const {
    while (pos < src_.size()) {
      char c = src_[pos];
      if (c == '`') {
        type = head ? TokenType::TemplateFull : TokenType::TemplateTail;
        return pos + 1;
      }
      if (c == '$' && pos + 1 < src_.size() && src_[pos + 1] == '{') {
        type = head ? TokenType::TemplateHead : TokenType::TemplateMiddle;
        return pos + 2;
      }
      if (c == '\\') {
        pos += 2;
        continue;
      }
      ++pos;
    }
    throw ParseError("unterminated template literal", pos);
  }

  uint32_t scan_regex(uint32_t pos) const {
    uint32_t start = pos++;
    bool in_class = false;
    while (pos < src_.size()) {
      char c = src_[pos];
      if (c == '\\') {
        pos += 2;
        continue;
      }
      if (c == '[') in_class = true;
      else if (c == ']') in_class = false;
      else if (c == '/' && !in_class) {
        ++pos;
        while (pos < src_.size() && is_ident_part(static_cast<unsigned char>(src_[pos])))
          ++pos;  // flags
        return pos;
      } else if (c == '\n' || c == '\r') {
        break;
      }
      ++pos;
    }
    throw ParseError("unterminated regular expression literal", start);
  }

  uint32_t scan_punctuator(uint32_t pos) const {
    static constexpr std::string_view multi[] = {
        ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=",
        "?\?=", "=>", "==", "!=", "<=", ">=", "&&", "||", "?\?", "?.", "++",
        "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "**", "<<", ">>",
    };
    std::string_view rest = src_.substr(pos);
    for (std::string_view p : multi) {
      if (rest.substr(0, p.size()) == p) {
        // `?.3` lexes as `?` `.3` (conditional with a fractional literal)
        if (p == "?." && rest.size() > 2 && is_digit(rest[2])) break;
        return pos + static_cast<uint32_t>(p.size());
      }
    }
    static constexpr std::string_view singles = "{}()[];,<>+-*/%&|^!~?:=.@";
    if (singles.find(src_[pos]) != std::string_view::npos) return pos + 1;
    throw ParseError(std::string("unexpected character '") + src_[pos] + "'", pos);
  }

  std::string_view src_;
};

/// Converts a byte offset into 1-based line and column (in bytes).
inline std::pair<uint32_t, uint32_t> line_column(std::string_view source, uint32_t offset) {
  uint32_t line = 1, col = 1;
  for (uint32_t i = 0; i < offset && i < source.size(); ++i) {
    if (source[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace clonesig::js
