// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "clonesig/ast.hpp"
#include "clonesig/error.hpp"
#include "clonesig/js_parser.hpp"

namespace clonesig {

/// One source file of a package, already decoded to UTF-8.
struct SourceFile {
  std::string relative_path;  // forward slashes, no parent components
  std::string content;
};

struct Package {
  std::string id;
  std::filesystem::path root_path;
  std::vector<SourceFile> files;
};

/// A non-fatal problem recorded while ingesting or parsing.
struct Diagnostic {
  std::string package_id;
  std::string path;
  std::string message;
};

struct IngestOptions {
  std::vector<std::string> extensions = {".js", ".mjs", ".cjs"};
  std::uintmax_t max_file_size = 5 * 1024 * 1024;
};

/// Replaces invalid UTF-8 sequences with U+FFFD so downstream code can treat
/// content as text.
inline std::string utf8_lossy(std::string_view bytes) {
  static constexpr std::string_view replacement = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    unsigned char c = static_cast<unsigned char>(bytes[i]);
    std::size_t len = 0;
    if (c < 0x80) len = 1;
    else if ((c & 0xE0) == 0xC0 && c >= 0xC2) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0 && c <= 0xF4) len = 4;

    bool ok = len > 0 && i + len <= bytes.size();
    for (std::size_t k = 1; ok && k < len; ++k)
      ok = (static_cast<unsigned char>(bytes[i + k]) & 0xC0) == 0x80;

    if (ok) {
      out.append(bytes.substr(i, len));
      i += len;
    } else {
      out.append(replacement);
      ++i;
    }
  }
  return out;
}

/// Percent-encodes path separators (and the escape character itself) so a
/// package id like "@scope/name" maps to one directory entry.
inline std::string encode_package_id(std::string_view id) {
  std::string out;
  out.reserve(id.size());
  for (char c : id) {
    if (c == '/') out += "%2F";
    else if (c == '\\') out += "%5C";
    else if (c == '%') out += "%25";
    else out += c;
  }
  return out;
}

inline std::string decode_package_id(std::string_view name) {
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  out.reserve(name.size());
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name[i] == '%' && i + 2 < name.size() && hex(name[i + 1]) >= 0 && hex(name[i + 2]) >= 0) {
      out += static_cast<char>(hex(name[i + 1]) * 16 + hex(name[i + 2]));
      i += 2;
    } else {
      out += name[i];
    }
  }
  return out;
}

namespace detail {

inline bool extension_accepted(const std::filesystem::path& p, const IngestOptions& opts) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::find(opts.extensions.begin(), opts.extensions.end(), ext) !=
         opts.extensions.end();
}

inline std::string to_forward_slashes(const std::filesystem::path& rel) {
  std::string s = rel.generic_string();
  return s;
}

}  // namespace detail

/// Reads all accepted source files under `path` into a Package, sorted by
/// relative path. Non-source files are skipped silently; oversized files are
/// skipped with a diagnostic.
inline Package ingest_package(const std::filesystem::path& path, const std::string& id,
                              const IngestOptions& opts = {},
                              std::vector<Diagnostic>* diagnostics = nullptr) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::exists(path, ec) || ec)
    throw IngestError("package path does not exist: " + path.string());
  if (!fs::is_directory(path, ec) || ec)
    throw IngestError("package path is not a directory: " + path.string());

  Package pkg;
  pkg.id = id;
  pkg.root_path = path;

  fs::recursive_directory_iterator it(
      path, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw IngestError("cannot read package directory: " + path.string());

  for (const fs::directory_entry& entry : it) {
    if (!entry.is_regular_file(ec) || ec) continue;
    if (!detail::extension_accepted(entry.path(), opts)) continue;

    std::uintmax_t size = entry.file_size(ec);
    if (!ec && size > opts.max_file_size) {
      if (diagnostics)
        diagnostics->push_back({id, entry.path().string(),
                                "file exceeds size cap (" + std::to_string(size) +
                                    " bytes), skipped"});
      continue;
    }

    std::ifstream in(entry.path(), std::ios::binary);
    if (!in) {
      if (diagnostics)
        diagnostics->push_back({id, entry.path().string(), "unreadable file, skipped"});
      continue;
    }
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());

    SourceFile file;
    file.relative_path = detail::to_forward_slashes(fs::relative(entry.path(), path, ec));
    file.content = utf8_lossy(bytes);
    pkg.files.push_back(std::move(file));
  }

  if (pkg.files.empty())
    throw EmptyPackageError("package '" + id + "' contains no accepted source files under " +
                            path.string());

  std::sort(pkg.files.begin(), pkg.files.end(),
            [](const SourceFile& a, const SourceFile& b) {
              return a.relative_path < b.relative_path;
            });
  return pkg;
}

/// Parses one source file with the JavaScript adapter. Throws ParseError
/// with the file path and position; the caller records the file as
/// unparseable and continues.
inline Ast parse_source(const SourceFile& file) {
  try {
    Ast ast;
    ast.root = js::parse_js(file.content);
    ast.source_ref = file.relative_path;
    return ast;
  } catch (const ParseError& e) {
    auto [line, col] = js::line_column(file.content, e.offset());
    throw ParseError(file.relative_path + ":" + std::to_string(line) + ":" +
                         std::to_string(col) + ": " + e.what(),
                     e.offset());
  }
}

/// Lists the package directories of a corpus laid out as
/// `<corpus_root>/<encoded_package_id>/...`, sorted by decoded id.
inline std::vector<std::pair<std::string, std::filesystem::path>> list_corpus(
    const std::filesystem::path& corpus_root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(corpus_root, ec) || ec)
    throw IngestError("corpus root is not a directory: " + corpus_root.string());

  std::vector<std::pair<std::string, fs::path>> out;
  for (const fs::directory_entry& entry : fs::directory_iterator(corpus_root, ec)) {
    if (!entry.is_directory()) continue;
    out.emplace_back(decode_package_id(entry.path().filename().string()), entry.path());
  }
  if (ec) throw IngestError("cannot read corpus root: " + corpus_root.string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace clonesig
