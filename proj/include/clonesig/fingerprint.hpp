// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <openssl/evp.h>

#include <array>
#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "clonesig/ast.hpp"
#include "clonesig/corpus.hpp"
#include "clonesig/error.hpp"

namespace clonesig {

/// 32-byte structural hash of a function subtree.
///
/// The recursive construction is fixed bit-exactly because fingerprint
/// equality is the system's core primitive:
///   H(v) = SHA256( utf8(label(v)) || 0x00 || H(w1) || H(w2) || ... )
/// with children in source order and child digests as raw 32-byte blocks.
struct Fingerprint {
  std::array<uint8_t, 32> digest{};

  auto operator<=>(const Fingerprint&) const = default;

  std::string hex() const {
    static constexpr char alphabet[] = "0123456789abcdef";
    std::string out(64, '0');
    for (std::size_t i = 0; i < 32; ++i) {
      out[2 * i] = alphabet[digest[i] >> 4];
      out[2 * i + 1] = alphabet[digest[i] & 0x0F];
    }
    return out;
  }

  static Fingerprint from_hex(std::string_view hex) {
    if (hex.size() != 64)
      throw IntegrityError("fingerprint hex must be 64 characters, got " +
                           std::to_string(hex.size()));
    auto nibble = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      throw IntegrityError("invalid fingerprint hex digit");
    };
    Fingerprint fp;
    for (std::size_t i = 0; i < 32; ++i)
      fp.digest[i] = static_cast<uint8_t>(nibble(hex[2 * i]) * 16 + nibble(hex[2 * i + 1]));
    return fp;
  }
};

namespace detail {

/// Thin RAII wrapper over one reusable OpenSSL digest context.
class Sha256 {
public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_) throw Error("failed to allocate SHA-256 context");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void begin() {
    if (EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      throw Error("SHA-256 init failed");
  }
  void update(const void* data, std::size_t len) {
    if (EVP_DigestUpdate(ctx_, data, len) != 1) throw Error("SHA-256 update failed");
  }
  Fingerprint end() {
    Fingerprint fp;
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, fp.digest.data(), &len) != 1 || len != 32)
      throw Error("SHA-256 final failed");
    return fp;
  }

  static Sha256& local() {
    thread_local Sha256 instance;
    return instance;
  }

private:
  EVP_MD_CTX* ctx_;
};

}  // namespace detail

/// One-shot SHA-256 of an arbitrary byte string (also used to identify
/// benign-corpus snapshots).
inline Fingerprint sha256_bytes(std::string_view bytes) {
  auto& h = detail::Sha256::local();
  h.begin();
  h.update(bytes.data(), bytes.size());
  return h.end();
}

/// The label t(v): the node kind only. Identifier names, literal values, and
/// operator symbols are not part of it.
inline std::string_view node_label(const AstNode& node) {
  return kind_name(node.kind);  // throws VocabularyError on out-of-range kinds
}

/// Eq. 1: recursive hash of a node within a function subtree.
inline Fingerprint hash_node(const AstNode& node) {
  std::vector<Fingerprint> child_digests;
  child_digests.reserve(node.children.size());
  for (const AstNode& child : node.children) child_digests.push_back(hash_node(child));

  // Children are hashed to completion above; the shared context is then
  // re-initialised for this node.
  auto& h = detail::Sha256::local();
  std::string_view label = node_label(node);
  h.begin();
  h.update(label.data(), label.size());
  static constexpr uint8_t separator = 0x00;
  h.update(&separator, 1);
  for (const Fingerprint& child : child_digests) h.update(child.digest.data(), 32);
  return h.end();
}

/// Provenance-carrying fingerprint of one function unit.
struct FingerprintRecord {
  Fingerprint fingerprint;
  std::string package_id;
  std::string source_ref;
  Span span;
  UnitOrigin origin = UnitOrigin::declared_function;
  std::size_t node_count = 0;
};

struct FingerprintOptions {
  // Units below this node count are kept in `records` but excluded from
  // matching-relevant sets; near-empty functions collide massively and
  // would poison signatures.
  std::size_t min_node_count = 5;
};

struct PackageFingerprints {
  std::string package_id;
  std::vector<FingerprintRecord> records;
  std::set<Fingerprint> distinct;  // records at or above the node-count threshold
};

/// Eq. 2: the fingerprint of a function is the hash of its pruned root.
inline FingerprintRecord fingerprint_function(const FunctionUnit& unit) {
  FingerprintRecord rec;
  rec.fingerprint = hash_node(unit.root);
  rec.package_id = unit.package_id;
  rec.source_ref = unit.source_ref;
  rec.span = unit.root.span;
  rec.origin = unit.origin;
  rec.node_count = unit.node_count;
  return rec;
}

/// Fingerprints every function unit of every parseable file in the package.
/// Unparseable files contribute nothing beyond a diagnostic.
inline PackageFingerprints fingerprint_package(const Package& pkg,
                                               const FingerprintOptions& opts = {},
                                               std::vector<Diagnostic>* diagnostics = nullptr) {
  PackageFingerprints out;
  out.package_id = pkg.id;
  std::size_t parse_failures = 0;
  for (const SourceFile& file : pkg.files) {
    Ast ast;
    try {
      ast = parse_source(file);
    } catch (const ParseError& e) {
      ++parse_failures;
      if (diagnostics) diagnostics->push_back({pkg.id, file.relative_path, e.what()});
      continue;
    }
    for (const FunctionUnit& unit : extract_functions(ast, pkg.id)) {
      FingerprintRecord rec = fingerprint_function(unit);
      if (rec.node_count >= opts.min_node_count) out.distinct.insert(rec.fingerprint);
      out.records.push_back(std::move(rec));
    }
  }
  if (out.records.empty() && diagnostics)
    diagnostics->push_back({pkg.id, "",
                            parse_failures > 0
                                ? "all files unparseable, package has no fingerprints"
                                : "package yielded no fingerprints"});
  return out;
}

}  // namespace clonesig
