// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "clonesig/corpus.hpp"
#include "clonesig/error.hpp"
#include "clonesig/fingerprint.hpp"
#include "clonesig/parallel.hpp"
#include "clonesig/signature.hpp"

namespace clonesig {

/// Immutable sorted fingerprint -> cluster mapping with binary-search
/// lookups. Persisted as a single-file sorted key-value store:
///
///   magic "CSFI" | u32 version=1 | 32B source-set id | u32 cluster count |
///   clusters (u32 length + bytes each) | u64 entry count |
///   entries (32B fingerprint + u32 cluster index), sorted by fingerprint
struct FingerprintIndex {
  struct Entry {
    Fingerprint fingerprint;
    uint32_t cluster = 0;

    bool operator<(const Entry& other) const { return fingerprint < other.fingerprint; }
  };

  std::vector<Entry> entries;        // sorted by fingerprint
  std::vector<std::string> clusters;
  Fingerprint source_set_id;

  std::size_t size() const { return entries.size(); }

  const std::string* lookup(const Fingerprint& fp) const {
    Entry probe{fp, 0};
    auto it = std::lower_bound(entries.begin(), entries.end(), probe);
    if (it == entries.end() || it->fingerprint != fp) return nullptr;
    return &clusters[it->cluster];
  }
};

/// Indexes the union of all signature fingerprints. A duplicate fingerprint
/// across clusters means the signature file is corrupt.
inline FingerprintIndex build_index(const SignatureSet& set) {
  FingerprintIndex idx;
  std::string identity;
  for (const Signature& sig : set.signatures) {
    uint32_t cluster = static_cast<uint32_t>(idx.clusters.size());
    idx.clusters.push_back(sig.cluster_id);
    for (const Fingerprint& fp : sig.fingerprints) {
      idx.entries.push_back({fp, cluster});
      identity += fp.hex();
      identity += sig.cluster_id;
    }
  }
  std::sort(idx.entries.begin(), idx.entries.end());
  for (std::size_t i = 1; i < idx.entries.size(); ++i)
    if (idx.entries[i].fingerprint == idx.entries[i - 1].fingerprint)
      throw IntegrityError("signature sets must be disjoint; fingerprint " +
                           idx.entries[i].fingerprint.hex() + " indexed twice");
  idx.source_set_id = sha256_bytes(identity);
  return idx;
}

inline void save_index(const FingerprintIndex& idx, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  auto put32 = [&](uint32_t v) {
    char buf[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                   static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(buf, 4);
  };
  auto put64 = [&](uint64_t v) {
    put32(static_cast<uint32_t>(v));
    put32(static_cast<uint32_t>(v >> 32));
  };
  out.write("CSFI", 4);
  put32(1);
  out.write(reinterpret_cast<const char*>(idx.source_set_id.digest.data()), 32);
  put32(static_cast<uint32_t>(idx.clusters.size()));
  for (const std::string& c : idx.clusters) {
    put32(static_cast<uint32_t>(c.size()));
    out.write(c.data(), static_cast<std::streamsize>(c.size()));
  }
  put64(idx.entries.size());
  for (const FingerprintIndex::Entry& e : idx.entries) {
    out.write(reinterpret_cast<const char*>(e.fingerprint.digest.data()), 32);
    put32(e.cluster);
  }
  if (!out) throw Error("failed writing " + path.string());
}

inline FingerprintIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  auto get32 = [&]() -> uint32_t {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    return static_cast<uint32_t>(buf[0]) | (static_cast<uint32_t>(buf[1]) << 8) |
           (static_cast<uint32_t>(buf[2]) << 16) | (static_cast<uint32_t>(buf[3]) << 24);
  };
  auto get64 = [&]() -> uint64_t {
    uint64_t lo = get32();
    uint64_t hi = get32();
    return lo | (hi << 32);
  };

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CSFI", 4) != 0)
    throw IntegrityError("not a fingerprint index file: " + path.string());
  if (uint32_t version = get32(); version != 1)
    throw IntegrityError("unsupported index version " + std::to_string(version));

  FingerprintIndex idx;
  in.read(reinterpret_cast<char*>(idx.source_set_id.digest.data()), 32);
  uint32_t cluster_count = get32();
  for (uint32_t i = 0; i < cluster_count && in; ++i) {
    uint32_t len = get32();
    std::string name(len, '\0');
    in.read(name.data(), len);
    idx.clusters.push_back(std::move(name));
  }
  uint64_t entry_count = get64();
  idx.entries.reserve(entry_count);
  for (uint64_t i = 0; i < entry_count && in; ++i) {
    FingerprintIndex::Entry e;
    in.read(reinterpret_cast<char*>(e.fingerprint.digest.data()), 32);
    e.cluster = get32();
    if (e.cluster >= idx.clusters.size())
      throw IntegrityError("index entry references unknown cluster");
    idx.entries.push_back(e);
  }
  if (!in) throw IntegrityError("truncated index file: " + path.string());
  for (std::size_t i = 1; i < idx.entries.size(); ++i)
    if (!(idx.entries[i - 1] < idx.entries[i]))
      throw IntegrityError("index entries not strictly sorted: " + path.string());
  return idx;
}

/// One function-level signature hit (Eq. 3 evidence).
struct MatchRecord {
  std::string package_id;
  std::string source_ref;
  Span span;
  Fingerprint fingerprint;
  std::string cluster_id;
  std::string scanned_at;  // UTC ISO-8601
};

struct ScanStats {
  uint64_t packages_scanned = 0;
  uint64_t files_scanned = 0;
  uint64_t functions_fingerprinted = 0;
  uint64_t parse_failures = 0;
  uint64_t packages_skipped = 0;  // timeout or ingest failure
  uint64_t elapsed_ms = 0;
};

struct ScanReport {
  std::vector<MatchRecord> records;
  ScanStats stats;
  std::vector<Diagnostic> diagnostics;

  /// Eq.-3 package-level verdicts: cluster ids with at least one record.
  std::map<std::string, std::set<std::string>> verdicts() const {
    std::map<std::string, std::set<std::string>> v;
    for (const MatchRecord& r : records) v[r.package_id].insert(r.cluster_id);
    return v;
  }
};

/// Matches one package's fingerprints against the index: one record per
/// (function record, index hit). Sub-threshold records do not match.
inline std::vector<MatchRecord> match_package(const PackageFingerprints& fps,
                                              const FingerprintIndex& idx,
                                              std::size_t min_node_count = 5,
                                              std::string scanned_at = {}) {
  std::vector<MatchRecord> out;
  if (idx.entries.empty()) return out;
  if (scanned_at.empty()) scanned_at = utc_timestamp_now();
  for (const FingerprintRecord& rec : fps.records) {
    if (rec.node_count < min_node_count) continue;
    const std::string* cluster = idx.lookup(rec.fingerprint);
    if (!cluster) continue;
    out.push_back({rec.package_id, rec.source_ref, rec.span, rec.fingerprint, *cluster,
                   scanned_at});
  }
  return out;
}

inline nlohmann::json match_record_to_json(const MatchRecord& r) {
  return nlohmann::json{{"package_id", r.package_id},
                        {"source_ref", r.source_ref},
                        {"span", {r.span.start, r.span.end}},
                        {"fingerprint", r.fingerprint.hex()},
                        {"cluster_id", r.cluster_id},
                        {"scanned_at", r.scanned_at}};
}

/// Reads a `scan.report.jsonl` file back into records (refinement workflow).
inline std::vector<MatchRecord> load_report_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<MatchRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IntegrityError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    MatchRecord r;
    r.package_id = j.at("package_id").get<std::string>();
    r.source_ref = j.at("source_ref").get<std::string>();
    r.span = {j.at("span").at(0).get<uint32_t>(), j.at("span").at(1).get<uint32_t>()};
    r.fingerprint = Fingerprint::from_hex(j.at("fingerprint").get<std::string>());
    r.cluster_id = j.at("cluster_id").get<std::string>();
    r.scanned_at = j.value("scanned_at", "");
    out.push_back(std::move(r));
  }
  return out;
}

struct ScanOptions {
  IngestOptions ingest;
  FingerprintOptions fingerprint;
  unsigned jobs = 0;
  std::chrono::milliseconds package_timeout{120000};
  // Filled into records; pinning it makes scan output reproducible in tests.
  std::string scanned_at;
};

/// Ingest -> fingerprint -> match for every package directory under
/// `corpus_root`. Parse failures are diagnostics, never fatal. When
/// `jsonl_out` is given, records stream one JSON object per line as package
/// batches complete, so partial results survive interruption.
inline ScanReport scan_corpus(const std::filesystem::path& corpus_root,
                              const FingerprintIndex& idx, const ScanOptions& opts = {},
                              std::ostream* jsonl_out = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  auto packages = list_corpus(corpus_root);  // throws when the root is unreadable

  ScanReport report;
  const std::string scanned_at =
      opts.scanned_at.empty() ? utc_timestamp_now() : opts.scanned_at;

  struct PackageResult {
    std::vector<MatchRecord> records;
    std::vector<Diagnostic> diagnostics;
    uint64_t files = 0, functions = 0, parse_failures = 0;
    bool skipped = false;
  };

  const std::size_t batch = std::max<std::size_t>(effective_jobs(opts.jobs) * 4, 16);
  for (std::size_t base = 0; base < packages.size(); base += batch) {
    const std::size_t count = std::min(batch, packages.size() - base);
    std::vector<PackageResult> results(count);

    parallel_for(count, opts.jobs, [&](std::size_t k) {
      const auto& [id, dir] = packages[base + k];
      PackageResult& res = results[k];
      const auto deadline = std::chrono::steady_clock::now() + opts.package_timeout;

      Package pkg;
      try {
        pkg = ingest_package(dir, id, opts.ingest, &res.diagnostics);
      } catch (const IngestError& e) {
        res.diagnostics.push_back({id, dir.string(), e.what()});
        res.skipped = true;
        return;
      }

      PackageFingerprints fps;
      fps.package_id = id;
      for (const SourceFile& file : pkg.files) {
        if (std::chrono::steady_clock::now() > deadline) {
          res.diagnostics.push_back({id, file.relative_path, "package timeout, skipped"});
          res.skipped = true;
          return;
        }
        ++res.files;
        Ast ast;
        try {
          ast = parse_source(file);
        } catch (const ParseError& e) {
          ++res.parse_failures;
          res.diagnostics.push_back({id, file.relative_path, e.what()});
          continue;
        }
        for (const FunctionUnit& unit : extract_functions(ast, id)) {
          ++res.functions;
          FingerprintRecord rec = fingerprint_function(unit);
          if (rec.node_count >= opts.fingerprint.min_node_count)
            fps.distinct.insert(rec.fingerprint);
          fps.records.push_back(std::move(rec));
        }
      }
      res.records = match_package(fps, idx, opts.fingerprint.min_node_count, scanned_at);
    });

    // Serialize batch results in package order.
    for (PackageResult& res : results) {
      if (res.skipped) {
        ++report.stats.packages_skipped;
      } else {
        ++report.stats.packages_scanned;
      }
      report.stats.files_scanned += res.files;
      report.stats.functions_fingerprinted += res.functions;
      report.stats.parse_failures += res.parse_failures;
      for (MatchRecord& r : res.records) {
        if (jsonl_out) *jsonl_out << match_record_to_json(r).dump() << '\n';
        report.records.push_back(std::move(r));
      }
      for (Diagnostic& d : res.diagnostics) report.diagnostics.push_back(std::move(d));
    }
    if (jsonl_out) jsonl_out->flush();
  }

  report.stats.elapsed_ms = static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - t0)
          .count());
  return report;
}

/// Per-cluster ranking of signature fingerprints by how many distinct
/// packages they matched; ties resolve by fingerprint hex. Supports the
/// inspect-the-top-N refinement workflow.
inline std::map<std::string, std::vector<std::pair<Fingerprint, std::size_t>>> top_matching(
    const SignatureSet& set, const ScanReport& report, std::size_t n) {
  std::map<std::string, std::map<Fingerprint, std::set<std::string>>> hits;
  for (const MatchRecord& r : report.records)
    hits[r.cluster_id][r.fingerprint].insert(r.package_id);

  std::map<std::string, std::vector<std::pair<Fingerprint, std::size_t>>> out;
  for (const Signature& sig : set.signatures) {
    auto it = hits.find(sig.cluster_id);
    if (it == hits.end()) {
      out[sig.cluster_id] = {};
      continue;
    }
    std::vector<std::pair<Fingerprint, std::size_t>> ranked;
    ranked.reserve(it->second.size());
    for (const auto& [fp, packages] : it->second) ranked.emplace_back(fp, packages.size());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (ranked.size() > n) ranked.resize(n);
    out[sig.cluster_id] = std::move(ranked);
  }
  return out;
}

}  // namespace clonesig
