// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "clonesig/clustering.hpp"
#include "clonesig/error.hpp"
#include "clonesig/fingerprint.hpp"

namespace clonesig {

inline std::string utc_timestamp_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Where a signature fingerprint was observed.
struct ProvenanceEntry {
  std::string package_id;
  std::string source_ref;
  Span span;

  auto operator<=>(const ProvenanceEntry&) const = default;
};

struct RefinementEntry {
  std::string fingerprint_hex;
  std::string reason;
  std::string timestamp;  // UTC ISO-8601
  bool was_present = true;
};

/// Per-cluster set of characteristic fingerprints. An empty signature is
/// retained (with a diagnostic at derivation time) so coverage gaps stay
/// visible.
struct Signature {
  std::string cluster_id;
  std::set<Fingerprint> fingerprints;
  std::map<Fingerprint, std::vector<ProvenanceEntry>> provenance;
  std::vector<RefinementEntry> refinement_log;
};

/// Fingerprints of the configured benign package list (condition 3).
struct BenignCorpus {
  std::string corpus_id;  // content hash of the fingerprint snapshot
  std::set<Fingerprint> fingerprints;

  static BenignCorpus from_fingerprints(std::set<Fingerprint> fps) {
    BenignCorpus b;
    b.fingerprints = std::move(fps);
    std::string concat;
    concat.reserve(b.fingerprints.size() * 64);
    for (const Fingerprint& fp : b.fingerprints) concat += fp.hex();
    b.corpus_id = sha256_bytes(concat).hex();
    return b;
  }
};

struct SignatureSet {
  std::vector<Signature> signatures;
  std::string benign_corpus_id;
  int format_version = 1;
  std::string generated_at;  // UTC ISO-8601

  const Signature* find(const std::string& cluster_id) const {
    for (const Signature& s : signatures)
      if (s.cluster_id == cluster_id) return &s;
    return nullptr;
  }

  /// Pairwise disjointness of fingerprint sets is the set-level invariant;
  /// violated files are corrupt.
  void check_disjoint() const {
    std::map<Fingerprint, const std::string*> seen;
    for (const Signature& s : signatures)
      for (const Fingerprint& fp : s.fingerprints) {
        auto [it, inserted] = seen.emplace(fp, &s.cluster_id);
        if (!inserted)
          throw IntegrityError("fingerprint " + fp.hex() + " appears in signatures '" +
                               *it->second + "' and '" + s.cluster_id + "'");
      }
  }

  std::size_t total_fingerprints() const {
    std::size_t n = 0;
    for (const Signature& s : signatures) n += s.fingerprints.size();
    return n;
  }
};

/// Derives one signature per cluster under the three conditions: a
/// fingerprint is characteristic iff it appears in no package of any other
/// cluster, appears in at least two distinct packages of its own cluster,
/// and is absent from the benign corpus. Sub-threshold fingerprints never
/// participate (they are not in PackageFingerprints::distinct).
inline SignatureSet derive_signatures(const Clustering& clustering,
                                      const std::map<std::string, PackageFingerprints>& fps,
                                      const BenignCorpus& benign,
                                      std::vector<Diagnostic>* diagnostics = nullptr) {
  if (clustering.clusters.empty())
    throw SignatureError("cannot derive signatures from an empty clustering");
  for (const auto& cluster : clustering.clusters)
    for (const std::string& id : cluster)
      if (!fps.count(id))
        throw SignatureError("no fingerprints available for clustered package '" + id + "'");

  // fingerprint -> set of cluster indices whose packages contain it
  // (noise packages are in no cluster and do not affect condition 1).
  std::map<Fingerprint, std::set<std::size_t>> owners;
  for (std::size_t c = 0; c < clustering.clusters.size(); ++c)
    for (const std::string& id : clustering.clusters[c])
      for (const Fingerprint& fp : fps.at(id).distinct) owners[fp].insert(c);

  SignatureSet out;
  out.benign_corpus_id = benign.corpus_id;
  out.generated_at = utc_timestamp_now();

  for (std::size_t c = 0; c < clustering.clusters.size(); ++c) {
    const auto& members = clustering.clusters[c];
    Signature sig;
    sig.cluster_id = "cluster:" + std::to_string(c + 1);

    // Distinct member packages per fingerprint (condition 2).
    std::map<Fingerprint, std::set<std::string>> package_count;
    for (const std::string& id : members)
      for (const Fingerprint& fp : fps.at(id).distinct) package_count[fp].insert(id);

    for (const auto& [fp, packages] : package_count) {
      if (owners.at(fp).size() != 1) continue;        // condition 1: unique to its cluster
      if (packages.size() < 2) continue;              // condition 2: recurring
      if (benign.fingerprints.count(fp)) continue;    // condition 3: not benign
      sig.fingerprints.insert(fp);
      auto& prov = sig.provenance[fp];
      for (const std::string& id : packages)
        for (const FingerprintRecord& rec : fps.at(id).records)
          if (rec.fingerprint == fp)
            prov.push_back({rec.package_id, rec.source_ref, rec.span});
      std::sort(prov.begin(), prov.end());
    }

    if (sig.fingerprints.empty() && diagnostics)
      diagnostics->push_back({sig.cluster_id, "",
                              "cluster yielded no characteristic fingerprints"});
    out.signatures.push_back(std::move(sig));
  }
  return out;
}

/// Builds a pseudo-cluster signature from hand-picked records. Fingerprints
/// already owned by a signature in `active` are rejected with diagnostics so
/// set disjointness survives manual additions.
inline Signature manual_signature(const std::string& label,
                                  const std::vector<FingerprintRecord>& records,
                                  const SignatureSet& active,
                                  std::vector<Diagnostic>* diagnostics = nullptr) {
  if (records.empty()) throw SignatureError("manual signature requires at least one record");

  std::set<Fingerprint> taken;
  for (const Signature& s : active.signatures)
    taken.insert(s.fingerprints.begin(), s.fingerprints.end());

  Signature sig;
  sig.cluster_id = "manual:" + label;
  for (const FingerprintRecord& rec : records) {
    if (taken.count(rec.fingerprint)) {
      if (diagnostics)
        diagnostics->push_back({sig.cluster_id, rec.source_ref,
                                "fingerprint " + rec.fingerprint.hex() +
                                    " conflicts with an existing signature; rejected"});
      continue;
    }
    sig.fingerprints.insert(rec.fingerprint);
    sig.provenance[rec.fingerprint].push_back({rec.package_id, rec.source_ref, rec.span});
  }
  if (sig.fingerprints.empty())
    throw SignatureError("manual signature '" + label +
                         "': every fingerprint conflicts with the active set");
  return sig;
}

/// Returns a copy of `sig` without `fps`, appending one refinement-log entry
/// per requested fingerprint. Removing an absent fingerprint is a logged
/// no-op.
inline Signature remove_fingerprints(const Signature& sig, const std::set<Fingerprint>& fps,
                                     const std::string& reason,
                                     std::string timestamp = {}) {
  if (timestamp.empty()) timestamp = utc_timestamp_now();
  Signature out = sig;
  for (const Fingerprint& fp : fps) {
    bool present = out.fingerprints.erase(fp) > 0;
    out.provenance.erase(fp);
    out.refinement_log.push_back({fp.hex(), reason, timestamp, present});
  }
  return out;
}

// ---- signatures.json -------------------------------------------------------

inline nlohmann::json signature_set_to_json(const SignatureSet& set) {
  nlohmann::json sigs = nlohmann::json::array();
  for (const Signature& s : set.signatures) {
    nlohmann::json j;
    j["cluster_id"] = s.cluster_id;
    nlohmann::json fps = nlohmann::json::array();
    for (const Fingerprint& fp : s.fingerprints) fps.push_back(fp.hex());
    j["fingerprints"] = fps;
    nlohmann::json prov = nlohmann::json::object();
    for (const auto& [fp, entries] : s.provenance) {
      nlohmann::json list = nlohmann::json::array();
      for (const ProvenanceEntry& e : entries)
        list.push_back({{"package_id", e.package_id},
                        {"source_ref", e.source_ref},
                        {"span", {e.span.start, e.span.end}}});
      prov[fp.hex()] = list;
    }
    j["provenance"] = prov;
    nlohmann::json log = nlohmann::json::array();
    for (const RefinementEntry& e : s.refinement_log)
      log.push_back({{"fingerprint", e.fingerprint_hex},
                     {"reason", e.reason},
                     {"timestamp", e.timestamp},
                     {"was_present", e.was_present}});
    j["refinement_log"] = log;
    sigs.push_back(j);
  }
  return nlohmann::json{{"format_version", set.format_version},
                        {"benign_corpus_id", set.benign_corpus_id},
                        {"generated_at", set.generated_at},
                        {"signatures", sigs}};
}

inline SignatureSet signature_set_from_json(const nlohmann::json& j) {
  SignatureSet set;
  set.format_version = j.at("format_version").get<int>();
  if (set.format_version != 1)
    throw IntegrityError("unsupported signature file format_version " +
                         std::to_string(set.format_version));
  set.benign_corpus_id = j.value("benign_corpus_id", "");
  set.generated_at = j.value("generated_at", "");
  for (const auto& js : j.at("signatures")) {
    Signature s;
    s.cluster_id = js.at("cluster_id").get<std::string>();
    for (const auto& hex : js.at("fingerprints"))
      s.fingerprints.insert(Fingerprint::from_hex(hex.get<std::string>()));
    if (js.contains("provenance"))
      for (const auto& [hex, list] : js.at("provenance").items()) {
        Fingerprint fp = Fingerprint::from_hex(hex);
        for (const auto& e : list) {
          ProvenanceEntry entry;
          entry.package_id = e.at("package_id").get<std::string>();
          entry.source_ref = e.at("source_ref").get<std::string>();
          entry.span = {e.at("span").at(0).get<uint32_t>(),
                        e.at("span").at(1).get<uint32_t>()};
          s.provenance[fp].push_back(std::move(entry));
        }
      }
    if (js.contains("refinement_log"))
      for (const auto& e : js.at("refinement_log"))
        s.refinement_log.push_back({e.at("fingerprint").get<std::string>(),
                                    e.value("reason", ""), e.value("timestamp", ""),
                                    e.value("was_present", true)});
    set.signatures.push_back(std::move(s));
  }
  set.check_disjoint();
  return set;
}

inline void save_signatures_json(const SignatureSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << signature_set_to_json(set).dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

inline SignatureSet load_signatures_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("malformed signature file " + path.string() + ": " + e.what());
  }
  return signature_set_from_json(j);
}

}  // namespace clonesig
