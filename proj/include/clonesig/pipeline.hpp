// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clonesig/clustering.hpp"
#include "clonesig/corpus.hpp"
#include "clonesig/distance.hpp"
#include "clonesig/error.hpp"
#include "clonesig/evaluation.hpp"
#include "clonesig/fingerprint.hpp"
#include "clonesig/mcl.hpp"
#include "clonesig/scanner.hpp"
#include "clonesig/signature.hpp"

namespace clonesig {

/// Validated configuration for the embed -> cluster -> sign pipeline.
/// Stage artifacts live under `output_dir` with fixed names so later stages
/// (and reruns) can pick up where a previous run stopped.
struct PipelineConfig {
  std::filesystem::path corpus_root;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> benign_root;

  std::string parser = "js";
  IngestOptions ingest;
  FingerprintOptions fingerprint;
  DistanceOptions distance;

  uint32_t tau = 1;
  Weighting weighting = Weighting::binary;

  std::string algorithm = "mcl";  // mcl | ccomp | clique | dbscan
  MclParams mcl_params;
  uint32_t dbscan_eps = 1;
  std::size_t dbscan_min_pts = 2;
  CliqueOptions clique;

  bool force = false;  // recompute stages even when their artifact exists

  std::filesystem::path fingerprints_path() const { return output_dir / "fingerprints.jsonl"; }
  std::filesystem::path distances_path() const { return output_dir / "distances.csv"; }
  std::filesystem::path clusters_path() const { return output_dir / "clusters.json"; }
  std::filesystem::path signatures_path() const { return output_dir / "signatures.json"; }
  std::filesystem::path diagnostics_path() const { return output_dir / "diagnostics.log"; }

  void validate() const {
    if (corpus_root.empty()) throw ConfigError("config field 'corpus' must be set");
    if (!std::filesystem::is_directory(corpus_root))
      throw ConfigError("config field 'corpus': not a directory: " + corpus_root.string());
    if (benign_root && !std::filesystem::is_directory(*benign_root))
      throw ConfigError("config field 'benign': not a directory: " + benign_root->string());
    if (parser != "js")
      throw ConfigError("config field 'parser': unknown adapter '" + parser + "'");
    if (ingest.extensions.empty())
      throw ConfigError("config field 'extensions' must not be empty");
    if (algorithm != "mcl" && algorithm != "ccomp" && algorithm != "clique" &&
        algorithm != "dbscan")
      throw ConfigError("config field 'algo': unknown algorithm '" + algorithm + "'");
    if (mcl_params.expansion < 2) throw ConfigError("config field 'expansion' must be >= 2");
    if (mcl_params.inflation <= 1.0) throw ConfigError("config field 'inflation' must be > 1");
    if (mcl_params.max_iterations < 1)
      throw ConfigError("config field 'max_iterations' must be >= 1");
    if (distance.size_ratio_guard < 1.0)
      throw ConfigError("config field 'size_ratio_guard' must be >= 1");
    if (fingerprint.min_node_count < 1)
      throw ConfigError("config field 'min_node_count' must be >= 1");
    if (dbscan_min_pts < 1) throw ConfigError("config field 'dbscan_min_pts' must be >= 1");
  }
};

// ---- fingerprints.jsonl -------------------------------------------------

inline void save_fingerprints_jsonl(const std::vector<PackageFingerprints>& all,
                                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const PackageFingerprints& pkg : all)
    for (const FingerprintRecord& rec : pkg.records) {
      nlohmann::json j{{"package_id", rec.package_id},
                       {"source_ref", rec.source_ref},
                       {"span", {rec.span.start, rec.span.end}},
                       {"origin", std::string(origin_name(rec.origin))},
                       {"node_count", rec.node_count},
                       {"fingerprint", rec.fingerprint.hex()}};
      out << j.dump() << '\n';
    }
  if (!out) throw Error("failed writing " + path.string());
}

inline std::map<std::string, PackageFingerprints> load_fingerprints_jsonl(
    const std::filesystem::path& path, std::size_t min_node_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::map<std::string, PackageFingerprints> out;
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
    FingerprintRecord rec;
    rec.package_id = j.at("package_id").get<std::string>();
    rec.source_ref = j.at("source_ref").get<std::string>();
    rec.span = {j.at("span").at(0).get<uint32_t>(), j.at("span").at(1).get<uint32_t>()};
    std::string origin = j.at("origin").get<std::string>();
    rec.origin = origin == "member_function"     ? UnitOrigin::member_function
                 : origin == "global_scope_dummy" ? UnitOrigin::global_scope_dummy
                                                  : UnitOrigin::declared_function;
    rec.node_count = j.at("node_count").get<std::size_t>();
    rec.fingerprint = Fingerprint::from_hex(j.at("fingerprint").get<std::string>());

    PackageFingerprints& pkg = out[rec.package_id];
    pkg.package_id = rec.package_id;
    if (rec.node_count >= min_node_count) pkg.distinct.insert(rec.fingerprint);
    pkg.records.push_back(std::move(rec));
  }
  return out;
}

inline void append_diagnostics(const std::filesystem::path& path,
                               const std::vector<Diagnostic>& diagnostics) {
  if (diagnostics.empty()) return;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  for (const Diagnostic& d : diagnostics) {
    out << d.package_id;
    if (!d.path.empty()) out << " " << d.path;
    out << ": " << d.message << '\n';
  }
}

// ---- stages -----------------------------------------------------------

/// Embed: parse every package once, emitting fingerprints.jsonl and
/// distances.csv.
inline void run_embed_stage(const PipelineConfig& config, std::ostream* log = nullptr) {
  std::vector<Diagnostic> diagnostics;
  auto packages = list_corpus(config.corpus_root);

  std::vector<PackageAsts> asts;
  std::vector<PackageFingerprints> fps;
  for (const auto& [id, dir] : packages) {
    Package pkg;
    try {
      pkg = ingest_package(dir, id, config.ingest, &diagnostics);
    } catch (const IngestError& e) {
      diagnostics.push_back({id, dir.string(), e.what()});
      continue;
    }
    asts.push_back(package_asts(pkg, nullptr));
    fps.push_back(fingerprint_package(pkg, config.fingerprint, &diagnostics));
  }

  save_fingerprints_jsonl(fps, config.fingerprints_path());
  DistanceMatrix m = distance_matrix(asts, config.distance, &diagnostics);
  save_distances_csv(m, config.distances_path());
  append_diagnostics(config.diagnostics_path(), diagnostics);
  if (log)
    *log << "embed: " << m.size() << " packages, " << m.size() * (m.size() - 1) / 2
         << " distances\n";
}

inline Clustering run_cluster_stage(const PipelineConfig& config, std::ostream* log = nullptr) {
  DistanceMatrix m = load_distances_csv(config.distances_path());
  Clustering result;
  if (config.algorithm == "dbscan") {
    result = dbscan(m, config.dbscan_eps, config.dbscan_min_pts);
  } else {
    AffinityGraph g = build_graph(m, config.tau, config.weighting);
    if (config.algorithm == "mcl") result = mcl(g, config.mcl_params);
    else if (config.algorithm == "ccomp") result = connected_components(g);
    else result = maximal_cliques(g, config.clique);
  }
  save_clusters_json(result, config.clusters_path());
  if (log)
    *log << "cluster: " << result.algorithm << " found " << result.clusters.size()
         << " clusters, " << result.noise.size() << " noise packages"
         << (result.converged ? "" : " (not converged)") << "\n";
  return result;
}

/// Builds the benign fingerprint set from a corpus directory (condition 3).
inline BenignCorpus benign_corpus_from_dir(const std::filesystem::path& root,
                                           const IngestOptions& ingest,
                                           const FingerprintOptions& fp_opts,
                                           std::vector<Diagnostic>* diagnostics = nullptr) {
  std::set<Fingerprint> fps;
  for (const auto& [id, dir] : list_corpus(root)) {
    Package pkg;
    try {
      pkg = ingest_package(dir, id, ingest, diagnostics);
    } catch (const IngestError& e) {
      if (diagnostics) diagnostics->push_back({id, dir.string(), e.what()});
      continue;
    }
    PackageFingerprints pf = fingerprint_package(pkg, fp_opts, diagnostics);
    fps.insert(pf.distinct.begin(), pf.distinct.end());
  }
  return BenignCorpus::from_fingerprints(std::move(fps));
}

inline SignatureSet run_sign_stage(const PipelineConfig& config, std::ostream* log = nullptr) {
  Clustering clusters = load_clusters_json(config.clusters_path());
  auto fps = load_fingerprints_jsonl(config.fingerprints_path(),
                                     config.fingerprint.min_node_count);

  std::vector<Diagnostic> diagnostics;
  BenignCorpus benign;
  if (config.benign_root)
    benign = benign_corpus_from_dir(*config.benign_root, config.ingest, config.fingerprint,
                                    &diagnostics);
  else
    benign = BenignCorpus::from_fingerprints({});

  SignatureSet set = derive_signatures(clusters, fps, benign, &diagnostics);
  save_signatures_json(set, config.signatures_path());
  append_diagnostics(config.diagnostics_path(), diagnostics);
  if (log)
    *log << "sign: " << set.signatures.size() << " signatures, "
         << set.total_fingerprints() << " fingerprints (benign corpus "
         << (config.benign_root ? benign.corpus_id.substr(0, 12) : "empty") << ")\n";
  return set;
}

/// Full pipeline: embed -> cluster -> sign. A stage is skipped (and logged)
/// when its artifacts already exist, so runs resume from persisted state.
inline int run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr) {
  config.validate();
  std::filesystem::create_directories(config.output_dir);

  namespace fs = std::filesystem;
  bool have_embed = fs::exists(config.fingerprints_path()) && fs::exists(config.distances_path());
  if (config.force || !have_embed) {
    run_embed_stage(config, log);
  } else if (log) {
    *log << "embed: artifacts present, stage skipped\n";
  }

  if (config.force || !fs::exists(config.clusters_path())) {
    run_cluster_stage(config, log);
  } else if (log) {
    *log << "cluster: artifact present, stage skipped\n";
  }

  if (config.force || !fs::exists(config.signatures_path())) {
    run_sign_stage(config, log);
  } else if (log) {
    *log << "sign: artifact present, stage skipped\n";
  }
  return 0;
}

/// Human-readable scan summary: per-cluster match counts at both
/// granularities, the most-matched packages, and parse failures.
inline std::string summarize(const ScanReport& report, const SignatureSet& set) {
  std::ostringstream out;
  auto verdicts = report.verdicts();

  std::map<std::string, std::size_t> record_counts;
  std::map<std::string, std::set<std::string>> package_hits;
  for (const MatchRecord& r : report.records) {
    ++record_counts[r.cluster_id];
    package_hits[r.cluster_id].insert(r.package_id);
  }

  out << "scan summary\n";
  out << "  packages scanned: " << report.stats.packages_scanned << "\n";
  out << "  files: " << report.stats.files_scanned
      << ", functions: " << report.stats.functions_fingerprinted
      << ", parse failures: " << report.stats.parse_failures << "\n";
  if (report.stats.packages_skipped > 0)
    out << "  packages skipped: " << report.stats.packages_skipped << "\n";
  out << "  matches: " << report.records.size() << " in " << verdicts.size()
      << " packages\n";

  out << "  per cluster (function matches / matched packages):\n";
  for (const Signature& sig : set.signatures) {
    out << "    " << sig.cluster_id << ": " << record_counts[sig.cluster_id] << " / "
        << package_hits[sig.cluster_id].size() << "\n";
  }

  std::map<std::string, std::size_t> per_package;
  for (const MatchRecord& r : report.records) ++per_package[r.package_id];
  std::vector<std::pair<std::string, std::size_t>> top(per_package.begin(), per_package.end());
  std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (!top.empty()) {
    out << "  top matched packages:\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(top.size(), 10); ++i)
      out << "    " << top[i].first << ": " << top[i].second << "\n";
  }
  return out.str();
}

/// Table-1-style comparison: run every clustering algorithm on one distance
/// matrix and score each against the reference.
struct EvalRow {
  std::string algorithm;
  std::string params;
  MetricsReport metrics;
};

inline std::vector<EvalRow> evaluate_all_algorithms(const DistanceMatrix& m,
                                                    const Clustering& reference,
                                                    const PipelineConfig& config) {
  AffinityGraph g = build_graph(m, config.tau, config.weighting);
  std::vector<EvalRow> rows;

  auto add = [&](const Clustering& c, const std::string& params) {
    rows.push_back({c.algorithm, params, evaluate_clustering(c, reference)});
  };
  {
    std::ostringstream p;
    p << "exp=" << config.mcl_params.expansion << ", inf=" << config.mcl_params.inflation;
    add(mcl(g, config.mcl_params), p.str());
  }
  add(connected_components(g), "");
  {
    std::ostringstream p;
    p << "eps=" << config.dbscan_eps << ", minPts=" << config.dbscan_min_pts;
    add(dbscan(m, config.dbscan_eps, config.dbscan_min_pts), p.str());
  }
  add(maximal_cliques(g, config.clique), "");

  std::sort(rows.begin(), rows.end(),
            [](const EvalRow& a, const EvalRow& b) { return a.metrics.f1 > b.metrics.f1; });
  return rows;
}

}  // namespace clonesig
