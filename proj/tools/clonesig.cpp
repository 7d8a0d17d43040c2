// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
// clonesig — cluster packages by shared syntactic code fragments, derive
// per-cluster detection signatures, and scan corpora for variants of known
// malicious code.
//
// Exit codes: 0 = ran clean, 1 = matches found (scan), 2 = fatal error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "clonesig/pipeline.hpp"
#include "clonesig/scanner.hpp"
#include "clonesig/vocabulary.hpp"

namespace fs = std::filesystem;
using namespace clonesig;

namespace {

struct CliState {
  PipelineConfig config;
  unsigned jobs = 0;
};

void add_common_options(CLI::App* cmd, CliState& state) {
  cmd->add_option("--corpus", state.config.corpus_root, "Corpus root directory");
  cmd->add_option("--output-dir,-o", state.config.output_dir,
                  "Directory for stage artifacts (default: out)");
  cmd->add_option("--jobs,-j", state.jobs, "Worker threads (0 = hardware concurrency)");
  cmd->add_option("--min-node-count", state.config.fingerprint.min_node_count,
                  "Node-count threshold below which fingerprints do not match");
  cmd->add_option("--extensions", state.config.ingest.extensions,
                  "Accepted source extensions (default .js .mjs .cjs)");
  cmd->add_option("--max-file-size", state.config.ingest.max_file_size,
                  "Per-file size cap in bytes (larger files are skipped)");
  cmd->add_option("--size-ratio-guard", state.config.distance.size_ratio_guard,
                  "Skip exact TED for unit pairs above this size ratio");
  cmd->add_flag_callback(
      "--no-size-guard",
      [&state] { state.config.distance.guard_enabled = false; },
      "Always run the exact TED dynamic program");
  cmd->add_flag("--force", state.config.force, "Recompute stages even if artifacts exist");
}

void add_cluster_options(CLI::App* cmd, CliState& state) {
  cmd->add_option("--algo", state.config.algorithm, "mcl | ccomp | clique | dbscan");
  cmd->add_option("--tau", state.config.tau, "Distance threshold for graph edges");
  std::map<std::string, Weighting> weightings{{"binary", Weighting::binary},
                                              {"inverse", Weighting::inverse}};
  cmd->add_option("--weighting", state.config.weighting, "binary | inverse")
      ->transform(CLI::CheckedTransformer(weightings, CLI::ignore_case));
  cmd->add_option("--expansion", state.config.mcl_params.expansion, "MCL expansion e");
  cmd->add_option("--inflation", state.config.mcl_params.inflation, "MCL inflation r");
  cmd->add_option("--prune-threshold", state.config.mcl_params.prune_threshold,
                  "MCL pruning threshold");
  cmd->add_option("--max-iterations", state.config.mcl_params.max_iterations,
                  "MCL iteration cap");
  cmd->add_option("--dbscan-eps", state.config.dbscan_eps, "DBSCAN epsilon");
  cmd->add_option("--dbscan-min-pts", state.config.dbscan_min_pts, "DBSCAN minPts");
  cmd->add_option("--max-cliques", state.config.clique.max_cliques,
                  "Clique enumeration cap");
}

int cmd_ingest(CliState& state) {
  state.config.validate();
  fs::create_directories(state.config.output_dir);

  std::vector<Diagnostic> diagnostics;
  std::vector<PackageFingerprints> all;
  std::size_t files = 0;
  for (const auto& [id, dir] : list_corpus(state.config.corpus_root)) {
    Package pkg;
    try {
      pkg = ingest_package(dir, id, state.config.ingest, &diagnostics);
    } catch (const IngestError& e) {
      diagnostics.push_back({id, dir.string(), e.what()});
      continue;
    }
    files += pkg.files.size();
    all.push_back(fingerprint_package(pkg, state.config.fingerprint, &diagnostics));
  }
  save_fingerprints_jsonl(all, state.config.fingerprints_path());
  append_diagnostics(state.config.diagnostics_path(), diagnostics);

  std::size_t records = 0;
  for (const auto& pkg : all) records += pkg.records.size();
  std::cout << "ingested " << all.size() << " packages, " << files << " files, " << records
            << " fingerprints -> " << state.config.fingerprints_path().string() << "\n";
  if (!diagnostics.empty())
    std::cout << diagnostics.size() << " diagnostics -> "
              << state.config.diagnostics_path().string() << "\n";
  return 0;
}

int cmd_distances(CliState& state) {
  state.config.validate();
  state.config.distance.jobs = state.jobs;
  fs::create_directories(state.config.output_dir);
  run_embed_stage(state.config, &std::cout);
  return 0;
}

int cmd_cluster(CliState& state) {
  fs::create_directories(state.config.output_dir);
  if (!fs::exists(state.config.distances_path()))
    throw Error("distance artifact missing: " + state.config.distances_path().string() +
                " (run `clonesig distances` first)");
  run_cluster_stage(state.config, &std::cout);
  return 0;
}

int cmd_eval(CliState& state, const std::string& reference_path, bool table,
             const std::string& json_out) {
  Clustering reference = load_clusters_json(reference_path);

  std::vector<EvalRow> rows;
  if (table) {
    DistanceMatrix m = load_distances_csv(state.config.distances_path());
    rows = evaluate_all_algorithms(m, reference, state.config);
  } else {
    Clustering automatic = load_clusters_json(state.config.clusters_path());
    std::string params;
    for (const auto& [k, v] : automatic.params) {
      if (!params.empty()) params += ", ";
      std::ostringstream tmp;
      tmp << k << "=" << v;
      params += tmp.str();
    }
    rows.push_back({automatic.algorithm, params, evaluate_clustering(automatic, reference)});
  }

  std::cout << std::left << std::setw(10) << "Clustering" << std::setw(34) << "Parameter"
            << std::right << std::setw(10) << "Precision" << std::setw(10) << "Recall"
            << std::setw(10) << "F1" << "\n";
  for (const EvalRow& row : rows) {
    std::cout << std::left << std::setw(10) << row.algorithm << std::setw(34) << row.params
              << std::right << std::fixed << std::setprecision(4) << std::setw(10)
              << row.metrics.precision << std::setw(10) << row.metrics.recall
              << std::setw(10) << row.metrics.f1 << "\n";
  }

  if (!json_out.empty()) {
    nlohmann::json j = nlohmann::json::array();
    for (const EvalRow& row : rows)
      j.push_back({{"algorithm", row.algorithm},
                   {"params", row.params},
                   {"precision", row.metrics.precision},
                   {"recall", row.metrics.recall},
                   {"f1", row.metrics.f1},
                   {"confusion",
                    {{"tp", row.metrics.confusion.tp},
                     {"tn", row.metrics.confusion.tn},
                     {"fp", row.metrics.confusion.fp},
                     {"fn", row.metrics.confusion.fn}}}});
    std::ofstream out(json_out, std::ios::binary);
    if (!out) throw Error("cannot write " + json_out);
    out << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_sign(CliState& state) {
  fs::create_directories(state.config.output_dir);
  run_sign_stage(state.config, &std::cout);
  return 0;
}

int cmd_pipeline(CliState& state) {
  state.config.distance.jobs = state.jobs;
  return run_pipeline(state.config, &std::cout);
}

int cmd_refine(CliState& state, std::size_t top, const std::string& report_path,
               const std::string& signatures_path, const std::vector<std::string>& remove,
               const std::string& reason, const std::string& cluster_filter,
               const std::string& add_label, const std::vector<std::string>& add_fps) {
  fs::path sig_path = signatures_path.empty() ? state.config.signatures_path()
                                              : fs::path(signatures_path);
  SignatureSet set = load_signatures_json(sig_path);
  bool changed = false;

  if (!add_label.empty()) {
    std::vector<FingerprintRecord> records;
    for (const std::string& hex : add_fps) {
      FingerprintRecord rec;
      rec.fingerprint = Fingerprint::from_hex(hex);
      rec.package_id = "manual";
      rec.node_count = state.config.fingerprint.min_node_count;
      records.push_back(std::move(rec));
    }
    std::vector<Diagnostic> diagnostics;
    Signature sig = manual_signature(add_label, records, set, &diagnostics);
    for (const Diagnostic& d : diagnostics)
      std::cerr << "warning: " << d.message << "\n";
    set.signatures.push_back(std::move(sig));
    std::cout << "added manual:" << add_label << " with "
              << set.signatures.back().fingerprints.size() << " fingerprints\n";
    changed = true;
  }

  if (!remove.empty()) {
    if (reason.empty()) throw Error("--remove requires --reason");
    std::set<Fingerprint> fps;
    for (const std::string& hex : remove) fps.insert(Fingerprint::from_hex(hex));
    for (Signature& sig : set.signatures) {
      if (!cluster_filter.empty() && sig.cluster_id != cluster_filter) continue;
      std::set<Fingerprint> present;
      for (const Fingerprint& fp : fps)
        if (sig.fingerprints.count(fp)) present.insert(fp);
      if (present.empty()) continue;
      sig = remove_fingerprints(sig, present, reason);
      std::cout << "removed " << present.size() << " fingerprint(s) from " << sig.cluster_id
                << "\n";
      changed = true;
    }
  }

  if (changed) {
    set.check_disjoint();
    save_signatures_json(set, sig_path);
    std::cout << "updated " << sig_path.string() << "\n";
  }

  if (!report_path.empty()) {
    ScanReport report;
    report.records = load_report_jsonl(report_path);
    auto ranking = top_matching(set, report, top);
    for (const auto& [cluster, ranked] : ranking) {
      if (!cluster_filter.empty() && cluster != cluster_filter) continue;
      std::cout << cluster << ": top " << ranked.size() << " matching fingerprints\n";
      for (const auto& [fp, count] : ranked)
        std::cout << "  " << fp.hex() << "  " << count << " package(s)\n";
    }
  } else if (!changed) {
    std::cout << "nothing to do: pass --report for rankings, --remove or --add to edit\n";
  }
  return 0;
}

int cmd_scan(CliState& state, const std::string& corpus, const std::string& signatures,
             const std::string& index_path, const std::string& report_path,
             const std::string& save_index_path, long timeout_seconds, bool quiet) {
  FingerprintIndex idx;
  if (!index_path.empty()) {
    idx = load_index(index_path);
  } else if (!signatures.empty()) {
    SignatureSet set = load_signatures_json(signatures);
    idx = build_index(set);
  } else {
    throw Error("scan requires --signatures or --index");
  }
  if (!save_index_path.empty()) save_index(idx, save_index_path);

  ScanOptions opts;
  opts.ingest = state.config.ingest;
  opts.fingerprint = state.config.fingerprint;
  opts.jobs = state.jobs;
  if (timeout_seconds > 0) opts.package_timeout = std::chrono::seconds(timeout_seconds);

  std::ofstream report_file;
  std::ostream* sink = nullptr;
  if (!report_path.empty()) {
    report_file.open(report_path, std::ios::binary);
    if (!report_file) throw Error("cannot write " + report_path);
    sink = &report_file;
  }

  ScanReport report = scan_corpus(corpus, idx, opts, sink);

  if (!quiet) {
    SignatureSet set_for_summary;
    if (!signatures.empty()) set_for_summary = load_signatures_json(signatures);
    else
      for (const std::string& cluster : idx.clusters) {
        Signature s;
        s.cluster_id = cluster;
        set_for_summary.signatures.push_back(std::move(s));
      }
    std::cout << summarize(report, set_for_summary);
    if (!report_path.empty())
      std::cout << "report: " << report_path << " (" << report.records.size()
                << " records)\n";
  }
  return report.records.empty() ? 0 : 1;
}

int cmd_vocabulary() {
  for (std::string_view name : kNodeKindNames) std::cout << name << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clonesig — AST clone clustering, signature derivation, corpus scanning"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value config file");
  app.fallthrough(false);

  CliState state;

  auto* ingest = app.add_subcommand("ingest", "Parse and fingerprint a corpus");
  ingest->add_option("corpus", state.config.corpus_root, "Corpus root")->required();
  add_common_options(ingest, state);

  auto* distances = app.add_subcommand(
      "distances", "Compute the pairwise minimum-TED distance matrix (embed stage)");
  distances->add_option("--corpus", state.config.corpus_root, "Corpus root")->required();
  add_common_options(distances, state);

  auto* cluster = app.add_subcommand("cluster", "Cluster packages from distances.csv");
  add_common_options(cluster, state);
  add_cluster_options(cluster, state);

  std::string reference_path, eval_json;
  bool eval_table = false;
  auto* eval = app.add_subcommand("eval", "Score clusterings against a reference");
  eval->add_option("--reference", reference_path, "Reference clusters.json")->required();
  eval->add_flag("--table", eval_table, "Run all algorithms on distances.csv");
  eval->add_option("--json", eval_json, "Also write the table as JSON");
  add_common_options(eval, state);
  add_cluster_options(eval, state);

  auto* sign = app.add_subcommand("sign", "Derive per-cluster signatures");
  sign->add_option("--benign", state.config.benign_root,
                   "Benign corpus directory (condition 3)");
  add_common_options(sign, state);

  std::size_t refine_top = 50;
  std::string refine_report, refine_signatures, refine_reason, refine_cluster, add_label;
  std::vector<std::string> remove_fps, add_fps;
  auto* refine = app.add_subcommand("refine", "Inspect and edit signature sets");
  refine->add_option("--top", refine_top, "Rank the N most matching fingerprints");
  refine->add_option("--report", refine_report, "scan.report.jsonl to rank against");
  refine->add_option("--signatures", refine_signatures,
                     "Signature file (default <output-dir>/signatures.json)");
  refine->add_option("--remove", remove_fps, "Fingerprints (hex) to remove");
  refine->add_option("--reason", refine_reason, "Reason recorded in the refinement log");
  refine->add_option("--cluster", refine_cluster, "Restrict to one cluster id");
  refine->add_option("--add-manual", add_label, "Create a manual pseudo-cluster signature");
  refine->add_option("--fingerprints", add_fps, "Fingerprints (hex) for --add-manual");
  add_common_options(refine, state);

  std::string scan_corpus_dir, scan_signatures, scan_index, scan_report_path, scan_save_index;
  long scan_timeout = 0;
  bool scan_quiet = false;
  auto* scan = app.add_subcommand("scan", "Scan a corpus against a signature set");
  scan->add_option("corpus", scan_corpus_dir, "Corpus root to scan")->required();
  scan->add_option("--signatures", scan_signatures, "signatures.json to match against");
  scan->add_option("--index", scan_index, "Prebuilt fingerprint index file");
  scan->add_option("--report", scan_report_path, "Write matches as JSONL");
  scan->add_option("--save-index", scan_save_index, "Persist the built index");
  scan->add_option("--timeout", scan_timeout, "Per-package timeout in seconds");
  scan->add_flag("--quiet", scan_quiet, "Suppress the summary");
  add_common_options(scan, state);

  auto* pipeline =
      app.add_subcommand("pipeline", "Run embed -> cluster -> sign with resumable stages");
  pipeline->add_option("--corpus", state.config.corpus_root, "Corpus root")->required();
  pipeline->add_option("--benign", state.config.benign_root, "Benign corpus directory");
  add_common_options(pipeline, state);
  add_cluster_options(pipeline, state);

  auto* vocab = app.add_subcommand("vocabulary", "Print the frozen node-kind vocabulary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(state);
    if (distances->parsed()) return cmd_distances(state);
    if (cluster->parsed()) return cmd_cluster(state);
    if (eval->parsed()) return cmd_eval(state, reference_path, eval_table, eval_json);
    if (sign->parsed()) return cmd_sign(state);
    if (refine->parsed())
      return cmd_refine(state, refine_top, refine_report, refine_signatures, remove_fps,
                        refine_reason, refine_cluster, add_label, add_fps);
    if (scan->parsed())
      return cmd_scan(state, scan_corpus_dir, scan_signatures, scan_index, scan_report_path,
                      scan_save_index, scan_timeout, scan_quiet);
    if (pipeline->parsed()) return cmd_pipeline(state);
    if (vocab->parsed()) return cmd_vocabulary();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
