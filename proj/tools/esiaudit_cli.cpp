#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "esiaudit/cohort.hpp"
#include "esiaudit/report.hpp"
#include "esiaudit/runner.hpp"
#include "esiaudit/simulator.hpp"

namespace {

using namespace esiaudit;

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!content.empty() && content.back() != '\n') out << "\n";
}

int cmd_synth(const std::string& out, long n, uint64_t seed) {
  synth_cohort(out, n, seed);
  std::cout << "wrote edstays/triage/patients/medrecon CSVs (" << n
            << " stays) under " << out << "\n";
  return 0;
}

int cmd_build(const std::string& cohort_dir, int per_stratum, uint64_t seed,
              const std::string& pools_path, const std::string& rules_path,
              const std::string& out_dir, bool no_ablations) {
  std::filesystem::path dir(cohort_dir);
  RaceRules rules =
      rules_path.empty() ? RaceRules::builtin() : RaceRules::load(rules_path);
  IngestResult ingested =
      ingest_tables(dir / "edstays.csv", dir / "triage.csv", dir / "patients.csv",
                    dir / "medrecon.csv", rules);

  SampleResult sampled = stratified_sample(ingested.rows, per_stratum, seed);

  NamePool pools = pools_path.empty() ? NamePool::builtin() : NamePool::load(pools_path);
  pools.check();
  CorpusBuildResult corpus = build_corpus(sampled.rows, pools, seed, !no_ablations);

  std::filesystem::path out(out_dir);
  std::filesystem::create_directories(out);
  write_corpus(out / "corpus.jsonl", corpus.vignettes);
  write_file(out / "ingest_manifest.json", ingest_manifest_json(ingested.counts));
  write_file(out / "sample_manifest.json", sample_manifest_json(sampled.manifest));
  write_file(out / "corpus_manifest.json", corpus_manifest_json(corpus));

  std::cout << "kept " << ingested.counts.kept << " of "
            << ingested.counts.rows_edstays << " stays, sampled "
            << sampled.manifest.n_sampled << ", built " << corpus.vignettes.size()
            << " vignettes (" << corpus.n_pairs << " pairs, " << corpus.n_sex_linked
            << " sex-linked) into " << (out / "corpus.jsonl").string() << "\n";
  return 0;
}

int cmd_run(const std::string& config_path) {
  RunConfig config = RunConfig::load(config_path);
  std::vector<Vignette> corpus = read_corpus(config.corpus_path);
  RunSummary summary = execute(config, corpus);
  std::cout << run_manifest_json(summary) << "\n";
  std::cerr << "records: " << config.records_path().string() << "\n";
  return 0;
}

int cmd_retest(const std::string& config_path, const std::string& endpoint_id,
               long n, uint64_t seed, const std::string& out_path) {
  RunConfig config = RunConfig::load(config_path);
  const ModelEndpoint* endpoint = nullptr;
  for (const auto& e : config.endpoints)
    if (e.id == endpoint_id) endpoint = &e;
  if (!endpoint) {
    std::cerr << "error: no endpoint '" << endpoint_id << "' in " << config_path
              << "\n";
    return 1;
  }
  std::vector<Vignette> corpus = read_corpus(config.corpus_path);
  Gateway gateway(*endpoint, config.decode, config.retry);
  RetestResult result = test_retest(gateway, corpus, n, seed);
  std::string json = retest_json(result);
  std::cout << json << "\n";
  if (!out_path.empty()) write_file(out_path, json);
  return 0;
}

// Endpoint order, strategy order, and toggles normally come from the run
// config. Without one they are reconstructed from the records themselves:
// endpoints in first-appearance order, strategies in canonical order.
RunConfig config_from_records(const std::vector<EvalRecord>& records,
                              const std::filesystem::path& corpus_path,
                              const std::filesystem::path& out_dir) {
  RunConfig config;
  config.corpus_path = corpus_path;
  config.output_dir = out_dir;
  std::set<std::string> seen_endpoints;
  std::set<Strategy> seen_strategies;
  for (const auto& r : records) {
    if (seen_endpoints.insert(r.endpoint_id).second) {
      ModelEndpoint e;
      e.id = r.endpoint_id;
      config.endpoints.push_back(std::move(e));
    }
    seen_strategies.insert(r.strategy);
  }
  for (Strategy s : kAllStrategies)
    if (seen_strategies.count(s)) config.strategies.push_back(s);
  return config;
}

int cmd_analyze(const CLI::App* cmd, const std::string& records_path,
                const std::string& corpus_path, const std::string& out_dir,
                const std::string& config_path, uint64_t seed, bool augmentation,
                bool dedupe) {
  RecordLoad load = load_records(records_path);
  if (load.records.empty()) {
    std::cerr << "error: no usable records in " << records_path << "\n";
    return 1;
  }
  std::vector<Vignette> corpus = read_corpus(corpus_path);

  RunConfig config;
  if (!config_path.empty())
    config = RunConfig::load(config_path);
  else
    config = config_from_records(load.records, corpus_path, out_dir);
  if (cmd->count("--seed")) config.seed = seed;
  if (cmd->count("--augmentation")) config.augmentation_mode = augmentation;
  if (cmd->count("--dedupe")) config.dedupe_duplicates = dedupe;

  AuditReport report = analyze(load.records, corpus, config, load.malformed_lines);
  nlohmann::json j = audit_report_to_json(report);

  std::filesystem::path out(out_dir);
  for (const char* format : {"json", "csv", "md"}) write_report_files(j, out, format);
  std::cout << "wrote audit.json, headline/calibration/intervals/pairwise CSVs, "
               "summary.md, and prompts/ under "
            << out_dir << "\n";
  return 0;
}

int cmd_report(const std::string& analysis_path, const std::string& format,
               const std::string& out_dir) {
  std::ifstream in(analysis_path);
  if (!in) {
    std::cerr << "error: cannot open " << analysis_path << "\n";
    return 1;
  }
  nlohmann::json report = nlohmann::json::parse(in);
  std::filesystem::path out = out_dir.empty()
                                  ? std::filesystem::path(analysis_path).parent_path()
                                  : std::filesystem::path(out_dir);
  if (out.empty()) out = ".";
  write_report_files(report, out, format);
  std::cout << "wrote " << format << " report under " << out.string() << "\n";
  return 0;
}

int cmd_serve(const std::string& host, const SimProfile& profile) {
  profile.check();
  SimulatorServer server(profile);
  int port = server.start(host);
  std::cout << "simulator listening on http://" << host << ":" << port
            << "/v1/chat/completions\n"
            << std::flush;
  for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual fairness audit for model-assigned ESI triage"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic four-table cohort");
  long synth_n = 2000;
  uint64_t synth_seed = 42;
  std::string synth_out;
  synth->add_option("--n", synth_n, "ED stays to generate")->capture_default_str();
  synth->add_option("--seed", synth_seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  auto* build =
      app.add_subcommand("build", "Ingest, sample, and build the vignette corpus");
  std::string build_cohort, build_pools, build_rules, build_out;
  int build_per_stratum = 250;
  uint64_t build_seed = 42;
  bool build_no_ablations = false;
  build->add_option("--cohort", build_cohort, "Directory holding the four cohort CSVs")
      ->required();
  build->add_option("--per-stratum", build_per_stratum,
                    "Sampling target per ESI x category stratum")
      ->capture_default_str();
  build->add_option("--seed", build_seed, "RNG seed")->capture_default_str();
  build->add_option("--pools", build_pools, "Name pool JSON (builtin when omitted)");
  build->add_option("--race-rules", build_rules,
                    "Race standardization rules JSON (builtin when omitted)");
  build->add_option("--out", build_out, "Output directory")->required();
  build->add_flag("--no-ablations", build_no_ablations,
                  "Skip the gender-only, name-only, and age-preserving variants");

  auto* run = app.add_subcommand("run", "Evaluate the corpus against every endpoint");
  std::string run_config;
  run->add_option("--config", run_config, "Run config JSON")->required();

  auto* retest = app.add_subcommand(
      "retest", "Evaluate sampled originals twice and report the flip floor");
  std::string rt_config, rt_endpoint, rt_out;
  long rt_n = 500;
  uint64_t rt_seed = 42;
  retest->add_option("--config", rt_config, "Run config JSON")->required();
  retest->add_option("--endpoint", rt_endpoint, "Endpoint id from the config")
      ->required();
  retest->add_option("--n", rt_n, "Originals to sample")->capture_default_str();
  retest->add_option("--seed", rt_seed, "Sampling seed")->capture_default_str();
  retest->add_option("--out", rt_out, "Also write the JSON result here");

  auto* analyze_cmd =
      app.add_subcommand("analyze", "Join pairs, compute metrics, write reports");
  std::string an_records, an_corpus, an_out, an_config;
  uint64_t an_seed = 42;
  bool an_augment = false, an_dedupe = false;
  analyze_cmd->add_option("--records", an_records, "records.jsonl from a run")
      ->required();
  analyze_cmd->add_option("--corpus", an_corpus, "corpus.jsonl the run evaluated")
      ->required();
  analyze_cmd->add_option("--out", an_out, "Output directory")->required();
  analyze_cmd->add_option("--config", an_config,
                          "Run config JSON; endpoint order, seed, and toggles "
                          "are otherwise reconstructed from the records");
  analyze_cmd->add_option("--seed", an_seed, "Bootstrap seed")->capture_default_str();
  analyze_cmd->add_flag("--augmentation", an_augment,
                        "Also report pair-aggregated (more urgent of two) accuracy");
  analyze_cmd->add_flag("--dedupe", an_dedupe,
                        "Lead with duplicate-stay-deduplicated metrics");

  auto* report_cmd =
      app.add_subcommand("report", "Re-render a saved analysis in another format");
  std::string rep_analysis, rep_format = "csv", rep_out;
  report_cmd->add_option("--analysis", rep_analysis, "audit.json from analyze")
      ->required();
  report_cmd->add_option("--format", rep_format, "csv, json, or md")
      ->check(CLI::IsMember({"csv", "json", "md"}))
      ->capture_default_str();
  report_cmd->add_option("--out", rep_out,
                         "Output directory (defaults to the analysis file's)");

  auto* serve =
      app.add_subcommand("serve", "Serve the biased-model simulator over HTTP");
  std::string sv_host = "127.0.0.1";
  SimProfile sv_profile;
  int sv_degenerate = 0;
  serve->add_option("--host", sv_host)->capture_default_str();
  serve->add_option("--seed", sv_profile.seed, "Simulator seed")->capture_default_str();
  serve->add_option("--p-flip", sv_profile.p_flip, "Pair flip probability")
      ->capture_default_str();
  serve->add_option("--fm-skew", sv_profile.fm_skew,
                    "Share of flips that undertriage the female variant")
      ->capture_default_str();
  serve->add_option("--base-error", sv_profile.base_error,
                    "Probability of a +/-1 deviation from ground truth")
      ->capture_default_str();
  serve->add_option("--noise-rate", sv_profile.noise_rate,
                    "Probability a repeated call answers differently")
      ->capture_default_str();
  serve->add_option("--degenerate", sv_degenerate,
                    "Always answer this level (0 disables)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_out, synth_n, synth_seed);
    if (build->parsed())
      return cmd_build(build_cohort, build_per_stratum, build_seed, build_pools,
                       build_rules, build_out, build_no_ablations);
    if (run->parsed()) return cmd_run(run_config);
    if (retest->parsed())
      return cmd_retest(rt_config, rt_endpoint, rt_n, rt_seed, rt_out);
    if (analyze_cmd->parsed())
      return cmd_analyze(analyze_cmd, an_records, an_corpus, an_out, an_config,
                         an_seed, an_augment, an_dedupe);
    if (report_cmd->parsed()) return cmd_report(rep_analysis, rep_format, rep_out);
    if (serve->parsed()) {
      if (sv_degenerate > 0) sv_profile.degenerate_level = sv_degenerate;
      return cmd_serve(sv_host, sv_profile);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
