#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "esiaudit/gateway.hpp"
#include "esiaudit/metrics.hpp"
#include "esiaudit/records.hpp"
#include "esiaudit/stats.hpp"
#include "esiaudit/strategy.hpp"
#include "esiaudit/vignette.hpp"

namespace esiaudit {

struct RunConfig {
  std::vector<ModelEndpoint> endpoints;
  std::vector<Strategy> strategies;
  std::filesystem::path corpus_path;
  std::filesystem::path output_dir;
  uint64_t seed = 42;
  bool augmentation_mode = false;
  bool dedupe_duplicates = false;
  DecodeConfig decode;
  RetryPolicy retry;

  // Reads the JSON config; relative paths resolve against the config file's
  // directory. API keys are referenced by environment-variable name only.
  static RunConfig load(const std::filesystem::path& path);
  void check() const;

  std::filesystem::path records_path() const { return output_dir / "records.jsonl"; }
};

// Which corpus variants a strategy evaluates. Baseline picks up the ablation
// variants when the corpus contains them; CoT and Debiased run the
// demographic pair only; Blind runs the blind twins.
bool strategy_accepts(Strategy s, Variant v);

struct WorkItem {
  size_t endpoint = 0;  // index into config.endpoints
  Strategy strategy = Strategy::Baseline;
  size_t vignette = 0;  // index into the corpus
};

std::vector<WorkItem> plan(const RunConfig& config,
                           const std::vector<Vignette>& corpus,
                           const std::set<RecordKey>& completed);

struct RunSummary {
  long planned = 0;
  long skipped_resume = 0;
  long ok = 0;
  long parse_failures = 0;
  long persistent_failures = 0;
};

std::string run_manifest_json(const RunSummary& s);

// Runs the full plan against every endpoint, appending each record durably
// as it completes. Safe to interrupt and re-run; completed keys are skipped.
RunSummary execute(const RunConfig& config, const std::vector<Vignette>& corpus);

// Pair-level provenance shared by every variant of a pair, taken from the
// original vignette.
struct PairMeta {
  int truth_esi = 0;
  ComplaintCategory category = ComplaintCategory::GeneralMedical;
  Race race = Race::Unknown;
  AgeBand age_band = AgeBand::From18to44;
  bool admitted = false;
  Gender original_gender = Gender::F;
  long stay_id = 0;
  bool has_partner = false;  // false for sex-linked rows
};

std::map<std::string, PairMeta> pair_metadata(const std::vector<Vignette>& corpus);

struct PairJoin {
  std::vector<PairOutcome> pairs;
  long excluded = 0;  // partner exists but a side is missing or non-OK
  long unpaired = 0;  // no partner vignette in the corpus (sex-linked)
};

// Joins one endpoint x strategy record subset into pair outcomes for the
// requested contrast: Original against `partner`, or the two blind twins
// when `partner` is Blind. The F slot always holds the F-side prediction.
PairJoin pair_join(const std::vector<EvalRecord>& records,
                   const std::vector<Vignette>& corpus, Variant partner);

struct RetestResult {
  long flips = 0;
  long valid_pairs = 0;
  double rate = 0;
  stats::Ci wilson;
  stats::Ci clopper_pearson;
};

// Evaluates n sampled originals twice each with identical messages under
// Baseline and counts disagreements among fully parsed duplicates.
RetestResult test_retest(Gateway& gateway, const std::vector<Vignette>& corpus,
                         long n, uint64_t seed);

std::string retest_json(const RetestResult& r);

struct ProfileClass {
  char label = 'B';  // 'A' directional female, 'B' near parity, 'C' high flip
  bool high_flip_composite = false;  // flip above the systematic band for 'A'
};

std::string to_string(const ProfileClass& p);

ProfileClass classify_profile(double flip_rate, stats::Ci fm_ci);

struct AblationReport {
  std::string contrast;
  long n_pairs = 0;
  long excluded = 0;
  long unpaired = 0;
  double flip = 0;
  long f_ut = 0;
  long m_ut = 0;
  FmRatio fm;
};

struct PairwiseTest {
  std::string endpoint_a;
  std::string endpoint_b;
  std::string kind;  // "mcnemar_flip" or "chi2_direction"
  bool defined = false;
  stats::PairedTestResult result;
  std::string note;  // reason when undefined
};

// Everything computed for one endpoint x strategy cell.
struct CellAnalysis {
  std::string endpoint_id;
  Strategy strategy = Strategy::Baseline;
  long pairs_joined = 0;
  long pairs_excluded = 0;
  long unpaired = 0;
  MetricReport metrics;
  std::optional<MetricReport> sensitivity;  // the other dedupe variant
  bool dedupe_applied = false;
  std::optional<stats::BootstrapResult> flip_ci;
  std::optional<stats::BootstrapResult> fm_ci;
  std::string ci_note;  // set when intervals are unavailable
  std::string profile;
  std::vector<AblationReport> ablations;
  std::optional<Accuracy> augmented;  // more-urgent-of-two aggregation
};

struct AuditReport {
  uint64_t seed = 42;
  bool augmentation_mode = false;
  bool dedupe_duplicates = false;
  std::vector<std::string> endpoint_ids;
  std::vector<Strategy> strategies;
  long n_vignettes = 0;
  long n_corpus_pairs = 0;
  long n_sex_linked = 0;
  long n_duplicate_stays = 0;
  long malformed_record_lines = 0;
  std::vector<CellAnalysis> cells;
  std::vector<PairwiseTest> pairwise;  // Baseline, across endpoints
  double bonferroni_alpha = 0;
  int n_pairwise_tests = 0;
};

AuditReport analyze(const std::vector<EvalRecord>& records,
                    const std::vector<Vignette>& corpus, const RunConfig& config,
                    long malformed_record_lines = 0);

}  // namespace esiaudit
