#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "esiaudit/types.hpp"

namespace esiaudit {

struct CohortRow {
  long subject_id = 0;
  long stay_id = 0;
  Gender gender = Gender::F;
  int age = 0;  // capped at 91; sources group patients over 89 there
  Race race = Race::Unknown;
  std::string race_raw;
  std::string chief_complaint;
  double temperature = 0;  // degrees F
  double heart_rate = 0;
  double resp_rate = 0;
  double spo2 = 0;
  double sbp = 0;
  double dbp = 0;
  std::optional<int> pain;  // 0-10 when charted numerically
  std::vector<std::string> medications;
  int esi = 0;  // 1..5
  Disposition disposition = Disposition::Other;
  ComplaintCategory category = ComplaintCategory::GeneralMedical;
};

struct StratumKey {
  int esi = 1;
  ComplaintCategory category = ComplaintCategory::GeneralMedical;

  auto operator<=>(const StratumKey&) const = default;
};

inline std::string to_string(const StratumKey& k) {
  return "ESI-" + std::to_string(k.esi) + "/" + std::string(to_string(k.category));
}

// Ordered race-standardization rules. Shipped as an editable JSON data file;
// the builtin table mirrors that file (a test keeps them in sync).
struct RaceRule {
  enum class Match { Prefix, Contains };
  Match match = Match::Prefix;
  std::string pattern;  // compared uppercase
  Race race = Race::Unknown;
};

struct RaceRules {
  std::vector<RaceRule> rules;
  Race fallback = Race::Unknown;

  static RaceRules builtin();
  static RaceRules load(const std::filesystem::path& path);
};

Race standardize_race(std::string_view raw, const RaceRules& rules);
ComplaintCategory categorize_complaint(std::string_view text);

// Cohort-stage obstetric screen (pair-stage sex-linked screening is a
// separate, wider filter owned by the vignette module).
bool is_obstetric_complaint(std::string_view text);

struct IngestCounts {
  long rows_edstays = 0;
  long malformed = 0;
  long missing_triage = 0;
  long missing_patient = 0;
  long missing_esi = 0;
  long missing_complaint = 0;
  long missing_heart_rate = 0;
  long missing_blood_pressure = 0;
  long excluded_lwbs = 0;
  long excluded_under_18 = 0;
  long excluded_obstetric = 0;
  long kept = 0;
};

struct IngestResult {
  std::vector<CohortRow> rows;
  IngestCounts counts;
};

// Joins the four MIMIC-shaped tables into one row per ED stay, applying the
// inclusion criteria. Rows failing a criterion are dropped and counted
// (first failing criterion wins); malformed rows are skipped, never fatal.
IngestResult ingest_tables(const std::filesystem::path& edstays_path,
                           const std::filesystem::path& triage_path,
                           const std::filesystem::path& patients_path,
                           const std::filesystem::path& medrecon_path,
                           const RaceRules& race_rules = RaceRules::builtin());

std::string ingest_manifest_json(const IngestCounts& counts);

struct SampleManifest {
  int per_stratum_target = 0;
  uint64_t seed = 0;
  std::map<std::string, long> stratum_counts;
  std::vector<std::string> empty_strata;
  std::vector<long> duplicate_stay_ids;  // stay ids sampled more than once
  long n_sampled = 0;
};

struct SampleResult {
  std::vector<CohortRow> rows;
  SampleManifest manifest;
};

// Up to per_stratum_target rows per (ESI x category) stratum, uniform
// without replacement, deterministic given the seed. Duplicate stay ids in
// the output are allowed but flagged in the manifest.
SampleResult stratified_sample(const std::vector<CohortRow>& rows,
                               int per_stratum_target, uint64_t seed);

std::string sample_manifest_json(const SampleManifest& m);

// Writes edstays.csv, triage.csv, patients.csv, medrecon.csv under out_dir
// with marginal distributions matching the audit cohort's demographics.
// Includes small shares of excluded-by-design rows (minors, LWBS, obstetric,
// missing fields) so ingestion counters are exercised end to end.
void synth_cohort(const std::filesystem::path& out_dir, long n, uint64_t seed);

}  // namespace esiaudit
