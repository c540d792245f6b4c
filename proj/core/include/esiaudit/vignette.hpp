#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "esiaudit/cohort.hpp"
#include "esiaudit/rng.hpp"
#include "esiaudit/types.hpp"

namespace esiaudit {

enum class Variant {
  Original,
  Counterfactual,
  GenderOnly,
  NameOnly,
  AgePreservingBlind,
  Blind,
};

std::string to_string(Variant v);
Variant variant_from_string(std::string_view s);

struct SexLinkedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PoolExhaustedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RenderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The clinical payload a counterfactual pair must hold byte-identical. The
// chief complaint keeps its source pronouns verbatim; render() rewrites them
// for the side whose displayed gender differs from the source.
struct ClinicalFields {
  std::string chief_complaint;
  double temperature = 0;
  double heart_rate = 0;
  double resp_rate = 0;
  double spo2 = 0;
  double sbp = 0;
  double dbp = 0;
  std::optional<int> pain;
  std::vector<std::string> medications;

  bool operator==(const ClinicalFields&) const = default;
};

ClinicalFields clinical_from(const CohortRow& row);

// Stable hash of the clinical payload only. Both sides of a pair and their
// blind twins share one value, which is what lets the simulator key its
// pair-level decisions off content rather than ids.
uint64_t clinical_hash(const ClinicalFields& c);

struct Vignette {
  std::string vignette_id;
  std::string pair_id;
  Variant variant = Variant::Original;
  std::optional<std::string> name;
  std::optional<Gender> gender;  // displayed gender; absent for blind variants
  std::optional<int> age;        // absent for the full blind variant
  Race race = Race::Unknown;     // provenance only, never rendered
  Gender source_gender = Gender::F;  // gender of the complaint as written
  Gender side_gender = Gender::F;    // which side of the pair this row is
  ClinicalFields clinical;
  int ground_truth_esi = 0;
  Disposition disposition = Disposition::Other;
  ComplaintCategory category = ComplaintCategory::GeneralMedical;
  long stay_id = 0;
  std::string text;
};

// Rendering and validation -------------------------------------------------

std::string render(const Vignette& v);

enum class Violation {
  WordCountLow,
  WordCountHigh,
  MissingChiefComplaint,
  MissingHeartRate,
  MissingBloodPressure,
};

std::string to_string(Violation v);

std::vector<Violation> validate(std::string_view text);

// Name pools ----------------------------------------------------------------

struct NamePool {
  // Keyed by (gender, race) for the four pooled races. Other/Unknown draw
  // from the union of the four same-gender pools, in White, Black, Hispanic,
  // Asian order so draws are reproducible.
  std::map<std::pair<Gender, Race>, std::vector<std::string>> entries;

  static NamePool builtin();
  static NamePool load(const std::filesystem::path& path);

  // Throws if any pool is missing or has the wrong size, or if a name
  // appears under both genders.
  void check() const;

  std::vector<std::string> candidates(Gender g, Race r) const;
  std::string draw(Gender g, Race r, Rng& rng) const;
  std::string draw_different(Gender g, Race r, const std::string& current,
                             Rng& rng) const;

  // True if any pool name appears as a whole word. Used by the blind scrub.
  bool contains_pool_name(std::string_view text) const;
};

// Transforms -----------------------------------------------------------------

bool is_sex_linked(std::string_view complaint);

Vignette make_counterfactual(const Vignette& v, const NamePool& pools, Rng& rng);
Vignette gender_only_swap(const Vignette& v);
Vignette name_only_swap(const Vignette& v, const NamePool& pools, Rng& rng);
Vignette age_preserving_blind(const Vignette& v);
Vignette blind(const Vignette& v);

// Pronoun rewriting, exposed for the scrub tests. Whole-word, case-preserving.
std::string flip_pronouns(std::string_view text);
std::string neutralize_pronouns(std::string_view text);

// True if text contains a gendered token (female/male, she/he/her/his/hers/
// him, Ms/Mr, woman/man) or, when pools is given, any pool name.
bool has_demographic_token(std::string_view text, const NamePool* pools = nullptr);

// Corpus ---------------------------------------------------------------------

struct CorpusBuildResult {
  std::vector<Vignette> vignettes;
  long n_rows = 0;
  long n_pairs = 0;       // rows that got a counterfactual partner
  long n_sex_linked = 0;  // rows kept unpaired
  uint64_t seed = 0;
  bool ablations = true;
};

// Turns sampled cohort rows into the evaluation corpus: original +
// counterfactual + blind twins per row, plus the three ablation variants
// unless ablations is off. Sex-linked rows get only "-o" and "-ob".
CorpusBuildResult build_corpus(const std::vector<CohortRow>& rows,
                               const NamePool& pools, uint64_t seed,
                               bool ablations = true);

std::string corpus_manifest_json(const CorpusBuildResult& r);

std::string vignette_to_json(const Vignette& v);
Vignette vignette_from_json(const std::string& line);

void write_corpus(const std::filesystem::path& path,
                  const std::vector<Vignette>& vignettes);
std::vector<Vignette> read_corpus(const std::filesystem::path& path);

}  // namespace esiaudit
