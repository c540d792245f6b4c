#include "esiaudit/cohort.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "esiaudit/csv.hpp"
#include "esiaudit/rng.hpp"

namespace esiaudit {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool word_at(const std::string& hay, size_t pos, size_t len) {
  bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(hay[pos - 1]));
  bool right = pos + len >= hay.size() ||
               !std::isalnum(static_cast<unsigned char>(hay[pos + len]));
  return left && right;
}

bool contains_word(const std::string& hay_lower, std::string_view needle) {
  for (size_t pos = hay_lower.find(needle); pos != std::string::npos;
       pos = hay_lower.find(needle, pos + 1)) {
    if (word_at(hay_lower, pos, needle.size())) return true;
  }
  return false;
}

// needle assumed lowercase. Short keywords (acronyms like SI, SOB, MVC)
// match whole words only, so "SI" never fires inside "dizziness".
bool contains_keyword(const std::string& hay_lower, std::string_view needle) {
  if (needle.size() <= 3) return contains_word(hay_lower, needle);
  return hay_lower.find(needle) != std::string::npos;
}

}  // namespace

RaceRules RaceRules::builtin() {
  using M = RaceRule::Match;
  RaceRules r;
  r.rules = {
      {M::Prefix, "WHITE", Race::White},
      {M::Prefix, "BLACK", Race::Black},
      {M::Prefix, "HISPANIC", Race::Hispanic},
      {M::Contains, "LATINO", Race::Hispanic},
      {M::Prefix, "ASIAN", Race::Asian},
      {M::Prefix, "SOUTH AMERICAN", Race::Hispanic},
      {M::Prefix, "PORTUGUESE", Race::White},
      {M::Contains, "AMERICAN INDIAN", Race::Other},
      {M::Contains, "ALASKA NATIVE", Race::Other},
      {M::Contains, "HAWAIIAN", Race::Other},
      {M::Contains, "PACIFIC ISLANDER", Race::Other},
      {M::Prefix, "MULTIPLE", Race::Other},
      {M::Prefix, "OTHER", Race::Other},
      {M::Prefix, "UNKNOWN", Race::Unknown},
      {M::Contains, "UNABLE", Race::Unknown},
      {M::Contains, "DECLINED", Race::Unknown},
  };
  r.fallback = Race::Unknown;
  return r;
}

RaceRules RaceRules::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("race rules: cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  RaceRules r;
  for (const auto& rule : j.at("rules")) {
    RaceRule rr;
    std::string m = rule.at("match").get<std::string>();
    if (m == "prefix")
      rr.match = RaceRule::Match::Prefix;
    else if (m == "contains")
      rr.match = RaceRule::Match::Contains;
    else
      throw std::runtime_error("race rules: unknown match kind " + m);
    rr.pattern = upper(rule.at("pattern").get<std::string>());
    rr.race = race_from_string(rule.at("race").get<std::string>());
    r.rules.push_back(std::move(rr));
  }
  r.fallback = race_from_string(j.value("default", "Unknown"));
  return r;
}

Race standardize_race(std::string_view raw, const RaceRules& rules) {
  std::string s = upper(trim(raw));
  if (s.empty()) return Race::Unknown;
  for (const auto& rule : rules.rules) {
    bool hit = rule.match == RaceRule::Match::Prefix
                   ? s.rfind(rule.pattern, 0) == 0
                   : s.find(rule.pattern) != std::string::npos;
    if (hit) return rule.race;
  }
  return rules.fallback;
}

ComplaintCategory categorize_complaint(std::string_view text) {
  static const std::pair<ComplaintCategory, std::vector<std::string_view>> table[] = {
      {ComplaintCategory::ChestPain,
       {"chest pain", "chest tightness", "substernal", "angina", "palpitations"}},
      {ComplaintCategory::AbdominalPain,
       {"abdominal pain", "abd pain", "epigastric", "nausea", "vomiting", "diarrhea"}},
      {ComplaintCategory::Psychiatric,
       {"suicidal", "anxiety", "depression", "psychosis", "agitation", "si", "overdose"}},
      {ComplaintCategory::Trauma,
       {"fall", "mvc", "laceration", "fracture", "assault", "injury"}},
      {ComplaintCategory::Respiratory,
       {"shortness of breath", "sob", "dyspnea", "cough", "wheezing", "asthma"}},
      {ComplaintCategory::Neurological,
       {"headache", "dizziness", "syncope", "seizure", "weakness", "numbness", "stroke"}},
      {ComplaintCategory::PainOther,
       {"back pain", "flank pain", "extremity pain", "joint pain", "neck pain"}},
      {ComplaintCategory::GeneralMedical,
       {"fever", "weakness", "fatigue", "malaise", "altered mental status"}},
  };
  std::string hay = lower(text);
  for (const auto& [category, keywords] : table)
    for (const auto& kw : keywords)
      if (contains_keyword(hay, kw)) return category;
  return ComplaintCategory::GeneralMedical;
}

bool is_obstetric_complaint(std::string_view text) {
  std::string hay = lower(text);
  if (hay.find("pregnan") != std::string::npos) return true;
  if (hay.find("contraction") != std::string::npos) return true;
  if (hay.find("vaginal bleed") != std::string::npos) return true;
  // whole word only: "labored breathing" is respiratory, not obstetric
  return contains_word(hay, "labor");
}

namespace {

std::optional<double> parse_double(const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<long> parse_long(const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  long v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size()) return std::nullopt;
  return v;
}

Disposition parse_disposition(const std::string& raw) {
  std::string s = upper(trim(raw));
  if (s == "ADMITTED") return Disposition::Admitted;
  if (s == "HOME") return Disposition::Home;
  if (s == "EXPIRED") return Disposition::Expired;
  if (s == "TRANSFER") return Disposition::Transfer;
  if (s == "LEFT WITHOUT BEING SEEN") return Disposition::Lwbs;
  if (s == "LEFT AGAINST MEDICAL ADVICE" || s == "AGAINST MEDICAL ADVICE")
    return Disposition::Ama;
  if (s == "ELOPED") return Disposition::Eloped;
  return Disposition::Other;
}

}  // namespace

IngestResult ingest_tables(const std::filesystem::path& edstays_path,
                           const std::filesystem::path& triage_path,
                           const std::filesystem::path& patients_path,
                           const std::filesystem::path& medrecon_path,
                           const RaceRules& race_rules) {
  for (const auto& p : {edstays_path, triage_path, patients_path, medrecon_path})
    if (!std::filesystem::exists(p))
      throw std::runtime_error("ingest: missing input file " + p.string());

  CsvTable edstays = read_csv(edstays_path);
  CsvTable triage = read_csv(triage_path);
  CsvTable patients = read_csv(patients_path);
  CsvTable medrecon = read_csv(medrecon_path);

  IngestResult out;
  auto& counts = out.counts;
  if (edstays.rows.empty()) return out;

  struct TriageRow {
    size_t row;
  };
  std::unordered_map<long, size_t> triage_by_stay;
  for (size_t i = 0; i < triage.rows.size(); ++i)
    if (auto id = parse_long(triage.cell(i, triage.col("stay_id"))))
      triage_by_stay.emplace(*id, i);

  std::unordered_map<long, int> age_by_subject;
  for (size_t i = 0; i < patients.rows.size(); ++i) {
    auto id = parse_long(patients.cell(i, patients.col("subject_id")));
    auto age = parse_long(patients.cell(i, patients.col("anchor_age")));
    if (id && age) age_by_subject.emplace(*id, static_cast<int>(*age));
  }

  std::unordered_map<long, std::vector<std::string>> meds_by_stay;
  for (size_t i = 0; i < medrecon.rows.size(); ++i) {
    auto id = parse_long(medrecon.cell(i, medrecon.col("stay_id")));
    std::string name = trim(medrecon.cell(i, medrecon.col("name")));
    if (id && !name.empty()) meds_by_stay[*id].push_back(std::move(name));
  }

  size_t c_subject = edstays.col("subject_id"), c_stay = edstays.col("stay_id");
  size_t c_gender = edstays.col("gender"), c_race = edstays.col("race");
  size_t c_dispo = edstays.col("disposition");
  size_t t_temp = triage.col("temperature"), t_hr = triage.col("heartrate");
  size_t t_rr = triage.col("resprate"), t_spo2 = triage.col("o2sat");
  size_t t_sbp = triage.col("sbp"), t_dbp = triage.col("dbp");
  size_t t_pain = triage.col("pain"), t_acuity = triage.col("acuity");
  size_t t_cc = triage.col("chiefcomplaint");

  for (size_t i = 0; i < edstays.rows.size(); ++i) {
    ++counts.rows_edstays;
    auto subject = parse_long(edstays.cell(i, c_subject));
    auto stay = parse_long(edstays.cell(i, c_stay));
    std::string g = trim(edstays.cell(i, c_gender));
    if (!subject || !stay || (g != "F" && g != "M")) {
      ++counts.malformed;
      continue;
    }
    auto trow = triage_by_stay.find(*stay);
    if (trow == triage_by_stay.end()) {
      ++counts.missing_triage;
      continue;
    }
    auto arow = age_by_subject.find(*subject);
    if (arow == age_by_subject.end()) {
      ++counts.missing_patient;
      continue;
    }
    size_t t = trow->second;

    auto esi = parse_long(triage.cell(t, t_acuity));
    if (!esi) {
      ++counts.missing_esi;
      continue;
    }
    if (*esi < 1 || *esi > 5) {
      ++counts.malformed;
      continue;
    }
    std::string cc = trim(triage.cell(t, t_cc));
    if (cc.empty()) {
      ++counts.missing_complaint;
      continue;
    }
    auto hr = parse_double(triage.cell(t, t_hr));
    if (!hr) {
      ++counts.missing_heart_rate;
      continue;
    }
    auto sbp = parse_double(triage.cell(t, t_sbp));
    auto dbp = parse_double(triage.cell(t, t_dbp));
    if (!sbp || !dbp) {
      ++counts.missing_blood_pressure;
      continue;
    }

    Disposition dispo = parse_disposition(edstays.cell(i, c_dispo));
    if (dispo == Disposition::Lwbs) {
      ++counts.excluded_lwbs;
      continue;
    }
    int age = std::min(arow->second, 91);
    if (age < 18) {
      ++counts.excluded_under_18;
      continue;
    }
    if (is_obstetric_complaint(cc)) {
      ++counts.excluded_obstetric;
      continue;
    }

    CohortRow row;
    row.subject_id = *subject;
    row.stay_id = *stay;
    row.gender = g == "F" ? Gender::F : Gender::M;
    row.age = age;
    row.race_raw = trim(edstays.cell(i, c_race));
    row.race = standardize_race(row.race_raw, race_rules);
    row.disposition = dispo;
    row.chief_complaint = cc;
    row.esi = static_cast<int>(*esi);
    row.temperature = parse_double(triage.cell(t, t_temp)).value_or(98.6);
    row.heart_rate = *hr;
    row.resp_rate = parse_double(triage.cell(t, t_rr)).value_or(16);
    row.spo2 = parse_double(triage.cell(t, t_spo2)).value_or(98);
    row.sbp = *sbp;
    row.dbp = *dbp;
    if (auto pain = parse_long(triage.cell(t, t_pain)); pain && *pain >= 0 && *pain <= 10)
      row.pain = static_cast<int>(*pain);
    if (auto meds = meds_by_stay.find(*stay); meds != meds_by_stay.end())
      row.medications = meds->second;
    row.category = categorize_complaint(cc);
    out.rows.push_back(std::move(row));
    ++counts.kept;
  }
  return out;
}

std::string ingest_manifest_json(const IngestCounts& c) {
  nlohmann::json j{
      {"rows_edstays", c.rows_edstays},
      {"malformed", c.malformed},
      {"missing_triage", c.missing_triage},
      {"missing_patient", c.missing_patient},
      {"missing_esi", c.missing_esi},
      {"missing_complaint", c.missing_complaint},
      {"missing_heart_rate", c.missing_heart_rate},
      {"missing_blood_pressure", c.missing_blood_pressure},
      {"excluded_lwbs", c.excluded_lwbs},
      {"excluded_under_18", c.excluded_under_18},
      {"excluded_obstetric", c.excluded_obstetric},
      {"kept", c.kept},
  };
  return j.dump(2);
}

std::string sample_manifest_json(const SampleManifest& m) {
  nlohmann::json j{
      {"per_stratum_target", m.per_stratum_target},
      {"seed", m.seed},
      {"stratum_counts", m.stratum_counts},
      {"empty_strata", m.empty_strata},
      {"duplicate_stay_ids", m.duplicate_stay_ids},
      {"n_sampled", m.n_sampled},
  };
  return j.dump(2);
}

SampleResult stratified_sample(const std::vector<CohortRow>& rows,
                               int per_stratum_target, uint64_t seed) {
  if (per_stratum_target < 1)
    throw std::invalid_argument("stratified_sample: per_stratum_target must be >= 1");

  SampleResult out;
  out.manifest.per_stratum_target = per_stratum_target;
  out.manifest.seed = seed;

  std::map<StratumKey, std::vector<size_t>> strata;
  for (size_t i = 0; i < rows.size(); ++i)
    strata[{rows[i].esi, rows[i].category}].push_back(i);

  std::map<long, int> stay_uses;
  for (int esi = 1; esi <= 5; ++esi) {
    for (int cat = 0; cat < 8; ++cat) {
      StratumKey key{esi, static_cast<ComplaintCategory>(cat)};
      auto it = strata.find(key);
      if (it == strata.end() || it->second.empty()) {
        out.manifest.empty_strata.push_back(to_string(key));
        continue;
      }
      auto& pool = it->second;
      // Per-stratum stream derived from (seed, stratum), so the draw for one
      // stratum never depends on any other stratum's size.
      Rng rng(mix64(seed, static_cast<uint64_t>(esi * 8 + cat)));
      size_t take = std::min(pool.size(), static_cast<size_t>(per_stratum_target));
      for (size_t j = 0; j < take; ++j) {
        size_t k = j + rng.uniform_int(pool.size() - j);
        std::swap(pool[j], pool[k]);
        out.rows.push_back(rows[pool[j]]);
        ++stay_uses[rows[pool[j]].stay_id];
      }
      out.manifest.stratum_counts[to_string(key)] = static_cast<long>(take);
    }
  }
  out.manifest.n_sampled = static_cast<long>(out.rows.size());
  for (const auto& [stay, uses] : stay_uses)
    if (uses > 1) out.manifest.duplicate_stay_ids.push_back(stay);
  return out;
}

}  // namespace esiaudit
