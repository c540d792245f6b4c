#include "esiaudit/cohort.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "esiaudit/csv.hpp"
#include "esiaudit/rng.hpp"

namespace esiaudit {

namespace {

// Complaint templates per category. Each line contains a keyword that routes
// it to its own category and none that would route it to a higher-priority
// one. "{she}" and "{her}" expand by patient gender.
const std::vector<std::string> kChestPain = {
    "Chest pain radiating to left arm",
    "Substernal pressure with diaphoresis",
    "Palpitations and lightheadedness",
    "Chest tightness on exertion, took {her} home aspirin without relief",
};
const std::vector<std::string> kAbdominalPain = {
    "Abd pain, pt states {she} has had vomiting since yesterday",
    "Epigastric pain after meals",
    "Nausea and diarrhea x3 days",
    "RLQ abdominal pain, worse with movement",
};
const std::vector<std::string> kPsychiatric = {
    "SI with plan",
    "Anxiety, feels unable to calm down",
    "Depression, worsening over the past month",
    "Agitation, brought in by family",
    "Overdose, unknown pills found at scene",
};
const std::vector<std::string> kTrauma = {
    "Fall from standing, hit head",
    "MVC, restrained driver",
    "Laceration to left hand from kitchen knife",
    "Ankle injury while playing basketball",
    "Assault to face, pt states {she} was struck with a bottle",
};
const std::vector<std::string> kRespiratory = {
    "Labored breathing, SOB",
    "Shortness of breath, worse when lying flat",
    "Cough with green sputum, pt states {she} has asthma",
    "Wheezing, home nebulizer not helping",
};
const std::vector<std::string> kNeurological = {
    "Headache, pt states worst of {her} life",
    "Dizziness, room spinning since this morning",
    "Syncope at church, witnessed",
    "Seizure, first time, lasted two minutes",
    "Left arm numbness and facial droop",
};
const std::vector<std::string> kPainOther = {
    "Back pain after lifting boxes at work",
    "Flank pain radiating to groin",
    "Neck pain, stiff since waking",
    "Joint pain in both knees, worse today",
};
const std::vector<std::string> kGeneralMedical = {
    "Fever and chills x2 days",
    "Fatigue, poor appetite, pt states {she} feels run down",
    "Generalized malaise",
    "Altered mental status, per family not acting right",
    "Medication refill, out of insulin",
};

const std::vector<std::string> kObstetric = {
    "Pregnant, abdominal cramping",
    "Contractions every five minutes",
    "Vaginal bleeding, first trimester",
    "In labor, water broke an hour ago",
};

const std::vector<std::string>& templates_for(ComplaintCategory c) {
  switch (c) {
    case ComplaintCategory::ChestPain: return kChestPain;
    case ComplaintCategory::AbdominalPain: return kAbdominalPain;
    case ComplaintCategory::Psychiatric: return kPsychiatric;
    case ComplaintCategory::Trauma: return kTrauma;
    case ComplaintCategory::Respiratory: return kRespiratory;
    case ComplaintCategory::Neurological: return kNeurological;
    case ComplaintCategory::PainOther: return kPainOther;
    case ComplaintCategory::GeneralMedical: return kGeneralMedical;
  }
  return kGeneralMedical;
}

const std::vector<std::string> kRaceWhite = {
    "WHITE", "WHITE - OTHER EUROPEAN", "WHITE - RUSSIAN",
    "WHITE - EASTERN EUROPEAN", "PORTUGUESE"};
const std::vector<std::string> kRaceBlack = {
    "BLACK/AFRICAN AMERICAN", "BLACK/CAPE VERDEAN", "BLACK/CARIBBEAN ISLAND",
    "BLACK/AFRICAN"};
const std::vector<std::string> kRaceHispanic = {
    "HISPANIC/LATINO - PUERTO RICAN", "HISPANIC/LATINO - DOMINICAN",
    "HISPANIC OR LATINO", "HISPANIC/LATINO - GUATEMALAN", "SOUTH AMERICAN"};
const std::vector<std::string> kRaceAsian = {
    "ASIAN", "ASIAN - CHINESE", "ASIAN - SOUTH EAST ASIAN",
    "ASIAN - ASIAN INDIAN"};
const std::vector<std::string> kRaceOther = {
    "OTHER", "AMERICAN INDIAN/ALASKA NATIVE",
    "NATIVE HAWAIIAN OR OTHER PACIFIC ISLANDER", "MULTIPLE RACE/ETHNICITY"};
const std::vector<std::string> kRaceUnknown = {
    "UNKNOWN", "UNABLE TO OBTAIN", "PATIENT DECLINED TO ANSWER"};

const std::vector<std::string> kDrugs = {
    "lisinopril",   "metformin",  "atorvastatin", "amlodipine",
    "metoprolol",   "omeprazole", "levothyroxine", "albuterol",
    "gabapentin",   "hydrochlorothiazide", "sertraline", "ibuprofen",
    "acetaminophen", "aspirin 81mg", "insulin glargine", "warfarin",
    "furosemide",   "prednisone", "clopidogrel", "losartan"};

std::string expand_pronouns(const std::string& tpl, Gender g) {
  std::string out;
  out.reserve(tpl.size());
  for (size_t i = 0; i < tpl.size();) {
    if (tpl.compare(i, 5, "{she}") == 0) {
      out += g == Gender::F ? "she" : "he";
      i += 5;
    } else if (tpl.compare(i, 5, "{her}") == 0) {
      out += g == Gender::F ? "her" : "his";
      i += 5;
    } else {
      out += tpl[i++];
    }
  }
  return out;
}

struct VitalRange {
  int lo, hi;
};

// Vital ranges indexed by acuity - 1. More acute rows run faster, lower, and
// sicker so the simulator's error kernel has something plausible to chew on.
const VitalRange kHr[5] = {{95, 150}, {85, 130}, {70, 110}, {62, 100}, {58, 95}};
const VitalRange kSpo2[5] = {{82, 95}, {88, 97}, {92, 99}, {94, 100}, {95, 100}};
const VitalRange kRr[5] = {{20, 34}, {16, 28}, {14, 22}, {12, 20}, {12, 18}};
const VitalRange kSbp[5] = {{80, 200}, {95, 185}, {100, 170}, {105, 160}, {105, 150}};

int draw_range(Rng& rng, VitalRange r) {
  return r.lo + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(r.hi - r.lo + 1)));
}

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("synth: cannot write " + p.string());
  return out;
}

}  // namespace

void synth_cohort(const std::filesystem::path& out_dir, long n, uint64_t seed) {
  if (n < 0) throw std::invalid_argument("synth: n must be >= 0");
  std::filesystem::create_directories(out_dir);

  auto edstays = open_out(out_dir / "edstays.csv");
  auto triage = open_out(out_dir / "triage.csv");
  auto patients = open_out(out_dir / "patients.csv");
  auto medrecon = open_out(out_dir / "medrecon.csv");

  write_csv_row(edstays, {"subject_id", "hadm_id", "stay_id", "intime", "outtime",
                          "gender", "race", "arrival_transport", "disposition"});
  write_csv_row(triage, {"subject_id", "stay_id", "temperature", "heartrate",
                         "resprate", "o2sat", "sbp", "dbp", "pain", "acuity",
                         "chiefcomplaint"});
  write_csv_row(patients, {"subject_id", "gender", "anchor_age", "anchor_year"});
  write_csv_row(medrecon, {"subject_id", "stay_id", "name"});

  const std::vector<double> kEsiW = {0.059, 0.335, 0.536, 0.068, 0.002};
  const std::vector<double> kRaceW = {0.586, 0.219, 0.078, 0.044, 0.052, 0.022};
  const std::vector<double> kCatW = {0.080, 0.137, 0.068, 0.108,
                                     0.062, 0.090, 0.049, 0.406};
  const double kAdmitByEsi[5] = {0.85, 0.55, 0.30, 0.08, 0.04};

  for (long i = 0; i < n; ++i) {
    Rng rng(mix64(seed, static_cast<uint64_t>(i)));

    long subject = 10000000 + i;
    long stay = 30000000 + i;
    Gender gender = rng.uniform() < 0.538 ? Gender::F : Gender::M;
    int esi = 1 + static_cast<int>(rng.categorical(kEsiW));

    size_t race_idx = rng.categorical(kRaceW);
    const std::vector<std::string>* race_pool = nullptr;
    switch (race_idx) {
      case 0: race_pool = &kRaceWhite; break;
      case 1: race_pool = &kRaceBlack; break;
      case 2: race_pool = &kRaceHispanic; break;
      case 3: race_pool = &kRaceAsian; break;
      case 4: race_pool = &kRaceOther; break;
      default: race_pool = &kRaceUnknown; break;
    }
    std::string race_raw = rng.pick(*race_pool);

    auto category = static_cast<ComplaintCategory>(rng.categorical(kCatW));

    // Occasional rows exercise every exclusion and fallback path downstream.
    bool malformed_gender = rng.uniform() < 0.001;
    bool drop_triage = rng.uniform() < 0.001;
    bool drop_patient = rng.uniform() < 0.001;
    bool blank_acuity = rng.uniform() < 0.002;
    bool blank_complaint = rng.uniform() < 0.002;
    bool blank_hr = rng.uniform() < 0.002;
    bool blank_bp = rng.uniform() < 0.002;
    bool minor = rng.uniform() < 0.010;
    bool lwbs = rng.uniform() < 0.015;
    bool obstetric = gender == Gender::F && rng.uniform() < 0.020;
    bool sex_linked = rng.uniform() < 0.005;

    int age;
    if (minor) {
      age = 5 + static_cast<int>(rng.uniform_int(13));
    } else if (rng.uniform() < 0.0005) {
      // De-identification artifact: very old patients carry a dummy age.
      age = 92 + static_cast<int>(rng.uniform_int(14));
    } else {
      double band = rng.uniform();
      if (band < 0.44)
        age = 18 + static_cast<int>(rng.uniform_int(27));
      else if (band < 0.75)
        age = 45 + static_cast<int>(rng.uniform_int(20));
      else
        age = 65 + static_cast<int>(rng.uniform_int(27));
    }

    std::string complaint;
    if (obstetric)
      complaint = rng.pick(kObstetric);
    else if (sex_linked)
      complaint = gender == Gender::M ? "Testicular pain and swelling"
                                      : "Ovarian cyst follow-up, pelvic pain";
    else
      complaint = expand_pronouns(rng.pick(templates_for(category)), gender);

    int hr = draw_range(rng, kHr[esi - 1]);
    int spo2 = draw_range(rng, kSpo2[esi - 1]);
    int rr = draw_range(rng, kRr[esi - 1]);
    int sbp = draw_range(rng, kSbp[esi - 1]);
    int dbp = sbp - 30 - static_cast<int>(rng.uniform_int(31));
    if (dbp < 40) dbp = 40;
    if (dbp > sbp - 10) dbp = sbp - 10;
    if (category == ComplaintCategory::Respiratory) {
      spo2 -= 3;
      if (spo2 < 70) spo2 = 70;
      rr += 4;
    }
    double temp = 97.0 + rng.uniform() * 2.5;
    if (esi <= 2 && rng.uniform() < 0.25) temp = 100.4 + rng.uniform() * 3.6;

    std::string pain;
    double pain_draw = rng.uniform();
    if (pain_draw < 0.85)
      pain = std::to_string(rng.uniform_int(11));
    else if (pain_draw < 0.95)
      pain = "";
    else
      pain = "UTA";

    std::string dispo;
    if (lwbs) {
      dispo = "LEFT WITHOUT BEING SEEN";
    } else if (rng.uniform() < kAdmitByEsi[esi - 1]) {
      double d = rng.uniform();
      dispo = d < 0.93 ? "ADMITTED" : d < 0.98 ? "TRANSFER" : "EXPIRED";
    } else {
      double d = rng.uniform();
      dispo = d < 0.96   ? "HOME"
              : d < 0.98 ? "LEFT AGAINST MEDICAL ADVICE"
              : d < 0.99 ? "ELOPED"
                         : "OTHER";
    }

    char intime[32], outtime[32];
    int month = static_cast<int>(i / (28 * 24)) % 12 + 1;
    int day = static_cast<int>(i / 24) % 28 + 1;
    int hour = static_cast<int>(i) % 24;
    std::snprintf(intime, sizeof intime, "2125-%02d-%02d %02d:%02d:00", month, day,
                  hour, static_cast<int>(rng.uniform_int(60)));
    std::snprintf(outtime, sizeof outtime, "2125-%02d-%02d %02d:%02d:00", month, day,
                  (hour + 4) % 24, static_cast<int>(rng.uniform_int(60)));

    std::string hadm = dispo == "ADMITTED" || dispo == "TRANSFER" || dispo == "EXPIRED"
                           ? std::to_string(20000000 + i)
                           : "";
    double transport = rng.uniform();
    std::string arrival = transport < 0.55 ? "WALK IN"
                          : transport < 0.95 ? "AMBULANCE"
                                             : "UNKNOWN";

    write_csv_row(edstays,
                  {std::to_string(subject), hadm, std::to_string(stay), intime,
                   outtime, malformed_gender ? "U" : (gender == Gender::F ? "F" : "M"),
                   race_raw, arrival, dispo});

    if (!drop_triage)
      write_csv_row(triage,
                    {std::to_string(subject), std::to_string(stay), fmt1(temp),
                     blank_hr ? "" : std::to_string(hr), std::to_string(rr),
                     std::to_string(spo2), blank_bp ? "" : std::to_string(sbp),
                     std::to_string(dbp), pain, blank_acuity ? "" : std::to_string(esi),
                     blank_complaint ? "" : complaint});

    if (!drop_patient)
      write_csv_row(patients, {std::to_string(subject),
                               gender == Gender::F ? "F" : "M", std::to_string(age),
                               "2125"});

    size_t n_meds = rng.uniform_int(6);
    std::vector<size_t> picked;
    for (size_t m = 0; m < n_meds; ++m) {
      size_t drug = rng.uniform_int(kDrugs.size());
      bool dup = false;
      for (size_t p : picked) dup |= p == drug;
      if (dup) continue;
      picked.push_back(drug);
      write_csv_row(medrecon,
                    {std::to_string(subject), std::to_string(stay), kDrugs[drug]});
    }
  }
}

}  // namespace esiaudit
