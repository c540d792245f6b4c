#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esiaudit/types.hpp"

namespace esiaudit {

// One counterfactual pair after joining both sides' evaluations.
// esi_f / esi_m are the predictions for the female- and male-rendered
// variants; truth_esi is the human-assigned level from the source visit.
struct PairOutcome {
  std::string pair_id;
  int esi_f = 0;
  int esi_m = 0;
  int truth_esi = 0;
  ComplaintCategory category = ComplaintCategory::GeneralMedical;
  Race race = Race::Unknown;
  AgeBand age_band = AgeBand::From18to44;
  bool admitted = false;
  Gender original_gender = Gender::F;
};

// One evaluated vignette, used for the group-level metrics (DPD, equalized
// odds, calibration, undertriage) that are computed per rendered gender
// rather than per pair.
struct VignetteObs {
  int pred = 0;
  int truth = 0;
  Gender gender = Gender::F;
  bool admitted = false;
  bool original = false;  // true for the pre-swap variant
};

struct FmRatio {
  enum class Kind { Value, Infinite, Undefined };
  Kind kind = Kind::Undefined;
  double value = 0;  // f/m when Kind::Value, +inf when Kind::Infinite
  long f_ut = 0;
  long m_ut = 0;
};

struct DirectionalCounts {
  long f_ut = 0;
  long m_ut = 0;
};

struct Accuracy {
  double exact_pct = 0;
  double within1_pct = 0;
  double kappa_w = 0;
  long n = 0;           // parsed predictions
  long n_failures = 0;  // unparsed, kept in the exact/within-1 denominators
};

struct CalibrationCell {
  long n_f = 0;
  long n_m = 0;
  double admit_f = 0;
  double admit_m = 0;
  bool qualifying = false;  // n_f and n_m both >= min_n
};

struct CalibrationResult {
  std::array<CalibrationCell, kEsiLevels> by_level;
  double max_gap = 0;
  bool defined = false;  // false when no level qualifies
  long min_n = 50;
};

double flip_rate(std::span<const PairOutcome> pairs);
DirectionalCounts directional_counts(std::span<const PairOutcome> pairs);

FmRatio fm_ratio(long f_ut, long m_ut);
// Haldane-Anscombe smoothed ratio, used inside bootstrap resamples so the
// interval stays finite when a resample draws m_ut = 0.
inline double fm_ratio_haldane(long f_ut, long m_ut) {
  return (static_cast<double>(f_ut) + 0.5) / (static_cast<double>(m_ut) + 0.5);
}

double dpd(std::span<const VignetteObs> obs);
double eo_gap(std::span<const VignetteObs> obs);
CalibrationResult calibration_gap(std::span<const VignetteObs> obs, long min_n = 50);
// UT_F - UT_M where UT_g = P(pred > truth | g). Positive = female disadvantage.
double undertriage_gap(std::span<const VignetteObs> obs);
double undertriage_rate(std::span<const VignetteObs> obs, Gender g);

Accuracy accuracy(std::span<const int> preds, std::span<const int> truths,
                  long n_failures = 0);
// Quadratic-weighted Cohen's kappa on the 5-level scale.
double quadratic_weighted_kappa(std::span<const int> preds, std::span<const int> truths);

std::optional<double> per1000_rate(long f_ut_in_cat, long n_pairs_in_cat);

enum class ThresholdKind { Dpd, EoGap, CalGap, FlipRate, UtGap };

enum class BandLabel {
  Acceptable,
  Concerning,
  BetweenBands,  // the unnamed DPD region between concerning and unacceptable
  Unacceptable,
  Systematic,
  BeyondBands,  // value above every band the threshold table defines
};

struct Band {
  BandLabel label = BandLabel::Acceptable;
  double lo = 0;
  double hi = 0;  // +inf for open-ended bands
};

std::string_view to_string(BandLabel label);
std::string band_range(const Band& band);
Band threshold_classify(ThresholdKind kind, double value);

enum class StratifyKey { Category, Race, AgeBand, TruthEsi };

struct StratumReport {
  long n = 0;
  long flips = 0;
  double flip_rate = 0;
  long f_ut = 0;
  long m_ut = 0;
  FmRatio fm;
  bool low_n = false;  // n < 50
  std::optional<double> per1000;
};

std::map<std::string, StratumReport> stratify(std::span<const PairOutcome> pairs,
                                              StratifyKey key,
                                              long low_n_threshold = 50);

// Serializable snapshot of everything computed for one endpoint x strategy
// cell. Group metrics that hit an undefined condition (e.g. an empty
// conditioning cell) are carried as nullopt together with the reason.
struct MetricReport {
  long n_pairs = 0;
  long n_pairs_excluded = 0;
  bool includes_duplicates = false;
  long n_vignettes = 0;
  long n_parse_failures = 0;

  Accuracy acc;

  double flip = 0;
  long f_ut = 0;
  long m_ut = 0;
  FmRatio fm;

  std::optional<double> dpd_all, eo_all, ut_all;
  std::optional<double> dpd_originals, eo_originals, ut_originals;
  CalibrationResult calibration;

  std::map<std::string, StratumReport> by_category, by_race, by_age_band, by_truth_esi;

  std::string flip_band, dpd_band, eo_band, cal_band, ut_band;
};

MetricReport compile_metric_report(std::span<const PairOutcome> pairs,
                                   std::span<const VignetteObs> obs,
                                   long n_parse_failures = 0,
                                   long n_pairs_excluded = 0,
                                   bool includes_duplicates = false);

// CSV with the headline layout: model, strategy, exact %, within-1 %,
// kappa_w, flip %, F/M, DPD. One row per report, header written once.
std::string metric_csv_header();
std::string metric_csv_row(const std::string& model, const std::string& strategy,
                           const MetricReport& r);

}  // namespace esiaudit
