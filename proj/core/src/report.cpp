#include "esiaudit/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace esiaudit {

namespace {

using nlohmann::json;

json opt_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json fm_to_json(const FmRatio& fm) {
  const char* kind = fm.kind == FmRatio::Kind::Value      ? "value"
                     : fm.kind == FmRatio::Kind::Infinite ? "infinite"
                                                          : "undefined";
  return json{{"kind", kind},
              {"value", fm.kind == FmRatio::Kind::Value ? json(fm.value) : json(nullptr)},
              {"f_ut", fm.f_ut},
              {"m_ut", fm.m_ut}};
}

FmRatio fm_from_json(const json& j) {
  FmRatio fm;
  std::string kind = j.at("kind").get<std::string>();
  fm.f_ut = j.at("f_ut").get<long>();
  fm.m_ut = j.at("m_ut").get<long>();
  if (kind == "value") {
    fm.kind = FmRatio::Kind::Value;
    fm.value = j.at("value").get<double>();
  } else if (kind == "infinite") {
    fm.kind = FmRatio::Kind::Infinite;
    fm.value = std::numeric_limits<double>::infinity();
  } else {
    fm.kind = FmRatio::Kind::Undefined;
  }
  return fm;
}

json accuracy_to_json(const Accuracy& a) {
  return json{{"exact_pct", a.exact_pct},
              {"within1_pct", a.within1_pct},
              {"kappa_w", a.kappa_w},
              {"n", a.n},
              {"n_failures", a.n_failures}};
}

Accuracy accuracy_from_json(const json& j) {
  Accuracy a;
  a.exact_pct = j.at("exact_pct").get<double>();
  a.within1_pct = j.at("within1_pct").get<double>();
  a.kappa_w = j.at("kappa_w").get<double>();
  a.n = j.at("n").get<long>();
  a.n_failures = j.at("n_failures").get<long>();
  return a;
}

json strata_to_json(const std::map<std::string, StratumReport>& strata) {
  json out = json::object();
  for (const auto& [name, s] : strata) {
    out[name] = json{{"n", s.n},
                     {"flips", s.flips},
                     {"flip_rate", s.flip_rate},
                     {"f_ut", s.f_ut},
                     {"m_ut", s.m_ut},
                     {"fm", fm_to_json(s.fm)},
                     {"low_n", s.low_n},
                     {"per1000", opt_to_json(s.per1000)}};
  }
  return out;
}

std::map<std::string, StratumReport> strata_from_json(const json& j) {
  std::map<std::string, StratumReport> out;
  for (const auto& [name, s] : j.items()) {
    StratumReport r;
    r.n = s.at("n").get<long>();
    r.flips = s.at("flips").get<long>();
    r.flip_rate = s.at("flip_rate").get<double>();
    r.f_ut = s.at("f_ut").get<long>();
    r.m_ut = s.at("m_ut").get<long>();
    r.fm = fm_from_json(s.at("fm"));
    r.low_n = s.at("low_n").get<bool>();
    r.per1000 = opt_from_json(s.at("per1000"));
    out[name] = r;
  }
  return out;
}

json calibration_to_json(const CalibrationResult& c) {
  json levels = json::array();
  for (int level = 1; level <= kEsiLevels; ++level) {
    const CalibrationCell& cell = c.by_level[level - 1];
    levels.push_back(json{{"level", level},
                          {"n_f", cell.n_f},
                          {"n_m", cell.n_m},
                          {"admit_f", cell.admit_f},
                          {"admit_m", cell.admit_m},
                          {"qualifying", cell.qualifying}});
  }
  return json{{"defined", c.defined},
              {"max_gap", c.max_gap},
              {"min_n", c.min_n},
              {"levels", levels}};
}

CalibrationResult calibration_from_json(const json& j) {
  CalibrationResult c;
  c.defined = j.at("defined").get<bool>();
  c.max_gap = j.at("max_gap").get<double>();
  c.min_n = j.at("min_n").get<long>();
  for (const auto& level : j.at("levels")) {
    int idx = level.at("level").get<int>() - 1;
    CalibrationCell& cell = c.by_level[idx];
    cell.n_f = level.at("n_f").get<long>();
    cell.n_m = level.at("n_m").get<long>();
    cell.admit_f = level.at("admit_f").get<double>();
    cell.admit_m = level.at("admit_m").get<double>();
    cell.qualifying = level.at("qualifying").get<bool>();
  }
  return c;
}

json ci_to_json(const std::optional<stats::BootstrapResult>& ci) {
  if (!ci) return nullptr;
  return json{{"lo", ci->lo},
              {"hi", ci->hi},
              {"used", ci->used},
              {"undefined_skipped", ci->undefined_skipped}};
}

json test_result_to_json(const stats::PairedTestResult& r) {
  return json{{"statistic", r.statistic},
              {"p", r.p},
              {"b", r.b},
              {"c", r.c},
              {"table", r.table},
              {"significant_at", r.significant_at}};
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fm_point_string(const json& fm) {
  std::string kind = fm.at("kind").get<std::string>();
  if (kind == "value") return fmt("%.3f", fm.at("value").get<double>());
  if (kind == "infinite")
    return "inf(" + std::to_string(fm.at("f_ut").get<long>()) + "/0)";
  return "undefined";
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

json metric_report_to_json(const MetricReport& r) {
  return json{{"n_pairs", r.n_pairs},
              {"n_pairs_excluded", r.n_pairs_excluded},
              {"includes_duplicates", r.includes_duplicates},
              {"n_vignettes", r.n_vignettes},
              {"n_parse_failures", r.n_parse_failures},
              {"accuracy", accuracy_to_json(r.acc)},
              {"flip_rate", r.flip},
              {"f_ut", r.f_ut},
              {"m_ut", r.m_ut},
              {"fm", fm_to_json(r.fm)},
              {"dpd_all", opt_to_json(r.dpd_all)},
              {"eo_all", opt_to_json(r.eo_all)},
              {"ut_all", opt_to_json(r.ut_all)},
              {"dpd_originals", opt_to_json(r.dpd_originals)},
              {"eo_originals", opt_to_json(r.eo_originals)},
              {"ut_originals", opt_to_json(r.ut_originals)},
              {"calibration", calibration_to_json(r.calibration)},
              {"by_category", strata_to_json(r.by_category)},
              {"by_race", strata_to_json(r.by_race)},
              {"by_age_band", strata_to_json(r.by_age_band)},
              {"by_truth_esi", strata_to_json(r.by_truth_esi)},
              {"bands",
               {{"flip", r.flip_band},
                {"dpd", r.dpd_band},
                {"eo", r.eo_band},
                {"calibration", r.cal_band},
                {"ut", r.ut_band}}}};
}

MetricReport metric_report_from_json(const json& j) {
  MetricReport r;
  r.n_pairs = j.at("n_pairs").get<long>();
  r.n_pairs_excluded = j.at("n_pairs_excluded").get<long>();
  r.includes_duplicates = j.at("includes_duplicates").get<bool>();
  r.n_vignettes = j.at("n_vignettes").get<long>();
  r.n_parse_failures = j.at("n_parse_failures").get<long>();
  r.acc = accuracy_from_json(j.at("accuracy"));
  r.flip = j.at("flip_rate").get<double>();
  r.f_ut = j.at("f_ut").get<long>();
  r.m_ut = j.at("m_ut").get<long>();
  r.fm = fm_from_json(j.at("fm"));
  r.dpd_all = opt_from_json(j.at("dpd_all"));
  r.eo_all = opt_from_json(j.at("eo_all"));
  r.ut_all = opt_from_json(j.at("ut_all"));
  r.dpd_originals = opt_from_json(j.at("dpd_originals"));
  r.eo_originals = opt_from_json(j.at("eo_originals"));
  r.ut_originals = opt_from_json(j.at("ut_originals"));
  r.calibration = calibration_from_json(j.at("calibration"));
  r.by_category = strata_from_json(j.at("by_category"));
  r.by_race = strata_from_json(j.at("by_race"));
  r.by_age_band = strata_from_json(j.at("by_age_band"));
  r.by_truth_esi = strata_from_json(j.at("by_truth_esi"));
  const auto& bands = j.at("bands");
  r.flip_band = bands.at("flip").get<std::string>();
  r.dpd_band = bands.at("dpd").get<std::string>();
  r.eo_band = bands.at("eo").get<std::string>();
  r.cal_band = bands.at("calibration").get<std::string>();
  r.ut_band = bands.at("ut").get<std::string>();
  return r;
}

json audit_report_to_json(const AuditReport& r) {
  json strategies = json::array();
  for (Strategy s : r.strategies) strategies.push_back(to_string(s));

  json cells = json::array();
  for (const auto& c : r.cells) {
    json ablations = json::array();
    for (const auto& a : c.ablations) {
      ablations.push_back(json{{"contrast", a.contrast},
                               {"n_pairs", a.n_pairs},
                               {"excluded", a.excluded},
                               {"unpaired", a.unpaired},
                               {"flip_rate", a.flip},
                               {"f_ut", a.f_ut},
                               {"m_ut", a.m_ut},
                               {"fm", fm_to_json(a.fm)}});
    }
    json augmented = nullptr;
    if (c.augmented) augmented = accuracy_to_json(*c.augmented);
    cells.push_back(json{{"endpoint_id", c.endpoint_id},
                         {"strategy", to_string(c.strategy)},
                         {"pairs_joined", c.pairs_joined},
                         {"pairs_excluded", c.pairs_excluded},
                         {"unpaired", c.unpaired},
                         {"metrics", metric_report_to_json(c.metrics)},
                         {"sensitivity", c.sensitivity
                                             ? metric_report_to_json(*c.sensitivity)
                                             : json(nullptr)},
                         {"dedupe_applied", c.dedupe_applied},
                         {"flip_ci", ci_to_json(c.flip_ci)},
                         {"fm_ci", ci_to_json(c.fm_ci)},
                         {"ci_note", c.ci_note},
                         {"profile", c.profile},
                         {"ablations", ablations},
                         {"augmented", augmented}});
  }

  json pairwise = json::array();
  for (const auto& t : r.pairwise) {
    pairwise.push_back(json{{"endpoint_a", t.endpoint_a},
                            {"endpoint_b", t.endpoint_b},
                            {"kind", t.kind},
                            {"defined", t.defined},
                            {"result", test_result_to_json(t.result)},
                            {"note", t.note}});
  }

  return json{{"seed", r.seed},
              {"augmentation_mode", r.augmentation_mode},
              {"dedupe_duplicates", r.dedupe_duplicates},
              {"endpoints", r.endpoint_ids},
              {"strategies", strategies},
              {"corpus",
               {{"n_vignettes", r.n_vignettes},
                {"n_pairs", r.n_corpus_pairs},
                {"n_sex_linked", r.n_sex_linked},
                {"n_duplicate_stays", r.n_duplicate_stays}}},
              {"malformed_record_lines", r.malformed_record_lines},
              {"bonferroni", {{"alpha", r.bonferroni_alpha},
                              {"n_tests", r.n_pairwise_tests}}},
              {"cells", cells},
              {"pairwise", pairwise}};
}

std::string audit_report_json(const AuditReport& r) {
  return audit_report_to_json(r).dump(2) + "\n";
}

std::string headline_csv(const json& report) {
  std::string out = metric_csv_header();
  for (const auto& cell : report.at("cells")) {
    MetricReport r = metric_report_from_json(cell.at("metrics"));
    out += metric_csv_row(cell.at("endpoint_id").get<std::string>(),
                          cell.at("strategy").get<std::string>(), r);
  }
  return out;
}

std::string calibration_csv(const json& report) {
  std::string out = "model,strategy,level,n_f,n_m,admit_f,admit_m,gap,qualifying\n";
  for (const auto& cell : report.at("cells")) {
    const auto& cal = cell.at("metrics").at("calibration");
    for (const auto& level : cal.at("levels")) {
      double af = level.at("admit_f").get<double>();
      double am = level.at("admit_m").get<double>();
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s,%s,%d,%ld,%ld,%.3f,%.3f,%.3f,%s\n",
                    cell.at("endpoint_id").get<std::string>().c_str(),
                    cell.at("strategy").get<std::string>().c_str(),
                    level.at("level").get<int>(), level.at("n_f").get<long>(),
                    level.at("n_m").get<long>(), af, am, std::fabs(af - am),
                    level.at("qualifying").get<bool>() ? "yes" : "no");
      out += buf;
    }
  }
  return out;
}

std::string intervals_csv(const json& report) {
  std::string out = "model,strategy,metric,point,lo,hi,used,skipped,profile\n";
  for (const auto& cell : report.at("cells")) {
    const std::string model = cell.at("endpoint_id").get<std::string>();
    const std::string strategy = cell.at("strategy").get<std::string>();
    const std::string profile = cell.at("profile").get<std::string>();
    auto row = [&](const char* metric, const std::string& point, const json& ci) {
      if (ci.is_null()) {
        out += model + "," + strategy + "," + metric + "," + point + ",,,,," +
               profile + "\n";
        return;
      }
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%.4f,%.4f,%d,%d,%s\n",
                    model.c_str(), strategy.c_str(), metric, point.c_str(),
                    ci.at("lo").get<double>(), ci.at("hi").get<double>(),
                    ci.at("used").get<int>(),
                    ci.at("undefined_skipped").get<int>(), profile.c_str());
      out += buf;
    };
    row("flip_rate", fmt("%.4f", cell.at("metrics").at("flip_rate").get<double>()),
        cell.at("flip_ci"));
    row("fm_ratio", fm_point_string(cell.at("metrics").at("fm")), cell.at("fm_ci"));
  }
  return out;
}

std::string pairwise_csv(const json& report) {
  std::string out =
      "endpoint_a,endpoint_b,test,statistic,p,counts,significant_at,note\n";
  for (const auto& t : report.at("pairwise")) {
    const auto& r = t.at("result");
    std::string counts;
    if (t.at("kind").get<std::string>() == "mcnemar_flip") {
      counts = "b=" + std::to_string(r.at("b").get<long>()) +
               ";c=" + std::to_string(r.at("c").get<long>());
    } else {
      std::vector<std::string> parts;
      for (const auto& v : r.at("table"))
        parts.push_back(std::to_string(v.get<long>()));
      counts = join(parts, ";");
    }
    std::string stat, p;
    if (t.at("defined").get<bool>()) {
      stat = fmt("%.4f", r.at("statistic").get<double>());
      p = fmt("%.6g", r.at("p").get<double>());
    }
    std::vector<std::string> sig;
    for (const auto& s : r.at("significant_at")) sig.push_back(s.get<std::string>());
    out += t.at("endpoint_a").get<std::string>() + "," +
           t.at("endpoint_b").get<std::string>() + "," +
           t.at("kind").get<std::string>() + "," + stat + "," + p + "," + counts +
           "," + join(sig, "|") + "," + t.at("note").get<std::string>() + "\n";
  }
  return out;
}

std::string summary_markdown(const json& report) {
  std::ostringstream md;
  const auto& corpus = report.at("corpus");
  md << "# Counterfactual triage audit\n\n";
  md << "Seed " << report.at("seed").get<uint64_t>() << ". Corpus: "
     << corpus.at("n_vignettes").get<long>() << " vignettes, "
     << corpus.at("n_pairs").get<long>() << " counterfactual pairs, "
     << corpus.at("n_sex_linked").get<long>() << " sex-linked originals kept unpaired.\n\n";
  if (report.at("malformed_record_lines").get<long>() > 0)
    md << "Skipped " << report.at("malformed_record_lines").get<long>()
       << " malformed record line(s) (torn tail from an interrupted run).\n\n";

  md << "## Headline\n\n";
  md << "| model | strategy | exact % | within-1 % | kappa_w | flip % | F/M | "
        "profile |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& cell : report.at("cells")) {
    const auto& m = cell.at("metrics");
    const auto& acc = m.at("accuracy");
    md << "| " << cell.at("endpoint_id").get<std::string>() << " | "
       << cell.at("strategy").get<std::string>() << " | "
       << fmt("%.1f", acc.at("exact_pct").get<double>()) << " | "
       << fmt("%.1f", acc.at("within1_pct").get<double>()) << " | "
       << fmt("%.3f", acc.at("kappa_w").get<double>()) << " | "
       << fmt("%.1f", 100.0 * m.at("flip_rate").get<double>()) << " | "
       << fm_point_string(m.at("fm")) << " | "
       << cell.at("profile").get<std::string>() << " |\n";
  }

  md << "\n## Intervals\n\n";
  md << "| model | strategy | flip 95% CI | F/M 95% CI |\n|---|---|---|---|\n";
  for (const auto& cell : report.at("cells")) {
    auto ci_str = [&](const json& ci) -> std::string {
      if (ci.is_null()) return cell.at("ci_note").get<std::string>();
      return "[" + fmt("%.3f", ci.at("lo").get<double>()) + ", " +
             fmt("%.3f", ci.at("hi").get<double>()) + "]";
    };
    md << "| " << cell.at("endpoint_id").get<std::string>() << " | "
       << cell.at("strategy").get<std::string>() << " | "
       << ci_str(cell.at("flip_ci")) << " | " << ci_str(cell.at("fm_ci")) << " |\n";
  }

  md << "\n## Threshold bands\n\n";
  md << "| model | strategy | flip | DPD | EO | calibration | UT gap |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (const auto& cell : report.at("cells")) {
    const auto& bands = cell.at("metrics").at("bands");
    md << "| " << cell.at("endpoint_id").get<std::string>() << " | "
       << cell.at("strategy").get<std::string>() << " | "
       << bands.at("flip").get<std::string>() << " | "
       << bands.at("dpd").get<std::string>() << " | "
       << bands.at("eo").get<std::string>() << " | "
       << bands.at("calibration").get<std::string>() << " | "
       << bands.at("ut").get<std::string>() << " |\n";
  }

  bool any_ablation = false;
  for (const auto& cell : report.at("cells"))
    any_ablation |= !cell.at("ablations").empty();
  if (any_ablation) {
    md << "\n## Ablation contrasts\n\n";
    md << "| model | strategy | contrast | pairs | flip % | f_ut | m_ut |\n";
    md << "|---|---|---|---|---|---|---|\n";
    for (const auto& cell : report.at("cells")) {
      for (const auto& a : cell.at("ablations")) {
        md << "| " << cell.at("endpoint_id").get<std::string>() << " | "
           << cell.at("strategy").get<std::string>() << " | "
           << a.at("contrast").get<std::string>() << " | "
           << a.at("n_pairs").get<long>() << " | "
           << fmt("%.1f", 100.0 * a.at("flip_rate").get<double>()) << " | "
           << a.at("f_ut").get<long>() << " | " << a.at("m_ut").get<long>()
           << " |\n";
      }
    }
  }

  if (!report.at("pairwise").empty()) {
    md << "\n## Pairwise comparisons (baseline)\n\n";
    md << "Bonferroni alpha "
       << fmt("%.6g", report.at("bonferroni").at("alpha").get<double>()) << " across "
       << report.at("bonferroni").at("n_tests").get<int>() << " tests.\n\n";
    md << "| A | B | test | statistic | p | significant |\n|---|---|---|---|---|---|\n";
    for (const auto& t : report.at("pairwise")) {
      const auto& r = t.at("result");
      std::vector<std::string> sig;
      for (const auto& s : r.at("significant_at")) sig.push_back(s.get<std::string>());
      md << "| " << t.at("endpoint_a").get<std::string>() << " | "
         << t.at("endpoint_b").get<std::string>() << " | "
         << t.at("kind").get<std::string>() << " | ";
      if (t.at("defined").get<bool>())
        md << fmt("%.4f", r.at("statistic").get<double>()) << " | "
           << fmt("%.6g", r.at("p").get<double>()) << " | " << join(sig, ", ");
      else
        md << "undefined | | " << t.at("note").get<std::string>();
      md << " |\n";
    }
  }

  md << "\n## Notes\n\n";
  if (report.at("augmentation_mode").get<bool>()) {
    md << "- Augmented accuracy aggregates each pair to the more urgent of its "
          "two predictions when they disagree. Two samples have no mode; this "
          "deterministic rule is an interpretation, not a neutral choice.\n";
  }
  bool any_sensitivity = false;
  for (const auto& cell : report.at("cells")) {
    if (cell.at("sensitivity").is_null()) continue;
    any_sensitivity = true;
    const auto& lead = cell.at("metrics");
    const auto& alt = cell.at("sensitivity");
    md << "- " << cell.at("endpoint_id").get<std::string>() << "/"
       << cell.at("strategy").get<std::string>()
       << ": duplicate stays present; headline "
       << (cell.at("dedupe_applied").get<bool>() ? "deduplicates" : "keeps")
       << " them (flip " << fmt("%.4f", lead.at("flip_rate").get<double>())
       << " vs " << fmt("%.4f", alt.at("flip_rate").get<double>())
       << " under the other handling).\n";
  }
  if (!any_sensitivity)
    md << "- No duplicate stays in the joined pairs; the dedupe sensitivity "
          "check has nothing to vary.\n";
  md << "- Group metrics (DPD, EO, UT gap) cover all evaluated variants; the "
        "originals-only analogues sit next to them in the JSON report.\n";
  return md.str();
}

void export_prompts(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (Strategy s : kAllStrategies) {
    std::ofstream out(dir / (to_string(s) + ".txt"));
    out << system_prompt(s) << "\n";
  }
}

void write_report_files(const json& report, const std::filesystem::path& out_dir,
                        const std::string& format) {
  std::filesystem::create_directories(out_dir);
  auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(out_dir / name);
    if (!out) throw std::runtime_error(std::string("cannot write ") + name);
    out << content;
  };
  if (format == "json") {
    write("audit.json", report.dump(2) + "\n");
  } else if (format == "csv") {
    write("headline.csv", headline_csv(report));
    write("calibration.csv", calibration_csv(report));
    write("intervals.csv", intervals_csv(report));
    write("pairwise.csv", pairwise_csv(report));
  } else if (format == "md") {
    write("summary.md", summary_markdown(report));
  } else {
    throw std::invalid_argument("unknown report format: " + format);
  }
  export_prompts(out_dir / "prompts");
}

}  // namespace esiaudit
