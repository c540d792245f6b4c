#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "esiaudit/records.hpp"
#include "esiaudit/report.hpp"
#include "esiaudit/runner.hpp"
#include "esiaudit/vignette.hpp"
#include "json.hpp"
#include "testutil.hpp"

using namespace esiaudit;

namespace {

CohortRow cohort_row(long stay, Gender g, int esi, const std::string& cc,
                     ComplaintCategory cat,
                     Disposition dispo = Disposition::Home) {
  CohortRow r;
  r.subject_id = stay * 10;
  r.stay_id = stay;
  r.gender = g;
  r.age = 40;
  r.race = Race::White;
  r.chief_complaint = cc;
  r.temperature = 98.6;
  r.heart_rate = 80;
  r.resp_rate = 16;
  r.spo2 = 98;
  r.sbp = 120;
  r.dbp = 80;
  r.pain = 4;
  r.medications = {"aspirin"};
  r.esi = esi;
  r.disposition = dispo;
  r.category = cat;
  return r;
}

// `paired` swappable complaints plus `sex_linked` rows that stay unpaired.
std::vector<CohortRow> mixed_rows(int paired, int sex_linked) {
  std::vector<CohortRow> rows;
  for (int i = 0; i < paired; ++i)
    rows.push_back(cohort_row(1000 + i, i % 2 ? Gender::M : Gender::F,
                              2 + i % 3, "chest pain",
                              ComplaintCategory::ChestPain));
  for (int i = 0; i < sex_linked; ++i)
    rows.push_back(cohort_row(2000 + i, Gender::M, 3, "testicular pain",
                              ComplaintCategory::GeneralMedical));
  return rows;
}

ModelEndpoint sim_endpoint(const std::string& id, SimProfile profile = {}) {
  ModelEndpoint e;
  e.id = id;
  e.kind = EndpointKind::Simulator;
  e.sim = profile;
  return e;
}

RunConfig make_config(const std::filesystem::path& out_dir,
                      std::vector<ModelEndpoint> endpoints,
                      std::vector<Strategy> strategies) {
  RunConfig c;
  c.endpoints = std::move(endpoints);
  c.strategies = std::move(strategies);
  c.output_dir = out_dir;
  c.corpus_path = out_dir / "corpus.jsonl";
  return c;
}

const Vignette& vignette_named(const std::vector<Vignette>& corpus,
                               const std::string& id) {
  for (const auto& v : corpus)
    if (v.vignette_id == id) return v;
  throw std::runtime_error("missing vignette " + id);
}

EvalRecord ok_record(const std::string& endpoint, Strategy s,
                     const Vignette& v, int esi) {
  EvalRecord r;
  r.run_id = "run-test";
  r.endpoint_id = endpoint;
  r.strategy = s;
  r.vignette_id = v.vignette_id;
  r.pair_id = v.pair_id;
  r.variant = v.variant;
  r.raw_response = "ESI Level: " + std::to_string(esi);
  r.parsed_esi = esi;
  r.parse_rule = ParseRule::AnchorLine;
  r.status = EvalStatus::Ok;
  r.attempts = 1;
  r.timestamp = "2026-01-01T00:00:00Z";
  return r;
}

// Female-original pair: (pair_id)-o carries the F side, (pair_id)-c the M side.
void add_pair(std::vector<EvalRecord>& records,
              const std::vector<Vignette>& corpus, const std::string& endpoint,
              Strategy s, const std::string& pair_id, int esi_f, int esi_m) {
  records.push_back(
      ok_record(endpoint, s, vignette_named(corpus, pair_id + "-o"), esi_f));
  records.push_back(
      ok_record(endpoint, s, vignette_named(corpus, pair_id + "-c"), esi_m));
}

}  // namespace

TEST_CASE("strategies route the expected corpus variants") {
  const std::vector<Variant> all = {
      Variant::Original,        Variant::Counterfactual, Variant::GenderOnly,
      Variant::NameOnly,        Variant::AgePreservingBlind, Variant::Blind};

  for (Variant v : all) {
    CHECK(strategy_accepts(Strategy::Baseline, v) == (v != Variant::Blind));
    bool pair_only = v == Variant::Original || v == Variant::Counterfactual;
    CHECK(strategy_accepts(Strategy::CoT, v) == pair_only);
    CHECK(strategy_accepts(Strategy::Debiased, v) == pair_only);
    CHECK(strategy_accepts(Strategy::Blind, v) == (v == Variant::Blind));
  }
}

TEST_CASE("plan enumerates endpoint x strategy x accepted vignette") {
  const NamePool& pools = NamePool::builtin();
  auto rows = mixed_rows(5, 2);
  auto flat = build_corpus(rows, pools, 7, false);
  REQUIRE(flat.vignettes.size() == 5 * 4 + 2 * 2);

  testutil::TempDir tmp;
  const std::vector<Strategy> all_strategies = {
      Strategy::Baseline, Strategy::CoT, Strategy::Debiased, Strategy::Blind};

  SUBCASE("without ablations every strategy sees the same item count") {
    auto config = make_config(tmp.path(), {sim_endpoint("m1")}, all_strategies);
    auto items = plan(config, flat.vignettes, {});
    CHECK(items.size() == 48);
    std::map<Strategy, long> per_strategy;
    for (const auto& it : items) ++per_strategy[it.strategy];
    for (Strategy s : all_strategies) CHECK(per_strategy[s] == 12);
  }

  SUBCASE("ablation variants route to the baseline strategy only") {
    auto full = build_corpus(rows, pools, 7, true);
    REQUIRE(full.vignettes.size() == 5 * 7 + 2 * 2);
    auto config = make_config(tmp.path(), {sim_endpoint("m1")}, all_strategies);
    auto items = plan(config, full.vignettes, {});
    std::map<Strategy, long> per_strategy;
    for (const auto& it : items) ++per_strategy[it.strategy];
    CHECK(per_strategy[Strategy::Baseline] == 27);
    CHECK(per_strategy[Strategy::CoT] == 12);
    CHECK(per_strategy[Strategy::Debiased] == 12);
    CHECK(per_strategy[Strategy::Blind] == 12);
    CHECK(items.size() == 63);
  }

  SUBCASE("a second endpoint doubles the plan") {
    auto config = make_config(tmp.path(), {sim_endpoint("m1"), sim_endpoint("m2")},
                              all_strategies);
    CHECK(plan(config, flat.vignettes, {}).size() == 96);
  }

  SUBCASE("completed keys are skipped") {
    auto config = make_config(tmp.path(), {sim_endpoint("m1")}, all_strategies);
    auto items = plan(config, flat.vignettes, {});
    std::set<RecordKey> done;
    for (size_t i = 0; i < 5; ++i) {
      const auto& it = items[i * 7];
      done.insert({config.endpoints[it.endpoint].id, to_string(it.strategy),
                   flat.vignettes[it.vignette].vignette_id});
    }
    auto remaining = plan(config, flat.vignettes, done);
    CHECK(remaining.size() == items.size() - done.size());
    for (const auto& it : remaining) {
      RecordKey key{config.endpoints[it.endpoint].id, to_string(it.strategy),
                    flat.vignettes[it.vignette].vignette_id};
      CHECK(done.count(key) == 0);
    }
  }

  SUBCASE("empty corpus plans nothing") {
    auto config = make_config(tmp.path(), {sim_endpoint("m1")}, all_strategies);
    CHECK(plan(config, {}, {}).empty());
  }
}

TEST_CASE("run manifest serializes the five counters") {
  RunSummary s;
  s.planned = 5;
  s.skipped_resume = 2;
  s.ok = 3;
  s.parse_failures = 1;
  s.persistent_failures = 1;
  auto j = nlohmann::json::parse(run_manifest_json(s));
  CHECK(j.at("planned") == 5);
  CHECK(j.at("skipped_resume") == 2);
  CHECK(j.at("ok") == 3);
  CHECK(j.at("parse_failures") == 1);
  CHECK(j.at("persistent_failures") == 1);
  CHECK(j.size() == 5);
}

TEST_CASE("records survive the jsonl round trip") {
  EvalRecord r;
  r.run_id = "run-x";
  r.endpoint_id = "m1";
  r.strategy = Strategy::CoT;
  r.vignette_id = "p000003-c";
  r.pair_id = "p000003";
  r.variant = Variant::Counterfactual;
  r.raw_response = "thinking...\nESI Level: 2";
  r.parsed_esi = 2;
  r.parse_rule = ParseRule::AnchorLine;
  r.status = EvalStatus::Ok;
  r.attempts = 3;
  r.latency_ms = 12.5;
  r.timestamp = "2026-01-02T03:04:05Z";

  EvalRecord back = record_from_json(record_to_json(r));
  CHECK(back.run_id == r.run_id);
  CHECK(back.endpoint_id == r.endpoint_id);
  CHECK(back.strategy == r.strategy);
  CHECK(back.vignette_id == r.vignette_id);
  CHECK(back.pair_id == r.pair_id);
  CHECK(back.variant == r.variant);
  CHECK(back.raw_response == r.raw_response);
  CHECK(back.parsed_esi == r.parsed_esi);
  CHECK(back.parse_rule == r.parse_rule);
  CHECK(back.status == r.status);
  CHECK(back.attempts == r.attempts);
  CHECK(back.latency_ms == doctest::Approx(r.latency_ms));
  CHECK(back.timestamp == r.timestamp);

  SUBCASE("failure statuses keep empty optionals") {
    r.parsed_esi.reset();
    r.parse_rule.reset();
    r.status = EvalStatus::ParseFailure;
    EvalRecord fb = record_from_json(record_to_json(r));
    CHECK_FALSE(fb.parsed_esi.has_value());
    CHECK_FALSE(fb.parse_rule.has_value());
    CHECK(fb.status == EvalStatus::ParseFailure);
  }
}

TEST_CASE("record files tolerate torn tails and drop duplicate keys") {
  testutil::TempDir tmp;
  auto path = tmp / "records.jsonl";

  EvalRecord r;
  r.run_id = "run-x";
  r.endpoint_id = "m1";
  r.strategy = Strategy::Baseline;
  r.pair_id = "p000000";
  r.variant = Variant::Original;
  r.status = EvalStatus::Ok;

  {
    RecordWriter w(path);
    for (int i = 0; i < 3; ++i) {
      r.vignette_id = "p00000" + std::to_string(i) + "-o";
      r.parsed_esi = 2 + i;
      w.append(r);
    }
  }

  SUBCASE("a torn final line is counted and skipped") {
    std::ofstream out(path, std::ios::app);
    out << "{\"run_id\": \"torn";
    out.close();
    RecordLoad load = load_records(path);
    CHECK(load.records.size() == 3);
    CHECK(load.malformed_lines == 1);
  }

  SUBCASE("the first record wins a key collision") {
    {
      RecordWriter w(path);
      r.vignette_id = "p000000-o";
      r.parsed_esi = 5;
      w.append(r);
    }
    RecordLoad load = load_records(path);
    CHECK(load.records.size() == 3);
    for (const auto& rec : load.records)
      if (rec.vignette_id == "p000000-o") CHECK(rec.parsed_esi == 2);
  }

  SUBCASE("a missing file reads as empty") {
    RecordLoad load = load_records(tmp / "absent.jsonl");
    CHECK(load.records.empty());
    CHECK(load.malformed_lines == 0);
  }

  SUBCASE("appending after a torn tail does not merge into the fragment") {
    {
      std::ofstream out(path, std::ios::binary | std::ios::app);
      out << "{\"run_id\": \"torn";
    }
    RecordWriter w(path);
    r.vignette_id = "p000003-o";
    r.parsed_esi = 5;
    w.append(r);
    RecordLoad load = load_records(path);
    CHECK(load.records.size() == 4);
    CHECK(load.malformed_lines == 1);
  }
}

TEST_CASE("pair_join keeps the female side in the F slot") {
  const NamePool& pools = NamePool::builtin();
  std::vector<CohortRow> rows = {
      cohort_row(1000, Gender::F, 2, "chest pain", ComplaintCategory::ChestPain),
      cohort_row(1001, Gender::M, 3, "headache", ComplaintCategory::Neurological),
      cohort_row(2000, Gender::M, 3, "testicular pain",
                 ComplaintCategory::GeneralMedical),
  };
  auto corpus = build_corpus(rows, pools, 11, false).vignettes;

  std::vector<EvalRecord> records;
  // Female original: -o holds the F side.
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000000", 3, 2);
  // Male original: -o holds the M side, -c the F side.
  records.push_back(
      ok_record("m1", Strategy::Baseline, vignette_named(corpus, "p000001-o"), 4));
  records.push_back(
      ok_record("m1", Strategy::Baseline, vignette_named(corpus, "p000001-c"), 5));

  SUBCASE("counterfactual contrast") {
    PairJoin pj = pair_join(records, corpus, Variant::Counterfactual);
    REQUIRE(pj.pairs.size() == 2);
    CHECK(pj.unpaired == 1);
    CHECK(pj.excluded == 0);

    std::map<std::string, PairOutcome> by_id;
    for (const auto& p : pj.pairs) by_id[p.pair_id] = p;
    CHECK(by_id.at("p000000").esi_f == 3);
    CHECK(by_id.at("p000000").esi_m == 2);
    CHECK(by_id.at("p000000").truth_esi == 2);
    CHECK(by_id.at("p000000").original_gender == Gender::F);
    CHECK(by_id.at("p000001").esi_f == 5);
    CHECK(by_id.at("p000001").esi_m == 4);
    CHECK(by_id.at("p000001").original_gender == Gender::M);
  }

  SUBCASE("a non-ok side excludes the pair") {
    records[3].status = EvalStatus::ParseFailure;
    records[3].parsed_esi.reset();
    PairJoin pj = pair_join(records, corpus, Variant::Counterfactual);
    CHECK(pj.pairs.size() == 1);
    CHECK(pj.excluded == 1);
    CHECK(pj.unpaired == 1);
  }

  SUBCASE("a missing side excludes the pair") {
    records.pop_back();
    PairJoin pj = pair_join(records, corpus, Variant::Counterfactual);
    CHECK(pj.pairs.size() == 1);
    CHECK(pj.excluded == 1);
  }

  SUBCASE("blind contrast joins the blind twins") {
    std::vector<EvalRecord> blind_records;
    blind_records.push_back(ok_record(
        "m1", Strategy::Blind, vignette_named(corpus, "p000000-ob"), 2));
    blind_records.push_back(ok_record(
        "m1", Strategy::Blind, vignette_named(corpus, "p000000-cb"), 2));
    PairJoin pj = pair_join(blind_records, corpus, Variant::Blind);
    REQUIRE(pj.pairs.size() == 1);
    CHECK(pj.pairs[0].esi_f == 2);
    CHECK(pj.pairs[0].esi_m == 2);
    // p000001's blind twins have no records: excluded, not unpaired.
    CHECK(pj.excluded == 1);
    CHECK(pj.unpaired == 1);
  }

  SUBCASE("counterfactual records never leak into the blind contrast") {
    PairJoin pj = pair_join(records, corpus, Variant::Blind);
    CHECK(pj.pairs.empty());
    CHECK(pj.excluded == 2);
  }
}

TEST_CASE("execute completes the plan on the simulator and resumes") {
  const NamePool& pools = NamePool::builtin();
  auto corpus = build_corpus(mixed_rows(5, 2), pools, 7, false).vignettes;

  testutil::TempDir tmp;
  SimProfile profile;
  profile.seed = 3;
  profile.p_flip = 0.5;
  auto config = make_config(
      tmp / "out", {sim_endpoint("m1", profile)},
      {Strategy::Baseline, Strategy::CoT, Strategy::Debiased, Strategy::Blind});

  RunSummary first = execute(config, corpus);
  CHECK(first.planned == 48);
  CHECK(first.skipped_resume == 0);
  CHECK(first.ok == 48);
  CHECK(first.parse_failures == 0);
  CHECK(first.persistent_failures == 0);

  RecordLoad load = load_records(config.records_path());
  CHECK(load.records.size() == 48);
  CHECK(load.malformed_lines == 0);
  CHECK(completed_keys(load.records).size() == 48);
  for (const auto& r : load.records) {
    CHECK(r.status == EvalStatus::Ok);
    CHECK(r.parsed_esi.has_value());
    CHECK(*r.parsed_esi >= 1);
    CHECK(*r.parsed_esi <= 5);
  }

  auto manifest_path = config.output_dir / "run_manifest.json";
  REQUIRE(std::filesystem::exists(manifest_path));
  std::ifstream in(manifest_path);
  auto manifest = nlohmann::json::parse(in);
  CHECK(manifest.at("planned") == 48);
  CHECK(manifest.at("ok") == 48);

  RunSummary second = execute(config, corpus);
  CHECK(second.planned == 0);
  CHECK(second.skipped_resume == 48);
  CHECK(second.ok == 0);
  CHECK(load_records(config.records_path()).records.size() == 48);
}

TEST_CASE("execute pins every response under a degenerate simulator") {
  const NamePool& pools = NamePool::builtin();
  auto corpus = build_corpus(mixed_rows(2, 0), pools, 7, false).vignettes;

  testutil::TempDir tmp;
  SimProfile degenerate;
  degenerate.degenerate_level = 3;
  auto config =
      make_config(tmp / "out", {sim_endpoint("m1", degenerate)}, {Strategy::Baseline});

  RunSummary summary = execute(config, corpus);
  CHECK(summary.planned == 4);
  CHECK(summary.ok == 4);
  for (const auto& r : load_records(config.records_path()).records)
    CHECK(r.parsed_esi == 3);
}

TEST_CASE("execute records persistent failures and does not retry them") {
  const NamePool& pools = NamePool::builtin();
  auto corpus = build_corpus(mixed_rows(2, 0), pools, 7, false).vignettes;

  testutil::TempDir tmp;
  ModelEndpoint dead;
  dead.id = "dead";
  dead.kind = EndpointKind::HttpChat;
  dead.base_url = "http://127.0.0.1:9";  // discard port, nothing listens
  dead.model_name = "m";
  dead.inter_request_delay = 0.0;
  auto config = make_config(tmp / "out", {dead}, {Strategy::Baseline});
  config.retry.max_retries = 1;
  config.retry.backoff = {0.0};
  config.retry.min_response_chars = 2;

  RunSummary summary = execute(config, corpus);
  CHECK(summary.planned == 4);
  CHECK(summary.ok == 0);
  CHECK(summary.persistent_failures == 4);

  RecordLoad load = load_records(config.records_path());
  REQUIRE(load.records.size() == 4);
  for (const auto& r : load.records) {
    CHECK(r.status == EvalStatus::PersistentFailure);
    CHECK(r.attempts == 2);
    CHECK_FALSE(r.parsed_esi.has_value());
  }

  // Failed keys are recorded, so a re-run picks up nothing.
  RunSummary second = execute(config, corpus);
  CHECK(second.planned == 0);
  CHECK(second.skipped_resume == 4);
}

TEST_CASE("analyze summarizes corpus composition and per-cell metrics") {
  const NamePool& pools = NamePool::builtin();
  auto corpus = build_corpus(mixed_rows(5, 2), pools, 7, false).vignettes;

  testutil::TempDir tmp;
  SimProfile profile;
  profile.seed = 3;
  profile.p_flip = 0.5;
  auto config = make_config(
      tmp / "out", {sim_endpoint("m1", profile)},
      {Strategy::Baseline, Strategy::CoT, Strategy::Debiased, Strategy::Blind});
  execute(config, corpus);
  RecordLoad load = load_records(config.records_path());

  AuditReport rep = analyze(load.records, corpus, config, load.malformed_lines);
  CHECK(rep.seed == config.seed);
  CHECK(rep.n_vignettes == 24);
  CHECK(rep.n_corpus_pairs == 5);
  CHECK(rep.n_sex_linked == 2);
  CHECK(rep.n_duplicate_stays == 0);
  CHECK(rep.malformed_record_lines == 0);
  CHECK(rep.endpoint_ids == std::vector<std::string>{"m1"});
  REQUIRE(rep.cells.size() == 4);

  for (const auto& cell : rep.cells) {
    CHECK(cell.endpoint_id == "m1");
    CHECK(cell.pairs_joined == 5);
    CHECK(cell.pairs_excluded == 0);
    CHECK(cell.metrics.n_pairs == 5);
    // Sex-linked rows have no counterfactual, so they count as unpaired in
    // every contrast, but their lone vignettes still feed the accuracy pool.
    CHECK(cell.unpaired == 2);
    CHECK(cell.metrics.acc.n == 12);
    CHECK(cell.metrics.acc.n_failures == 0);
    REQUIRE(cell.flip_ci.has_value());
    REQUIRE(cell.fm_ci.has_value());
    CHECK(cell.ci_note.empty());
    CHECK_FALSE(cell.profile.empty());
    CHECK(cell.profile != "unclassified");
    CHECK(cell.flip_ci->lo >= 0.0);
    CHECK(cell.flip_ci->hi <= 1.0);
    CHECK(cell.flip_ci->lo <= cell.metrics.flip);
    CHECK(cell.metrics.flip <= cell.flip_ci->hi);
    CHECK(cell.ablations.empty());
    CHECK_FALSE(cell.augmented.has_value());
    CHECK_FALSE(cell.sensitivity.has_value());
    CHECK_FALSE(cell.dedupe_applied);
  }

  SUBCASE("the report is invariant to record order") {
    std::string baseline_json = audit_report_json(rep);
    std::vector<EvalRecord> shuffled = load.records;
    std::mt19937_64 gen(99);
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    AuditReport rep2 = analyze(shuffled, corpus, config, load.malformed_lines);
    CHECK(audit_report_json(rep2) == baseline_json);
  }

  SUBCASE("a degenerate simulator produces zero flips") {
    SimProfile degenerate;
    degenerate.degenerate_level = 3;
    auto config2 =
        make_config(tmp / "out2", {sim_endpoint("m1", degenerate)},
                    {Strategy::Baseline});
    execute(config2, corpus);
    RecordLoad load2 = load_records(config2.records_path());
    AuditReport rep2 = analyze(load2.records, corpus, config2, 0);
    REQUIRE(rep2.cells.size() == 1);
    const auto& cell = rep2.cells[0];
    CHECK(cell.metrics.flip == 0.0);
    CHECK(cell.metrics.f_ut == 0);
    CHECK(cell.metrics.m_ut == 0);
    CHECK(cell.metrics.fm.kind == FmRatio::Kind::Undefined);
    REQUIRE(cell.flip_ci.has_value());
    CHECK(cell.flip_ci->lo == 0.0);
    CHECK(cell.flip_ci->hi == 0.0);
  }

  SUBCASE("single endpoint has no pairwise tests") {
    CHECK(rep.pairwise.empty());
    CHECK(rep.n_pairwise_tests == 0);
    CHECK(rep.bonferroni_alpha == 0.0);
  }
}

TEST_CASE("analyze skips cells with no records") {
  const NamePool& pools = NamePool::builtin();
  auto corpus = build_corpus(mixed_rows(2, 0), pools, 7, false).vignettes;

  testutil::TempDir tmp;
  auto config = make_config(tmp.path(), {sim_endpoint("m1")},
                            {Strategy::Baseline, Strategy::CoT});

  std::vector<EvalRecord> records;
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000000", 3, 2);
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000001", 2, 2);

  AuditReport rep = analyze(records, corpus, config, 0);
  REQUIRE(rep.cells.size() == 1);
  CHECK(rep.cells[0].strategy == Strategy::Baseline);
}

TEST_CASE("analyze charges parse failures to the accuracy denominator") {
  const NamePool& pools = NamePool::builtin();
  auto corpus = build_corpus(mixed_rows(3, 0), pools, 7, false).vignettes;

  testutil::TempDir tmp;
  auto config = make_config(tmp.path(), {sim_endpoint("m1")}, {Strategy::Baseline});

  std::vector<EvalRecord> records;
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000000", 3, 2);
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000001", 2, 2);
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000002", 4, 4);
  records[5].status = EvalStatus::ParseFailure;
  records[5].parsed_esi.reset();
  records[5].parse_rule.reset();
  records[5].raw_response = "unable to say";

  AuditReport rep = analyze(records, corpus, config, 0);
  REQUIRE(rep.cells.size() == 1);
  const auto& cell = rep.cells[0];
  CHECK(cell.pairs_joined == 2);
  CHECK(cell.pairs_excluded == 1);
  CHECK(cell.metrics.n_parse_failures == 1);
  CHECK(cell.metrics.n_pairs_excluded == 1);
  CHECK(cell.metrics.acc.n == 5);
  CHECK(cell.metrics.acc.n_failures == 1);
}

TEST_CASE("analyze runs ablation contrasts when their variants are present") {
  const NamePool& pools = NamePool::builtin();
  std::vector<CohortRow> rows = {
      cohort_row(1000, Gender::F, 2, "chest pain", ComplaintCategory::ChestPain),
      cohort_row(1001, Gender::F, 3, "headache", ComplaintCategory::Neurological),
  };
  auto corpus = build_corpus(rows, pools, 11, true).vignettes;
  REQUIRE(corpus.size() == 14);

  testutil::TempDir tmp;
  auto config = make_config(tmp.path(), {sim_endpoint("m1")}, {Strategy::Baseline});

  std::vector<EvalRecord> records;
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000000", 3, 2);
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000001", 3, 3);
  // Gender-only swap disagrees on one pair; the swapped side carries the
  // opposite gender, so it lands in the M slot for these female originals.
  records.push_back(
      ok_record("m1", Strategy::Baseline, vignette_named(corpus, "p000000-g"), 4));
  records.push_back(
      ok_record("m1", Strategy::Baseline, vignette_named(corpus, "p000001-g"), 3));

  AuditReport rep = analyze(records, corpus, config, 0);
  REQUIRE(rep.cells.size() == 1);
  const auto& cell = rep.cells[0];
  REQUIRE(cell.ablations.size() == 1);
  const auto& ab = cell.ablations[0];
  CHECK(ab.contrast == to_string(Variant::GenderOnly));
  CHECK(ab.n_pairs == 2);
  // Pair 0: original F=3 vs gender-swap M=4, an M-side undertriage.
  CHECK(ab.flip == doctest::Approx(0.5));
  CHECK(ab.f_ut == 0);
  CHECK(ab.m_ut == 1);
  CHECK(ab.fm.kind == FmRatio::Kind::Value);
  CHECK(ab.fm.value == 0.0);
}

TEST_CASE("duplicate stays trigger the dedupe sensitivity report") {
  const NamePool& pools = NamePool::builtin();
  std::vector<CohortRow> rows = {
      cohort_row(1000, Gender::F, 2, "chest pain", ComplaintCategory::ChestPain),
      cohort_row(1000, Gender::F, 2, "chest pain", ComplaintCategory::ChestPain),
      cohort_row(2000, Gender::F, 3, "headache", ComplaintCategory::Neurological),
      cohort_row(3000, Gender::F, 3, "weakness", ComplaintCategory::Neurological),
  };
  auto corpus = build_corpus(rows, pools, 11, false).vignettes;

  testutil::TempDir tmp;
  auto config = make_config(tmp.path(), {sim_endpoint("m1")}, {Strategy::Baseline});

  std::vector<EvalRecord> records;
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000000", 3, 2);
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000001", 2, 2);
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000002", 4, 4);
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000003", 5, 4);

  SUBCASE("raw leads when the toggle is off") {
    AuditReport rep = analyze(records, corpus, config, 0);
    CHECK(rep.n_duplicate_stays == 1);
    REQUIRE(rep.cells.size() == 1);
    const auto& cell = rep.cells[0];
    CHECK_FALSE(cell.dedupe_applied);
    CHECK(cell.metrics.n_pairs == 4);
    CHECK(cell.metrics.flip == doctest::Approx(0.5));
    CHECK(cell.metrics.includes_duplicates);
    REQUIRE(cell.sensitivity.has_value());
    CHECK(cell.sensitivity->n_pairs == 3);
    CHECK(cell.sensitivity->flip == doctest::Approx(2.0 / 3.0));
    CHECK_FALSE(cell.sensitivity->includes_duplicates);
  }

  SUBCASE("the deduped view leads when the toggle is on") {
    config.dedupe_duplicates = true;
    AuditReport rep = analyze(records, corpus, config, 0);
    REQUIRE(rep.cells.size() == 1);
    const auto& cell = rep.cells[0];
    CHECK(cell.dedupe_applied);
    CHECK(cell.metrics.n_pairs == 3);
    CHECK(cell.metrics.flip == doctest::Approx(2.0 / 3.0));
    REQUIRE(cell.sensitivity.has_value());
    CHECK(cell.sensitivity->n_pairs == 4);
    CHECK(cell.sensitivity->flip == doctest::Approx(0.5));
  }

  SUBCASE("unique stays produce no sensitivity report") {
    rows[1].stay_id = 1500;
    auto unique_corpus = build_corpus(rows, pools, 11, false).vignettes;
    AuditReport rep = analyze(records, unique_corpus, config, 0);
    CHECK(rep.n_duplicate_stays == 0);
    REQUIRE(rep.cells.size() == 1);
    CHECK_FALSE(rep.cells[0].sensitivity.has_value());
    CHECK_FALSE(rep.cells[0].metrics.includes_duplicates);
  }
}

TEST_CASE("augmentation mode scores the more urgent side of each pair") {
  const NamePool& pools = NamePool::builtin();
  std::vector<CohortRow> rows = {
      cohort_row(1000, Gender::F, 2, "chest pain", ComplaintCategory::ChestPain),
      cohort_row(1001, Gender::F, 5, "rash", ComplaintCategory::GeneralMedical),
  };
  auto corpus = build_corpus(rows, pools, 11, false).vignettes;

  testutil::TempDir tmp;
  auto config = make_config(tmp.path(), {sim_endpoint("m1")}, {Strategy::Baseline});

  std::vector<EvalRecord> records;
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000000", 2, 3);
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000001", 5, 4);

  SUBCASE("off by default") {
    AuditReport rep = analyze(records, corpus, config, 0);
    CHECK_FALSE(rep.cells.at(0).augmented.has_value());
  }

  SUBCASE("aggregates min(esi_f, esi_m) against truth") {
    config.augmentation_mode = true;
    AuditReport rep = analyze(records, corpus, config, 0);
    REQUIRE(rep.cells.at(0).augmented.has_value());
    const Accuracy& aug = *rep.cells.at(0).augmented;
    // Pair 0: min(2,3)=2 hits truth 2. Pair 1: min(5,4)=4 misses truth 5 by 1.
    CHECK(aug.exact_pct == doctest::Approx(50.0));
    CHECK(aug.within1_pct == doctest::Approx(100.0));
    CHECK(aug.n == 2);
  }
}

TEST_CASE("a single joined pair leaves the intervals unavailable") {
  const NamePool& pools = NamePool::builtin();
  auto corpus = build_corpus(mixed_rows(1, 1), pools, 7, false).vignettes;

  testutil::TempDir tmp;
  auto config = make_config(tmp.path(), {sim_endpoint("m1")}, {Strategy::Baseline});

  std::vector<EvalRecord> records;
  add_pair(records, corpus, "m1", Strategy::Baseline, "p000000", 3, 2);

  AuditReport rep = analyze(records, corpus, config, 0);
  REQUIRE(rep.cells.size() == 1);
  const auto& cell = rep.cells[0];
  CHECK(cell.pairs_joined == 1);
  CHECK_FALSE(cell.flip_ci.has_value());
  CHECK_FALSE(cell.fm_ci.has_value());
  CHECK(cell.ci_note == "fewer than 2 joined pairs; intervals unavailable");
  CHECK(cell.profile == "unclassified");
}

TEST_CASE("pairwise baseline tests compare endpoints") {
  const NamePool& pools = NamePool::builtin();
  std::vector<CohortRow> rows;
  for (int i = 0; i < 4; ++i)
    rows.push_back(cohort_row(1000 + i, Gender::F, 3, "chest pain",
                              ComplaintCategory::ChestPain));
  auto corpus = build_corpus(rows, pools, 11, false).vignettes;

  testutil::TempDir tmp;
  auto config = make_config(
      tmp.path(), {sim_endpoint("a"), sim_endpoint("b"), sim_endpoint("c")},
      {Strategy::Baseline});

  std::vector<EvalRecord> records;
  // Endpoint a: flips on p0, p1, p3; direction f_ut=2, m_ut=1.
  add_pair(records, corpus, "a", Strategy::Baseline, "p000000", 3, 2);
  add_pair(records, corpus, "a", Strategy::Baseline, "p000001", 2, 3);
  add_pair(records, corpus, "a", Strategy::Baseline, "p000002", 3, 3);
  add_pair(records, corpus, "a", Strategy::Baseline, "p000003", 4, 2);
  // Endpoint b: flips on p1, p2; direction f_ut=1, m_ut=1.
  add_pair(records, corpus, "b", Strategy::Baseline, "p000000", 3, 3);
  add_pair(records, corpus, "b", Strategy::Baseline, "p000001", 2, 3);
  add_pair(records, corpus, "b", Strategy::Baseline, "p000002", 4, 3);
  add_pair(records, corpus, "b", Strategy::Baseline, "p000003", 2, 2);
  // Endpoint c repeats endpoint a exactly.
  add_pair(records, corpus, "c", Strategy::Baseline, "p000000", 3, 2);
  add_pair(records, corpus, "c", Strategy::Baseline, "p000001", 2, 3);
  add_pair(records, corpus, "c", Strategy::Baseline, "p000002", 3, 3);
  add_pair(records, corpus, "c", Strategy::Baseline, "p000003", 4, 2);

  AuditReport rep = analyze(records, corpus, config, 0);
  CHECK(rep.n_pairwise_tests == 6);
  CHECK(rep.bonferroni_alpha == doctest::Approx(0.05 / 6.0));
  REQUIRE(rep.pairwise.size() == 6);

  auto find_test = [&](const std::string& a, const std::string& b,
                       const std::string& kind) -> const PairwiseTest& {
    for (const auto& t : rep.pairwise)
      if (t.endpoint_a == a && t.endpoint_b == b && t.kind == kind) return t;
    throw std::runtime_error("missing pairwise test");
  };

  SUBCASE("mcnemar counts discordant flips") {
    const auto& t = find_test("a", "b", "mcnemar_flip");
    CHECK(t.defined);
    // a flips p0 and p3 where b does not (b=2); b flips p2 where a does not.
    CHECK(t.result.b == 2);
    CHECK(t.result.c == 1);
    CHECK(t.result.statistic ==
          doctest::Approx(stats::mcnemar(2, 1, rep.bonferroni_alpha).statistic));
  }

  SUBCASE("identical endpoints have no discordant pairs") {
    const auto& t = find_test("a", "c", "mcnemar_flip");
    CHECK(t.defined);
    CHECK(t.result.statistic == 0.0);
    CHECK(t.result.p == 1.0);
    CHECK(t.result.b == 0);
    CHECK(t.result.c == 0);
    CHECK(t.note == "no discordant pairs");
  }

  SUBCASE("direction test builds the 2x2 undertriage table") {
    const auto& t = find_test("a", "b", "chi2_direction");
    CHECK(t.defined);
    std::vector<long> expect = {2, 1, 1, 1};
    CHECK(t.result.table == expect);
    stats::PairedTestResult oracle =
        stats::chi2_2x2(2, 1, 1, 1, rep.bonferroni_alpha);
    CHECK(t.result.statistic == doctest::Approx(oracle.statistic));
    CHECK(t.result.p == doctest::Approx(oracle.p));
  }
}

TEST_CASE("degenerate direction tables surface as undefined chi2 tests") {
  const NamePool& pools = NamePool::builtin();
  std::vector<CohortRow> rows = {
      cohort_row(1000, Gender::F, 3, "chest pain", ComplaintCategory::ChestPain),
      cohort_row(1001, Gender::F, 3, "chest pain", ComplaintCategory::ChestPain),
  };
  auto corpus = build_corpus(rows, pools, 11, false).vignettes;

  testutil::TempDir tmp;
  auto config = make_config(tmp.path(), {sim_endpoint("a"), sim_endpoint("b")},
                            {Strategy::Baseline});

  std::vector<EvalRecord> records;
  for (const std::string& e : {"a", "b"}) {
    add_pair(records, corpus, e, Strategy::Baseline, "p000000", 3, 3);
    add_pair(records, corpus, e, Strategy::Baseline, "p000001", 3, 3);
  }

  AuditReport rep = analyze(records, corpus, config, 0);
  REQUIRE(rep.pairwise.size() == 2);
  for (const auto& t : rep.pairwise) {
    if (t.kind == "chi2_direction") {
      CHECK_FALSE(t.defined);
      CHECK_FALSE(t.note.empty());
      std::vector<long> zeros = {0, 0, 0, 0};
      CHECK(t.result.table == zeros);
    } else {
      CHECK(t.kind == "mcnemar_flip");
      CHECK(t.note == "no discordant pairs");
    }
  }
}

TEST_CASE("profile classification separates the three bias shapes") {
  auto label = [](double flip, double lo, double hi) {
    return classify_profile(flip, {lo, hi});
  };

  CHECK(label(0.120, 1.90, 2.44).label == 'A');
  CHECK_FALSE(label(0.120, 1.90, 2.44).high_flip_composite);
  CHECK(label(0.099, 0.98, 1.27).label == 'B');
  CHECK(label(0.438, 0.87, 0.98).label == 'C');

  SUBCASE("high flip with a directional interval is a composite A") {
    ProfileClass p = label(0.20, 1.10, 1.50);
    CHECK(p.label == 'A');
    CHECK(p.high_flip_composite);
  }

  SUBCASE("an interval touching parity is not directional") {
    CHECK(label(0.20, 1.0, 1.50).label == 'C');
    CHECK(label(0.10, 0.50, 0.90).label == 'B');
    CHECK(label(0.15, 0.90, 1.10).label == 'B');
  }

  SUBCASE("labels render with their qualifiers") {
    CHECK(to_string(label(0.120, 1.90, 2.44)) == "A (directional female)");
    CHECK(to_string(label(0.20, 1.10, 1.50)) ==
          "A (directional female, high flip)");
    CHECK(to_string(label(0.099, 0.98, 1.27)) == "B (near parity)");
    CHECK(to_string(label(0.438, 0.87, 0.98)) == "C (high flip)");
  }
}

TEST_CASE("test-retest counts repeat disagreements") {
  const NamePool& pools = NamePool::builtin();
  auto corpus = build_corpus(mixed_rows(4, 2), pools, 7, false).vignettes;
  DecodeConfig decode;
  RetryPolicy retry;

  SUBCASE("a noiseless simulator never flips") {
    Gateway gw(sim_endpoint("m1"), decode, retry);
    RetestResult r = test_retest(gw, corpus, 5, 21);
    CHECK(r.valid_pairs == 5);
    CHECK(r.flips == 0);
    CHECK(r.rate == 0.0);
    CHECK(r.wilson.lo == 0.0);

    auto j = nlohmann::json::parse(retest_json(r));
    CHECK(j.at("flips") == 0);
    CHECK(j.at("valid_pairs") == 5);
    CHECK(j.at("rate") == 0.0);
    CHECK(j.at("rate_pct") == "0.0%");
    CHECK(j.at("wilson").at("lo") == 0.0);
    CHECK(j.at("clopper_pearson").at("hi") <= 1.0);
  }

  SUBCASE("full repeat noise flips every duplicate") {
    SimProfile noisy;
    noisy.noise_rate = 1.0;
    Gateway gw(sim_endpoint("m1", noisy), decode, retry);
    RetestResult r = test_retest(gw, corpus, 6, 21);
    CHECK(r.valid_pairs == 6);
    CHECK(r.flips == 6);
    CHECK(r.rate == doctest::Approx(1.0));
    CHECK(nlohmann::json::parse(retest_json(r)).at("rate_pct") == "100.0%");
  }

  SUBCASE("n larger than the corpus clamps to the originals") {
    Gateway gw(sim_endpoint("m1"), decode, retry);
    RetestResult r = test_retest(gw, corpus, 50, 21);
    CHECK(r.valid_pairs == 6);
  }

  SUBCASE("invalid inputs throw") {
    Gateway gw(sim_endpoint("m1"), decode, retry);
    CHECK_THROWS_AS(test_retest(gw, corpus, 0, 21), std::invalid_argument);
    std::vector<Vignette> no_originals;
    for (const auto& v : corpus)
      if (v.variant != Variant::Original) no_originals.push_back(v);
    CHECK_THROWS_AS(test_retest(gw, no_originals, 5, 21), std::invalid_argument);
  }
}

TEST_CASE("run config loads json with defaults and path resolution") {
  testutil::TempDir tmp;
  auto config_path = tmp / "run.json";

  SUBCASE("fields, defaults, and relative paths") {
    std::ofstream out(config_path);
    out << R"({
      "corpus": "corpus.jsonl",
      "output_dir": "out",
      "seed": 7,
      "augmentation_mode": true,
      "dedupe_duplicates": true,
      "strategies": ["baseline", "blind"],
      "endpoints": [
        {"id": "sim1", "sim": {"seed": 3, "p_flip": 0.2, "fm_skew": 0.8}},
        {"id": "api1", "kind": "http_chat", "base_url": "http://127.0.0.1:9999",
         "model_name": "gpt-test", "api_key_env": "TEST_API_KEY",
         "max_in_flight": 2}
      ],
      "decode": {"temperature": 0.3, "max_tokens": 128},
      "retry": {"max_retries": 4, "backoff": [0.1, 0.2], "min_response_chars": 3}
    })";
    out.close();

    RunConfig c = RunConfig::load(config_path);
    CHECK(c.corpus_path == tmp / "corpus.jsonl");
    CHECK(c.output_dir == tmp / "out");
    CHECK(c.records_path() == tmp.path() / "out" / "records.jsonl");
    CHECK(c.seed == 7);
    CHECK(c.augmentation_mode);
    CHECK(c.dedupe_duplicates);
    REQUIRE(c.strategies.size() == 2);
    CHECK(c.strategies[0] == Strategy::Baseline);
    CHECK(c.strategies[1] == Strategy::Blind);

    REQUIRE(c.endpoints.size() == 2);
    CHECK(c.endpoints[0].kind == EndpointKind::Simulator);
    CHECK(c.endpoints[0].inter_request_delay == 0.0);
    CHECK(c.endpoints[0].max_in_flight == 4);
    CHECK(c.endpoints[0].sim.seed == 3);
    CHECK(c.endpoints[0].sim.p_flip == doctest::Approx(0.2));
    CHECK(c.endpoints[0].sim.fm_skew == doctest::Approx(0.8));
    CHECK(c.endpoints[1].kind == EndpointKind::HttpChat);
    CHECK(c.endpoints[1].inter_request_delay == doctest::Approx(0.1));
    CHECK(c.endpoints[1].max_in_flight == 2);
    CHECK(c.endpoints[1].api_key_env == "TEST_API_KEY");

    CHECK(c.decode.temperature == doctest::Approx(0.3));
    CHECK(c.decode.max_tokens == 128);
    CHECK(c.retry.max_retries == 4);
    CHECK(c.retry.backoff == std::vector<double>{0.1, 0.2});
    CHECK(c.retry.min_response_chars == 3);
  }

  SUBCASE("absolute paths pass through unchanged") {
    std::ofstream out(config_path);
    out << R"({
      "corpus": "/data/corpus.jsonl",
      "output_dir": "/data/out",
      "strategies": ["cot"],
      "endpoints": [{"id": "sim1"}]
    })";
    out.close();
    RunConfig c = RunConfig::load(config_path);
    CHECK(c.corpus_path == std::filesystem::path("/data/corpus.jsonl"));
    CHECK(c.output_dir == std::filesystem::path("/data/out"));
    CHECK(c.seed == 42);
    CHECK_FALSE(c.augmentation_mode);
    CHECK(c.retry.max_retries == 5);
  }

  SUBCASE("validation failures throw") {
    auto write_config = [&](const std::string& body) {
      std::ofstream out(config_path);
      out << body;
    };

    write_config(R"({"corpus": "c", "output_dir": "o",
                     "strategies": [], "endpoints": [{"id": "sim1"}]})");
    CHECK_THROWS_AS(RunConfig::load(config_path), std::invalid_argument);

    write_config(R"({"corpus": "c", "output_dir": "o",
                     "strategies": ["baseline"], "endpoints": []})");
    CHECK_THROWS_AS(RunConfig::load(config_path), std::invalid_argument);

    write_config(R"({"corpus": "c", "output_dir": "o",
                     "strategies": ["baseline"],
                     "endpoints": [{"id": "x"}, {"id": "x"}]})");
    CHECK_THROWS_AS(RunConfig::load(config_path), std::invalid_argument);

    write_config(R"({"corpus": "c", "output_dir": "o",
                     "strategies": ["baseline"],
                     "endpoints": [{"id": "x", "kind": "http_chat"}]})");
    CHECK_THROWS_AS(RunConfig::load(config_path), std::invalid_argument);

    write_config(R"({"corpus": "c", "output_dir": "o",
                     "strategies": ["mystery"], "endpoints": [{"id": "x"}]})");
    CHECK_THROWS(RunConfig::load(config_path));

    CHECK_THROWS_AS(RunConfig::load(tmp / "absent.json"), std::runtime_error);
  }
}
