#include "esiaudit/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>
#include <unordered_map>

#include "esiaudit/parsing.hpp"
#include "esiaudit/rng.hpp"
#include "json.hpp"

namespace esiaudit {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

SimProfile sim_from_json(const nlohmann::json& j) {
  SimProfile s;
  s.seed = j.value("seed", 0ULL);
  s.p_flip = j.value("p_flip", 0.0);
  s.fm_skew = j.value("fm_skew", 0.5);
  s.base_error = j.value("base_error", 0.0);
  s.noise_rate = j.value("noise_rate", 0.0);
  if (j.contains("degenerate_level") && !j.at("degenerate_level").is_null())
    s.degenerate_level = j.at("degenerate_level").get<int>();
  return s;
}

std::string variant_partner_suffix(Variant v) {
  switch (v) {
    case Variant::Counterfactual: return "-c";
    case Variant::GenderOnly: return "-g";
    case Variant::NameOnly: return "-n";
    case Variant::AgePreservingBlind: return "-a";
    case Variant::Blind: return "-cb";
    default: return "-c";
  }
}

bool headline_variant(Strategy s, Variant v) {
  if (s == Strategy::Blind) return v == Variant::Blind;
  return v == Variant::Original || v == Variant::Counterfactual;
}

bool descends_from_original(const Vignette& v) {
  if (v.variant == Variant::Original) return true;
  return v.variant == Variant::Blind && v.side_gender == v.source_gender;
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  std::filesystem::path base = path.has_parent_path()
                                   ? path.parent_path()
                                   : std::filesystem::path(".");

  RunConfig c;
  c.corpus_path = resolve(base, j.at("corpus").get<std::string>());
  c.output_dir = resolve(base, j.at("output_dir").get<std::string>());
  c.seed = j.value("seed", 42ULL);
  c.augmentation_mode = j.value("augmentation_mode", false);
  c.dedupe_duplicates = j.value("dedupe_duplicates", false);

  for (const auto& s : j.at("strategies"))
    c.strategies.push_back(strategy_from_string(s.get<std::string>()));

  for (const auto& e : j.at("endpoints")) {
    ModelEndpoint ep;
    ep.id = e.at("id").get<std::string>();
    ep.kind = endpoint_kind_from_string(e.value("kind", "simulator"));
    ep.base_url = e.value("base_url", std::string());
    ep.model_name = e.value("model_name", std::string());
    ep.api_key_env = e.value("api_key_env", std::string());
    ep.inter_request_delay =
        e.value("inter_request_delay", ep.kind == EndpointKind::HttpChat ? 0.1 : 0.0);
    ep.max_in_flight = e.value("max_in_flight", 4);
    if (e.contains("sim")) ep.sim = sim_from_json(e.at("sim"));
    c.endpoints.push_back(std::move(ep));
  }

  if (j.contains("decode")) {
    c.decode.temperature = j.at("decode").value("temperature", 0.0);
    c.decode.max_tokens = j.at("decode").value("max_tokens", 1024);
  }
  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    c.retry.max_retries = r.value("max_retries", 5);
    if (r.contains("backoff"))
      c.retry.backoff = r.at("backoff").get<std::vector<double>>();
    c.retry.min_response_chars = r.value("min_response_chars", 10);
  }
  c.check();
  return c;
}

void RunConfig::check() const {
  if (endpoints.empty()) throw std::invalid_argument("config: at least one endpoint");
  if (strategies.empty()) throw std::invalid_argument("config: at least one strategy");
  std::set<std::string> ids;
  for (const auto& e : endpoints) {
    e.check();
    if (!ids.insert(e.id).second)
      throw std::invalid_argument("config: duplicate endpoint id " + e.id);
  }
}

bool strategy_accepts(Strategy s, Variant v) {
  switch (s) {
    case Strategy::Baseline:
      return v != Variant::Blind;
    case Strategy::CoT:
    case Strategy::Debiased:
      return v == Variant::Original || v == Variant::Counterfactual;
    case Strategy::Blind:
      return v == Variant::Blind;
  }
  return false;
}

std::vector<WorkItem> plan(const RunConfig& config,
                           const std::vector<Vignette>& corpus,
                           const std::set<RecordKey>& completed) {
  std::vector<WorkItem> items;
  for (size_t e = 0; e < config.endpoints.size(); ++e) {
    for (Strategy s : config.strategies) {
      for (size_t vi = 0; vi < corpus.size(); ++vi) {
        if (!strategy_accepts(s, corpus[vi].variant)) continue;
        if (completed.count(
                {config.endpoints[e].id, to_string(s), corpus[vi].vignette_id}))
          continue;
        items.push_back({e, s, vi});
      }
    }
  }
  return items;
}

std::string run_manifest_json(const RunSummary& s) {
  nlohmann::json j{
      {"planned", s.planned},
      {"skipped_resume", s.skipped_resume},
      {"ok", s.ok},
      {"parse_failures", s.parse_failures},
      {"persistent_failures", s.persistent_failures},
  };
  return j.dump(2);
}

RunSummary execute(const RunConfig& config, const std::vector<Vignette>& corpus) {
  config.check();
  std::filesystem::create_directories(config.output_dir);

  RecordLoad existing = load_records(config.records_path());
  auto completed = completed_keys(existing.records);
  std::vector<WorkItem> items = plan(config, corpus, completed);

  RunSummary summary;
  summary.planned = static_cast<long>(items.size());
  summary.skipped_resume =
      static_cast<long>(plan(config, corpus, {}).size() - items.size());

  // Fatal configuration problems (bad endpoint, missing key env var) must
  // surface before any item runs.
  std::vector<std::unique_ptr<Gateway>> gateways;
  for (const auto& e : config.endpoints)
    gateways.push_back(std::make_unique<Gateway>(e, config.decode, config.retry));

  RecordWriter writer(config.records_path());
  const std::string run_id = "run-" + utc_timestamp();

  // Items regrouped per endpoint so each endpoint's worker pool paces itself.
  std::vector<std::vector<WorkItem>> per_endpoint(config.endpoints.size());
  for (const auto& item : items) per_endpoint[item.endpoint].push_back(item);

  std::atomic<long> ok{0}, parse_failures{0}, persistent{0};
  std::atomic<bool> aborted{false};
  std::mutex fatal_mu;
  std::exception_ptr fatal;

  auto worker = [&](size_t endpoint_idx, std::atomic<size_t>& next) {
    auto& gw = *gateways[endpoint_idx];
    const auto& queue = per_endpoint[endpoint_idx];
    bool is_sim = config.endpoints[endpoint_idx].kind == EndpointKind::Simulator;
    while (!aborted.load()) {
      size_t i = next.fetch_add(1);
      if (i >= queue.size()) break;
      const WorkItem& item = queue[i];
      const Vignette& v = corpus[item.vignette];

      EvalRecord rec;
      rec.run_id = run_id;
      rec.endpoint_id = config.endpoints[endpoint_idx].id;
      rec.strategy = item.strategy;
      rec.vignette_id = v.vignette_id;
      rec.pair_id = v.pair_id;
      rec.variant = v.variant;
      try {
        std::vector<Message> messages = build_prompt(item.strategy, v);
        SimFeatures f;
        const SimFeatures* fp = nullptr;
        if (is_sim) {
          f = features_for(v, item.strategy);
          fp = &f;
        }
        CompletionResult res = gw.complete(messages, fp);
        rec.raw_response = std::move(res.raw_text);
        rec.attempts = res.attempts;
        rec.latency_ms = res.latency_ms;
        if (auto p = parse_esi(rec.raw_response)) {
          rec.parsed_esi = p->esi;
          rec.parse_rule = p->rule;
          rec.status = EvalStatus::Ok;
          ok.fetch_add(1);
        } else {
          rec.status = EvalStatus::ParseFailure;
          parse_failures.fetch_add(1);
        }
      } catch (const PersistentFailure& e) {
        rec.status = EvalStatus::PersistentFailure;
        rec.attempts = e.attempts;
        persistent.fetch_add(1);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        aborted.store(true);
        return;
      }
      rec.timestamp = utc_timestamp();
      try {
        writer.append(rec);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        aborted.store(true);
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  std::vector<std::unique_ptr<std::atomic<size_t>>> cursors;
  for (size_t e = 0; e < config.endpoints.size(); ++e) {
    cursors.push_back(std::make_unique<std::atomic<size_t>>(0));
    size_t n_workers = std::min<size_t>(
        std::max(config.endpoints[e].max_in_flight, 1), per_endpoint[e].size());
    for (size_t w = 0; w < n_workers; ++w)
      threads.emplace_back(worker, e, std::ref(*cursors[e]));
  }
  for (auto& t : threads) t.join();
  if (fatal) std::rethrow_exception(fatal);

  summary.ok = ok.load();
  summary.parse_failures = parse_failures.load();
  summary.persistent_failures = persistent.load();

  std::ofstream manifest(config.output_dir / "run_manifest.json");
  manifest << run_manifest_json(summary) << "\n";
  return summary;
}

std::map<std::string, PairMeta> pair_metadata(const std::vector<Vignette>& corpus) {
  std::map<std::string, PairMeta> meta;
  for (const auto& v : corpus) {
    if (v.variant == Variant::Original) {
      PairMeta& m = meta[v.pair_id];
      m.truth_esi = v.ground_truth_esi;
      m.category = v.category;
      m.race = v.race;
      m.age_band = age_band_of(v.age.value_or(0));
      m.admitted = admitted_outcome(v.disposition);
      m.original_gender = v.source_gender;
      m.stay_id = v.stay_id;
    } else if (v.variant == Variant::Counterfactual) {
      meta[v.pair_id].has_partner = true;
    }
  }
  return meta;
}

PairJoin pair_join(const std::vector<EvalRecord>& records,
                   const std::vector<Vignette>& corpus, Variant partner) {
  std::unordered_map<std::string, const Vignette*> by_id;
  by_id.reserve(corpus.size());
  for (const auto& v : corpus) by_id[v.vignette_id] = &v;
  auto meta = pair_metadata(corpus);

  struct Sides {
    const EvalRecord* f = nullptr;
    const EvalRecord* m = nullptr;
  };
  std::unordered_map<std::string, Sides> sides;
  for (const auto& r : records) {
    bool in_contrast = partner == Variant::Blind
                           ? r.variant == Variant::Blind
                           : (r.variant == Variant::Original || r.variant == partner);
    if (!in_contrast) continue;
    auto vit = by_id.find(r.vignette_id);
    if (vit == by_id.end()) continue;
    auto& s = sides[r.pair_id];
    (vit->second->side_gender == Gender::F ? s.f : s.m) = &r;
  }

  PairJoin out;
  std::string suffix = variant_partner_suffix(partner);
  for (const auto& [pair_id, m] : meta) {
    if (!by_id.count(pair_id + suffix)) {
      ++out.unpaired;
      continue;
    }
    auto sit = sides.find(pair_id);
    bool ok = sit != sides.end() && sit->second.f && sit->second.m &&
              sit->second.f->status == EvalStatus::Ok &&
              sit->second.m->status == EvalStatus::Ok;
    if (!ok) {
      ++out.excluded;
      continue;
    }
    PairOutcome p;
    p.pair_id = pair_id;
    p.esi_f = *sit->second.f->parsed_esi;
    p.esi_m = *sit->second.m->parsed_esi;
    p.truth_esi = m.truth_esi;
    p.category = m.category;
    p.race = m.race;
    p.age_band = m.age_band;
    p.admitted = m.admitted;
    p.original_gender = m.original_gender;
    out.pairs.push_back(std::move(p));
  }
  return out;
}

RetestResult test_retest(Gateway& gateway, const std::vector<Vignette>& corpus,
                         long n, uint64_t seed) {
  std::vector<size_t> originals;
  for (size_t i = 0; i < corpus.size(); ++i)
    if (corpus[i].variant == Variant::Original) originals.push_back(i);
  if (originals.empty())
    throw std::invalid_argument("test_retest: corpus has no original vignettes");

  if (n < 1) throw std::invalid_argument("test_retest: n must be positive");
  Rng rng(seed);
  rng.shuffle(originals);
  if (n < static_cast<long>(originals.size()))
    originals.resize(static_cast<size_t>(n));

  bool is_sim = gateway.endpoint().kind == EndpointKind::Simulator;
  RetestResult out;
  for (size_t idx : originals) {
    const Vignette& v = corpus[idx];
    std::vector<Message> messages = build_prompt(Strategy::Baseline, v);
    SimFeatures f;
    const SimFeatures* fp = nullptr;
    if (is_sim) {
      f = features_for(v, Strategy::Baseline);
      fp = &f;
    }
    std::optional<int> first, second;
    try {
      if (auto p = parse_esi(gateway.complete(messages, fp).raw_text)) first = p->esi;
      if (auto p = parse_esi(gateway.complete(messages, fp).raw_text)) second = p->esi;
    } catch (const PersistentFailure&) {
      continue;
    }
    if (!first || !second) continue;
    ++out.valid_pairs;
    if (*first != *second) ++out.flips;
  }
  if (out.valid_pairs > 0) {
    out.rate = static_cast<double>(out.flips) / static_cast<double>(out.valid_pairs);
    out.wilson = stats::wilson_ci(out.flips, out.valid_pairs);
    out.clopper_pearson = stats::clopper_pearson_ci(out.flips, out.valid_pairs);
  }
  return out;
}

std::string retest_json(const RetestResult& r) {
  char rate[32];
  std::snprintf(rate, sizeof rate, "%.1f%%", r.rate * 100.0);
  nlohmann::json j{
      {"flips", r.flips},
      {"valid_pairs", r.valid_pairs},
      {"rate", r.rate},
      {"rate_pct", rate},
      {"wilson", {{"lo", r.wilson.lo}, {"hi", r.wilson.hi}}},
      {"clopper_pearson",
       {{"lo", r.clopper_pearson.lo}, {"hi", r.clopper_pearson.hi}}},
  };
  return j.dump(2);
}

std::string to_string(const ProfileClass& p) {
  switch (p.label) {
    case 'A':
      return p.high_flip_composite ? "A (directional female, high flip)"
                                   : "A (directional female)";
    case 'C': return "C (high flip)";
    default: return "B (near parity)";
  }
}

ProfileClass classify_profile(double flip_rate, stats::Ci fm_ci) {
  if (flip_rate > 0.15 && fm_ci.lo <= 1.0) return {'C', false};
  if (fm_ci.lo > 1.0) return {'A', flip_rate > 0.15};
  return {'B', false};
}

namespace {

struct CellInputs {
  std::vector<VignetteObs> obs;
  std::vector<int> preds;
  std::vector<int> truths;
  long parse_failures = 0;
};

CellInputs collect_obs(const std::vector<EvalRecord>& records, Strategy s,
                       const std::unordered_map<std::string, const Vignette*>& by_id,
                       const std::set<std::string>* kept_pairs) {
  CellInputs out;
  for (const auto& r : records) {
    if (!headline_variant(s, r.variant)) continue;
    if (kept_pairs && !kept_pairs->count(r.pair_id)) continue;
    auto vit = by_id.find(r.vignette_id);
    if (vit == by_id.end()) continue;
    const Vignette& v = *vit->second;
    if (r.status == EvalStatus::ParseFailure) {
      ++out.parse_failures;
      continue;
    }
    if (r.status != EvalStatus::Ok) continue;
    VignetteObs o;
    o.pred = *r.parsed_esi;
    o.truth = v.ground_truth_esi;
    o.gender = v.gender.value_or(v.side_gender);
    o.admitted = admitted_outcome(v.disposition);
    o.original = descends_from_original(v);
    out.obs.push_back(o);
    out.preds.push_back(o.pred);
    out.truths.push_back(o.truth);
  }
  return out;
}

}  // namespace

AuditReport analyze(const std::vector<EvalRecord>& records,
                    const std::vector<Vignette>& corpus, const RunConfig& config,
                    long malformed_record_lines) {
  AuditReport rep;
  rep.seed = config.seed;
  rep.augmentation_mode = config.augmentation_mode;
  rep.dedupe_duplicates = config.dedupe_duplicates;
  rep.strategies = config.strategies;
  rep.malformed_record_lines = malformed_record_lines;
  for (const auto& e : config.endpoints) rep.endpoint_ids.push_back(e.id);

  rep.n_vignettes = static_cast<long>(corpus.size());
  std::map<long, long> stay_counts;
  for (const auto& v : corpus) {
    if (v.variant == Variant::Original) {
      ++stay_counts[v.stay_id];
    } else if (v.variant == Variant::Counterfactual) {
      ++rep.n_corpus_pairs;
    }
  }
  long originals = 0;
  for (const auto& [stay, count] : stay_counts) {
    originals += count;
    rep.n_duplicate_stays += count - 1;
  }
  rep.n_sex_linked = originals - rep.n_corpus_pairs;

  std::unordered_map<std::string, const Vignette*> by_id;
  by_id.reserve(corpus.size());
  for (const auto& v : corpus) by_id[v.vignette_id] = &v;
  auto meta = pair_metadata(corpus);

  std::map<std::pair<std::string, Strategy>, std::vector<EvalRecord>> groups;
  for (const auto& r : records) groups[{r.endpoint_id, r.strategy}].push_back(r);

  // Flip indicators per endpoint at Baseline, for the pairwise tests.
  std::map<std::string, std::map<std::string, bool>> baseline_flips;
  std::map<std::string, DirectionalCounts> baseline_direction;

  for (const auto& endpoint : config.endpoints) {
    for (Strategy s : config.strategies) {
      auto git = groups.find({endpoint.id, s});
      if (git == groups.end()) continue;
      const auto& cell_records = git->second;

      CellAnalysis cell;
      cell.endpoint_id = endpoint.id;
      cell.strategy = s;

      Variant contrast =
          s == Strategy::Blind ? Variant::Blind : Variant::Counterfactual;
      PairJoin pj = pair_join(cell_records, corpus, contrast);
      cell.pairs_joined = static_cast<long>(pj.pairs.size());
      cell.pairs_excluded = pj.excluded;
      cell.unpaired = pj.unpaired;

      // Duplicate-stay sensitivity: when the sampled cohort reused a stay,
      // report the headline both ways and let the toggle pick which one
      // leads.
      std::set<std::string> kept_pairs;
      bool dups = false;
      {
        std::set<long> stays_seen;
        for (const auto& p : pj.pairs) {
          long stay = meta.at(p.pair_id).stay_id;
          if (stays_seen.insert(stay).second)
            kept_pairs.insert(p.pair_id);
          else
            dups = true;
        }
      }

      CellInputs raw_in = collect_obs(cell_records, s, by_id, nullptr);
      MetricReport raw =
          compile_metric_report(pj.pairs, raw_in.obs, raw_in.parse_failures,
                                pj.excluded, dups);

      std::vector<PairOutcome> headline_pairs = pj.pairs;
      if (dups) {
        std::vector<PairOutcome> deduped_pairs;
        for (const auto& p : pj.pairs)
          if (kept_pairs.count(p.pair_id)) deduped_pairs.push_back(p);
        CellInputs dd_in = collect_obs(cell_records, s, by_id, &kept_pairs);
        MetricReport deduped =
            compile_metric_report(deduped_pairs, dd_in.obs, dd_in.parse_failures,
                                  pj.excluded, false);
        if (config.dedupe_duplicates) {
          cell.metrics = deduped;
          cell.sensitivity = raw;
          cell.dedupe_applied = true;
          headline_pairs = std::move(deduped_pairs);
        } else {
          cell.metrics = raw;
          cell.sensitivity = deduped;
        }
      } else {
        cell.metrics = raw;
      }

      if (headline_pairs.size() >= 2) {
        std::vector<uint8_t> flip(headline_pairs.size());
        std::vector<uint8_t> f_side(headline_pairs.size()), m_side(headline_pairs.size());
        for (size_t i = 0; i < headline_pairs.size(); ++i) {
          flip[i] = headline_pairs[i].esi_f != headline_pairs[i].esi_m;
          f_side[i] = headline_pairs[i].esi_f > headline_pairs[i].esi_m;
          m_side[i] = headline_pairs[i].esi_m > headline_pairs[i].esi_f;
        }
        stats::BootstrapSpec spec;
        spec.seed = config.seed;
        cell.flip_ci = stats::bootstrap_ci(
            headline_pairs.size(),
            [&](const std::vector<uint32_t>& idx) -> std::optional<double> {
              long flips = 0;
              for (uint32_t i : idx) flips += flip[i];
              return static_cast<double>(flips) / static_cast<double>(idx.size());
            },
            spec);
        cell.fm_ci = stats::bootstrap_ci(
            headline_pairs.size(),
            [&](const std::vector<uint32_t>& idx) -> std::optional<double> {
              long f = 0, m = 0;
              for (uint32_t i : idx) {
                f += f_side[i];
                m += m_side[i];
              }
              return fm_ratio_haldane(f, m);
            },
            spec);
        cell.profile = to_string(
            classify_profile(cell.metrics.flip, {cell.fm_ci->lo, cell.fm_ci->hi}));
      } else {
        cell.ci_note = "fewer than 2 joined pairs; intervals unavailable";
        cell.profile = "unclassified";
      }

      for (Variant ablation :
           {Variant::GenderOnly, Variant::NameOnly, Variant::AgePreservingBlind}) {
        bool present = false;
        for (const auto& r : cell_records) present |= r.variant == ablation;
        if (!present) continue;
        PairJoin aj = pair_join(cell_records, corpus, ablation);
        AblationReport ar;
        ar.contrast = to_string(ablation);
        ar.n_pairs = static_cast<long>(aj.pairs.size());
        ar.excluded = aj.excluded;
        ar.unpaired = aj.unpaired;
        if (!aj.pairs.empty()) ar.flip = flip_rate(aj.pairs);
        DirectionalCounts dc = directional_counts(aj.pairs);
        ar.f_ut = dc.f_ut;
        ar.m_ut = dc.m_ut;
        ar.fm = fm_ratio(dc.f_ut, dc.m_ut);
        cell.ablations.push_back(std::move(ar));
      }

      if (config.augmentation_mode && !headline_pairs.empty()) {
        std::vector<int> agg_preds, agg_truths;
        for (const auto& p : headline_pairs) {
          agg_preds.push_back(std::min(p.esi_f, p.esi_m));
          agg_truths.push_back(p.truth_esi);
        }
        cell.augmented = accuracy(agg_preds, agg_truths);
      }

      if (s == Strategy::Baseline) {
        auto& flips = baseline_flips[endpoint.id];
        for (const auto& p : headline_pairs)
          flips[p.pair_id] = p.esi_f != p.esi_m;
        baseline_direction[endpoint.id] = directional_counts(headline_pairs);
      }

      rep.cells.push_back(std::move(cell));
    }
  }

  // All pairwise Baseline comparisons: McNemar on the flip indicator and a
  // chi-square on the undertriage direction split, Bonferroni-corrected
  // across both families.
  std::vector<std::string> tested;
  for (const auto& e : config.endpoints)
    if (baseline_flips.count(e.id)) tested.push_back(e.id);
  int k = static_cast<int>(tested.size());
  rep.n_pairwise_tests = k * (k - 1);  // C(k,2) per family, two families
  rep.bonferroni_alpha =
      rep.n_pairwise_tests > 0 ? stats::bonferroni(0.05, rep.n_pairwise_tests) : 0;

  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const auto& fi = baseline_flips[tested[i]];
      const auto& fj = baseline_flips[tested[j]];
      long b = 0, c = 0;
      for (const auto& [pair_id, flipped_i] : fi) {
        auto it = fj.find(pair_id);
        if (it == fj.end()) continue;
        if (flipped_i && !it->second) ++b;
        if (!flipped_i && it->second) ++c;
      }
      PairwiseTest mc;
      mc.endpoint_a = tested[i];
      mc.endpoint_b = tested[j];
      mc.kind = "mcnemar_flip";
      if (b + c == 0) {
        mc.defined = true;
        mc.result.statistic = 0;
        mc.result.p = 1.0;
        mc.result.b = b;
        mc.result.c = c;
        mc.note = "no discordant pairs";
      } else {
        mc.defined = true;
        mc.result = stats::mcnemar(b, c, rep.bonferroni_alpha);
      }
      rep.pairwise.push_back(std::move(mc));

      PairwiseTest chi;
      chi.endpoint_a = tested[i];
      chi.endpoint_b = tested[j];
      chi.kind = "chi2_direction";
      DirectionalCounts di = baseline_direction[tested[i]];
      DirectionalCounts dj = baseline_direction[tested[j]];
      try {
        chi.result = stats::chi2_2x2(di.f_ut, di.m_ut, dj.f_ut, dj.m_ut,
                                     rep.bonferroni_alpha);
        chi.defined = true;
      } catch (const std::exception& e) {
        chi.defined = false;
        chi.note = e.what();
        chi.result.table = {di.f_ut, di.m_ut, dj.f_ut, dj.m_ut};
      }
      rep.pairwise.push_back(std::move(chi));
    }
  }

  return rep;
}

}  // namespace esiaudit
