#include "esiaudit/records.hpp"

#include <ctime>

#include "json.hpp"

namespace esiaudit {

std::string to_string(EvalStatus s) {
  switch (s) {
    case EvalStatus::Ok: return "ok";
    case EvalStatus::ParseFailure: return "parse_failure";
    case EvalStatus::PersistentFailure: return "persistent_failure";
  }
  return "ok";
}

EvalStatus eval_status_from_string(std::string_view s) {
  if (s == "ok") return EvalStatus::Ok;
  if (s == "parse_failure") return EvalStatus::ParseFailure;
  if (s == "persistent_failure") return EvalStatus::PersistentFailure;
  throw std::invalid_argument("unknown eval status: " + std::string(s));
}

std::string record_to_json(const EvalRecord& r) {
  nlohmann::json j;
  j["run_id"] = r.run_id;
  j["endpoint_id"] = r.endpoint_id;
  j["strategy"] = to_string(r.strategy);
  j["vignette_id"] = r.vignette_id;
  j["pair_id"] = r.pair_id;
  j["variant"] = to_string(r.variant);
  j["raw_response"] = r.raw_response;
  j["parsed_esi"] = r.parsed_esi ? nlohmann::json(*r.parsed_esi) : nlohmann::json();
  j["parse_rule"] = r.parse_rule
                        ? nlohmann::json(std::string(to_string(*r.parse_rule)))
                        : nlohmann::json();
  j["status"] = to_string(r.status);
  j["attempts"] = r.attempts;
  j["latency_ms"] = r.latency_ms;
  j["timestamp"] = r.timestamp;
  return j.dump();
}

EvalRecord record_from_json(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  EvalRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.endpoint_id = j.at("endpoint_id").get<std::string>();
  r.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  r.vignette_id = j.at("vignette_id").get<std::string>();
  r.pair_id = j.at("pair_id").get<std::string>();
  r.variant = variant_from_string(j.at("variant").get<std::string>());
  r.raw_response = j.at("raw_response").get<std::string>();
  if (!j.at("parsed_esi").is_null()) r.parsed_esi = j.at("parsed_esi").get<int>();
  if (!j.at("parse_rule").is_null())
    r.parse_rule = parse_rule_from_string(j.at("parse_rule").get<std::string>());
  r.status = eval_status_from_string(j.at("status").get<std::string>());
  r.attempts = j.at("attempts").get<int>();
  r.latency_ms = j.at("latency_ms").get<double>();
  r.timestamp = j.at("timestamp").get<std::string>();
  return r;
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RecordWriter::RecordWriter(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // A crash can leave a torn final line with no terminator. Appending straight
  // after it would merge the next record into the fragment and corrupt both,
  // so close the fragment off as its own (malformed, skipped) line first.
  std::error_code ec;
  if (std::filesystem::exists(path, ec) &&
      std::filesystem::file_size(path, ec) > 0) {
    std::ifstream probe(path, std::ios::binary);
    probe.seekg(-1, std::ios::end);
    char last = 0;
    if (probe.get(last) && last != '\n') {
      std::ofstream fix(path, std::ios::binary | std::ios::app);
      fix << '\n';
    }
  }
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw std::runtime_error("records: cannot open " + path.string());
}

void RecordWriter::append(const EvalRecord& r) {
  std::lock_guard<std::mutex> lock(mu_);
  out_ << record_to_json(r) << "\n";
  out_.flush();
  if (!out_) throw std::runtime_error("records: write failed on " + path_.string());
}

RecordLoad load_records(const std::filesystem::path& path) {
  RecordLoad out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::set<RecordKey> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      EvalRecord r = record_from_json(line);
      if (!seen.insert(record_key(r)).second) continue;
      out.records.push_back(std::move(r));
    } catch (const std::exception&) {
      ++out.malformed_lines;
    }
  }
  return out;
}

std::set<RecordKey> completed_keys(const std::vector<EvalRecord>& records) {
  std::set<RecordKey> keys;
  for (const auto& r : records) keys.insert(record_key(r));
  return keys;
}

}  // namespace esiaudit
