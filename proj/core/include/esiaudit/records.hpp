#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "esiaudit/parsing.hpp"
#include "esiaudit/strategy.hpp"
#include "esiaudit/vignette.hpp"

namespace esiaudit {

enum class EvalStatus { Ok, ParseFailure, PersistentFailure };

std::string to_string(EvalStatus s);
EvalStatus eval_status_from_string(std::string_view s);

// One evaluation of one vignette by one endpoint under one strategy. The raw
// response is kept verbatim whatever the status.
struct EvalRecord {
  std::string run_id;
  std::string endpoint_id;
  Strategy strategy = Strategy::Baseline;
  std::string vignette_id;
  std::string pair_id;
  Variant variant = Variant::Original;
  std::string raw_response;
  std::optional<int> parsed_esi;
  std::optional<ParseRule> parse_rule;
  EvalStatus status = EvalStatus::Ok;
  int attempts = 0;
  double latency_ms = 0;
  std::string timestamp;
};

// The resume and uniqueness key.
using RecordKey = std::tuple<std::string, std::string, std::string>;

inline RecordKey record_key(const EvalRecord& r) {
  return {r.endpoint_id, to_string(r.strategy), r.vignette_id};
}

std::string record_to_json(const EvalRecord& r);
EvalRecord record_from_json(const std::string& line);

std::string utc_timestamp();

// Append-only JSONL writer, one flush per record so a crash can lose at most
// the line being written.
class RecordWriter {
 public:
  explicit RecordWriter(const std::filesystem::path& path);

  void append(const EvalRecord& r);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
};

struct RecordLoad {
  std::vector<EvalRecord> records;
  long malformed_lines = 0;  // torn tails from interrupted runs
};

// Missing file reads as empty. Malformed lines (a torn tail after a crash)
// are counted and skipped, and later duplicates of a key are dropped.
RecordLoad load_records(const std::filesystem::path& path);

std::set<RecordKey> completed_keys(const std::vector<EvalRecord>& records);

}  // namespace esiaudit
