#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace esiaudit {

enum class ParseRule { AnchorLine, EsiProximity, LoneLevelWord };

std::string_view to_string(ParseRule r);
ParseRule parse_rule_from_string(std::string_view s);

struct ParseResult {
  int esi = 0;  // 1..5
  ParseRule rule = ParseRule::AnchorLine;
  size_t begin = 0;  // character offsets of the matched region
  size_t end = 0;
};

// Extracts the assigned ESI level from a free-text response. Rules are
// tried in priority order; within a rule the last match wins, since
// reasoning-style answers restate candidate levels and end with the final
// one. Returns nullopt when nothing matches (a ParseFailure for the caller
// to record; never retried here).
std::optional<ParseResult> parse_esi(std::string_view raw_text);

}  // namespace esiaudit
