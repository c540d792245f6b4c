#include "esiaudit/parsing.hpp"

#include <cctype>
#include <stdexcept>

namespace esiaudit {

std::string_view to_string(ParseRule r) {
  switch (r) {
    case ParseRule::AnchorLine: return "anchor_line";
    case ParseRule::EsiProximity: return "esi_proximity";
    case ParseRule::LoneLevelWord: return "lone_level_word";
  }
  return "anchor_line";
}

ParseRule parse_rule_from_string(std::string_view s) {
  if (s == "anchor_line") return ParseRule::AnchorLine;
  if (s == "esi_proximity") return ParseRule::EsiProximity;
  if (s == "lone_level_word") return ParseRule::LoneLevelWord;
  throw std::invalid_argument("unknown parse rule: " + std::string(s));
}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_level_digit(char c) { return c >= '1' && c <= '5'; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool left_boundary(std::string_view s, size_t pos) {
  return pos == 0 || !is_alnum(s[pos - 1]);
}

// Consumes optional ": [" style decoration between an anchor word and its
// digit: whitespace, one optional colon, more whitespace, one optional
// opening bracket/asterisk, more whitespace.
size_t skip_decoration(std::string_view s, size_t i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  if (i < s.size() && s[i] == ':') ++i;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  if (i < s.size() && (s[i] == '[' || s[i] == '(' || s[i] == '*')) ++i;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return i;
}

// Single digit 1-5 at i, not the start of a longer number.
bool lone_level_digit(std::string_view s, size_t i) {
  if (i >= s.size() || !is_level_digit(s[i])) return false;
  if (i + 1 < s.size() && is_digit(s[i + 1])) return false;
  return true;
}

}  // namespace

std::optional<ParseResult> parse_esi(std::string_view raw_text) {
  if (raw_text.empty()) return std::nullopt;
  std::string text = lowercase(raw_text);
  std::optional<ParseResult> best;

  // Rule 1: "ESI Level: N" / "ESI Level N" anchors; last one wins.
  for (size_t pos = text.find("esi level"); pos != std::string::npos;
       pos = text.find("esi level", pos + 1)) {
    if (!left_boundary(text, pos)) continue;
    size_t i = skip_decoration(text, pos + 9);
    if (lone_level_digit(text, i))
      best = ParseResult{text[i] - '0', ParseRule::AnchorLine, pos, i + 1};
  }
  if (best) return best;

  // Rule 2: "ESI" as a word followed within 20 characters by a digit 1-5.
  // Digits outside 1-5 never match and are scanned past.
  for (size_t pos = text.find("esi"); pos != std::string::npos;
       pos = text.find("esi", pos + 1)) {
    if (!left_boundary(text, pos)) continue;
    if (pos + 3 < text.size() && is_alnum(text[pos + 3])) continue;
    size_t limit = std::min(text.size(), pos + 3 + 20);
    for (size_t i = pos + 3; i < limit; ++i) {
      if (is_level_digit(text[i])) {
        best = ParseResult{text[i] - '0', ParseRule::EsiProximity, pos, i + 1};
        break;
      }
    }
  }
  if (best) return best;

  // Rule 3: a bare "Level N", only when the text talks about triage or ESI
  // somewhere.
  if (text.find("triage") == std::string::npos && text.find("esi") == std::string::npos)
    return std::nullopt;
  for (size_t pos = text.find("level"); pos != std::string::npos;
       pos = text.find("level", pos + 1)) {
    if (!left_boundary(text, pos)) continue;
    if (pos + 5 < text.size() && is_alnum(text[pos + 5])) continue;
    size_t i = skip_decoration(text, pos + 5);
    if (lone_level_digit(text, i))
      best = ParseResult{text[i] - '0', ParseRule::LoneLevelWord, pos, i + 1};
  }
  return best;
}

}  // namespace esiaudit
