#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "esiaudit/vignette.hpp"

namespace esiaudit {

enum class Strategy { Baseline, CoT, Debiased, Blind };

inline constexpr std::array<Strategy, 4> kAllStrategies = {
    Strategy::Baseline, Strategy::CoT, Strategy::Debiased, Strategy::Blind};

std::string to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

// The three independent prompt features; the four named strategies are the
// cells of this space that ship by default.
struct StrategyFlags {
  bool has_demographics;
  bool has_fairness_instruction;
  bool has_cot;
};

StrategyFlags strategy_flags(Strategy s);

// Byte-stable system prompt for the strategy. Blind shares the Baseline text;
// its whole effect lives in the vignette preprocessing.
const std::string& system_prompt(Strategy s);

struct Message {
  std::string role;
  std::string content;
};

// [(system, prompt), (user, vignette text)]. The Blind strategy only accepts
// blind-transformed vignettes; anything else is a caller bug.
std::vector<Message> build_prompt(Strategy s, const Vignette& v);

}  // namespace esiaudit
