#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "esiaudit/strategy.hpp"
#include "esiaudit/types.hpp"
#include "esiaudit/vignette.hpp"

namespace esiaudit {

// Generative knobs for the built-in biased model. Everything is a pure
// function of (seed, input) unless noise_rate is set, in which case repeat
// calls with identical input disagree with exactly that probability.
struct SimProfile {
  uint64_t seed = 0;
  double p_flip = 0;      // probability a gender-swapped pair disagrees
  double fm_skew = 0.5;   // P(flip goes in the female-undertriage direction)
  double base_error = 0;  // P(base level deviates one step from ground truth)
  double noise_rate = 0;  // P(a repeat of an identical input differs)
  std::optional<int> degenerate_level;  // always emit this level when set

  void check() const;  // throws on out-of-range values
};

// What the simulator actually conditions on. The flip draw keys off
// (content_hash, strategy_key) only, so both sides of a pair see the same
// flip decision no matter which is evaluated first.
struct SimFeatures {
  uint64_t content_hash = 0;
  uint64_t strategy_key = 0;  // hash of the system prompt text
  std::optional<Gender> gender;
  int truth_esi = 3;
};

SimFeatures features_for(const Vignette& v, Strategy s);

class Simulator {
 public:
  explicit Simulator(SimProfile profile);

  const SimProfile& profile() const { return profile_; }

  // Maps rendered user text back to exact corpus features so the served
  // endpoint behaves identically to the in-process path.
  void attach_corpus(const std::vector<Vignette>& corpus, Strategy s);

  // Best-effort feature recovery from raw messages: strategy from the system
  // text, gender from the patient line, content from the neutralized
  // clinical lines. Exact when the corpus index has the text.
  SimFeatures derive_features(const std::vector<Message>& messages) const;

  // Deterministic ESI level before retest noise.
  int level_for(const SimFeatures& f) const;

  // Full response text; applies retest noise via a per-input call counter.
  std::string complete(const std::vector<Message>& messages,
                       const SimFeatures* features = nullptr);

 private:
  SimProfile profile_;
  std::unordered_map<std::string, SimFeatures> by_text_;
  std::unordered_map<uint64_t, uint64_t> calls_;
  mutable std::mutex mu_;
};

// The simulator behind the same wire protocol real backends speak, so
// external tooling can audit it. Serves POST /chat/completions and
// /v1/chat/completions.
class SimulatorServer {
 public:
  explicit SimulatorServer(SimProfile profile);
  ~SimulatorServer();

  Simulator& simulator();

  // Binds to an ephemeral port on host and serves on a background thread.
  // Returns the bound port.
  int start(const std::string& host);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace esiaudit
