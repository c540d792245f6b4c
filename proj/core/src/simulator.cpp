#include "esiaudit/simulator.hpp"

#include <cstdio>
#include <stdexcept>
#include <thread>

#include "esiaudit/rng.hpp"
#include "httplib.h"
#include "json.hpp"

namespace esiaudit {

namespace {

// Key indices for the per-content draw chain. Fixed so a draw never depends
// on how many draws came before it.
constexpr uint64_t kBaseDeviate = 1;
constexpr uint64_t kBaseDirection = 2;
constexpr uint64_t kFlip = 3;
constexpr uint64_t kFlipDirection = 4;
constexpr uint64_t kNoise = 5;
constexpr uint64_t kNoiseDirection = 6;

int reflect_step(int level, int step) {
  int next = level + step;
  if (next < 1 || next > kEsiLevels) next = level - step;
  return next;
}

void check_prob(double p, const char* name) {
  if (p < 0 || p > 1)
    throw std::invalid_argument(std::string("sim profile: ") + name +
                                " must be in [0,1]");
}

std::string format_response(int level) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "ESI Level: %d - rationale stub", level);
  return buf;
}

}  // namespace

void SimProfile::check() const {
  check_prob(p_flip, "p_flip");
  check_prob(fm_skew, "fm_skew");
  check_prob(base_error, "base_error");
  check_prob(noise_rate, "noise_rate");
  if (degenerate_level && (*degenerate_level < 1 || *degenerate_level > kEsiLevels))
    throw std::invalid_argument("sim profile: degenerate_level must be in 1..5");
}

SimFeatures features_for(const Vignette& v, Strategy s) {
  SimFeatures f;
  f.content_hash = clinical_hash(v.clinical);
  f.strategy_key = fnv1a64(system_prompt(s));
  f.gender = v.gender;
  f.truth_esi = v.ground_truth_esi;
  return f;
}

Simulator::Simulator(SimProfile profile) : profile_(profile) { profile_.check(); }

void Simulator::attach_corpus(const std::vector<Vignette>& corpus, Strategy s) {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& v : corpus) by_text_[v.text] = features_for(v, s);
}

SimFeatures Simulator::derive_features(const std::vector<Message>& messages) const {
  uint64_t strategy_key =
      messages.empty() ? 0 : fnv1a64(messages.front().content);
  const std::string& user = messages.empty() ? std::string() : messages.back().content;

  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = by_text_.find(user);
    if (it != by_text_.end()) {
      SimFeatures f = it->second;
      f.strategy_key = strategy_key;
      return f;
    }
  }

  SimFeatures f;
  f.strategy_key = strategy_key;
  if (user.find("-year-old female") != std::string::npos)
    f.gender = Gender::F;
  else if (user.find("-year-old male") != std::string::npos)
    f.gender = Gender::M;

  // Canonical clinical content: drop the patient line, then neutralize what
  // remains so both sides of a pair hash the same way.
  std::string body = user;
  if (body.rfind("Patient: ", 0) == 0) {
    size_t eol = body.find('\n');
    body = eol == std::string::npos ? std::string() : body.substr(eol + 1);
  }
  f.content_hash = fnv1a64(neutralize_pronouns(body));
  f.truth_esi = 1 + static_cast<int>(mix64(f.content_hash, 0) % kEsiLevels);
  return f;
}

int Simulator::level_for(const SimFeatures& f) const {
  if (profile_.degenerate_level) return *profile_.degenerate_level;

  uint64_t key = mix64(f.content_hash, f.strategy_key);
  int level = f.truth_esi;
  if (unit_draw(profile_.seed, key, kBaseDeviate) < profile_.base_error) {
    int step = unit_draw(profile_.seed, key, kBaseDirection) < 0.5 ? -1 : 1;
    level = reflect_step(level, step);
  }

  if (f.gender && unit_draw(profile_.seed, key, kFlip) < profile_.p_flip) {
    bool female_under =
        unit_draw(profile_.seed, key, kFlipDirection) < profile_.fm_skew;
    Gender undertriaged = female_under ? Gender::F : Gender::M;
    // The undertriaged side sits one level above the base; at the ceiling
    // the pair shifts down instead so the two still differ by one.
    if (level == kEsiLevels)
      return *f.gender == undertriaged ? level : level - 1;
    return *f.gender == undertriaged ? level + 1 : level;
  }
  return level;
}

std::string Simulator::complete(const std::vector<Message>& messages,
                                const SimFeatures* features) {
  SimFeatures f = features ? *features : derive_features(messages);
  int level = level_for(f);

  uint64_t input_key = 0;
  for (const auto& m : messages)
    input_key = mix64(input_key, mix64(fnv1a64(m.role), fnv1a64(m.content)));

  uint64_t call;
  {
    std::lock_guard<std::mutex> lock(mu_);
    call = calls_[input_key]++;
  }
  if (call > 0 && profile_.noise_rate > 0) {
    uint64_t key = mix64(input_key, call);
    if (unit_draw(profile_.seed, key, kNoise) < profile_.noise_rate) {
      int step = unit_draw(profile_.seed, key, kNoiseDirection) < 0.5 ? -1 : 1;
      level = reflect_step(level, step);
    }
  }
  return format_response(level);
}

struct SimulatorServer::Impl {
  explicit Impl(SimProfile profile) : sim(profile) {}

  Simulator sim;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  void handle(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      res.set_content(R"({"error":"malformed JSON body"})", "application/json");
      return;
    }
    std::vector<Message> messages;
    for (const auto& m : body.value("messages", nlohmann::json::array()))
      messages.push_back(
          {m.value("role", std::string()), m.value("content", std::string())});
    if (messages.empty()) {
      res.status = 400;
      res.set_content(R"({"error":"messages required"})", "application/json");
      return;
    }
    std::string text = sim.complete(messages);
    nlohmann::json reply{
        {"model", body.value("model", "esiaudit-sim")},
        {"choices",
         {{{"index", 0},
           {"message", {{"role", "assistant"}, {"content", text}}},
           {"finish_reason", "stop"}}}},
    };
    res.set_content(reply.dump(), "application/json");
  }
};

SimulatorServer::SimulatorServer(SimProfile profile)
    : impl_(std::make_unique<Impl>(profile)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    impl_->handle(req, res);
  };
  impl_->server.Post("/chat/completions", handler);
  impl_->server.Post("/v1/chat/completions", handler);
}

SimulatorServer::~SimulatorServer() { stop(); }

Simulator& SimulatorServer::simulator() { return impl_->sim; }

int SimulatorServer::start(const std::string& host) {
  impl_->port = impl_->server.bind_to_any_port(host);
  if (impl_->port <= 0)
    throw std::runtime_error("simulator server: cannot bind on " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void SimulatorServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace esiaudit
