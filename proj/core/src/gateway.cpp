#include "esiaudit/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace esiaudit {

namespace {

// Splits "http://host:port/prefix" into the client target and the path
// prefix, with any trailing slash dropped from the prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
  size_t scheme_end = url.find("://");
  size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  size_t slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

bool is_https(const std::string& url) { return url.rfind("https://", 0) == 0; }

}  // namespace

std::string to_string(EndpointKind k) {
  return k == EndpointKind::HttpChat ? "http_chat" : "simulator";
}

EndpointKind endpoint_kind_from_string(std::string_view s) {
  if (s == "http_chat") return EndpointKind::HttpChat;
  if (s == "simulator") return EndpointKind::Simulator;
  throw std::invalid_argument("unknown endpoint kind: " + std::string(s));
}

void ModelEndpoint::check() const {
  if (id.empty()) throw std::invalid_argument("endpoint: id required");
  if (max_in_flight < 1)
    throw std::invalid_argument("endpoint " + id + ": max_in_flight must be >= 1");
  if (inter_request_delay < 0)
    throw std::invalid_argument("endpoint " + id +
                                ": inter_request_delay must be >= 0");
  if (kind == EndpointKind::HttpChat) {
    if (base_url.empty() || model_name.empty())
      throw std::invalid_argument("endpoint " + id +
                                  ": http_chat requires base_url and model_name");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (is_https(base_url))
      throw std::invalid_argument("endpoint " + id +
                                  ": https requires a TLS-enabled build");
#endif
  } else {
    sim.check();
  }
}

Gateway::Gateway(ModelEndpoint endpoint, DecodeConfig decode, RetryPolicy retry)
    : endpoint_(std::move(endpoint)),
      decode_(decode),
      retry_(retry),
      next_start_(std::chrono::steady_clock::now()) {
  endpoint_.check();
  if (retry_.max_retries < 0)
    throw std::invalid_argument("retry policy: max_retries must be >= 0");
  if (retry_.max_retries > 0 && retry_.backoff.empty())
    throw std::invalid_argument("retry policy: backoff schedule required");
  if (endpoint_.kind == EndpointKind::Simulator) {
    sim_ = std::make_unique<Simulator>(endpoint_.sim);
  } else if (!endpoint_.api_key_env.empty()) {
    const char* key = std::getenv(endpoint_.api_key_env.c_str());
    if (!key || !*key)
      throw AuthError("endpoint " + endpoint_.id + ": environment variable " +
                      endpoint_.api_key_env + " is not set");
    api_key_ = key;
  }
}

Gateway::~Gateway() = default;

Simulator& Gateway::simulator() {
  if (!sim_)
    throw std::logic_error("endpoint " + endpoint_.id + " is not a simulator");
  return *sim_;
}

int Gateway::peak_in_flight() const {
  return peak_in_flight_;
}

void Gateway::acquire_slot() {
  std::unique_lock<std::mutex> lock(mu_);
  slot_free_.wait(lock, [&] { return in_flight_ < endpoint_.max_in_flight; });
  ++in_flight_;
  peak_in_flight_ = std::max(peak_in_flight_, in_flight_);
}

void Gateway::release_slot() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    --in_flight_;
  }
  slot_free_.notify_one();
}

void Gateway::pace() {
  if (endpoint_.inter_request_delay <= 0) return;
  std::chrono::steady_clock::time_point start;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto now = std::chrono::steady_clock::now();
    start = std::max(now, next_start_);
    next_start_ = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(endpoint_.inter_request_delay));
  }
  std::this_thread::sleep_until(start);
}

std::string Gateway::attempt(const std::vector<Message>& messages,
                             const SimFeatures* features, int& status,
                             std::string& error) {
  if (endpoint_.kind == EndpointKind::Simulator) {
    status = 200;
    error.clear();
    return sim_->complete(messages, features);
  }

  auto [target, prefix] = split_url(endpoint_.base_url);
  httplib::Client client(target);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(180, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  nlohmann::json body;
  body["model"] = endpoint_.model_name;
  auto& msgs = body["messages"] = nlohmann::json::array();
  for (const auto& m : messages)
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  body["temperature"] = decode_.temperature;
  body["max_tokens"] = decode_.max_tokens;

  auto res = client.Post(prefix + "/chat/completions", headers, body.dump(),
                         "application/json");
  if (!res) {
    status = 0;
    error = "transport error: " + httplib::to_string(res.error());
    return {};
  }
  status = res->status;
  if (status == 401 || status == 403)
    throw AuthError("endpoint " + endpoint_.id + ": authentication failed (HTTP " +
                    std::to_string(status) + "); check environment variable " +
                    endpoint_.api_key_env);
  if (status != 200) {
    error = "HTTP " + std::to_string(status);
    return {};
  }
  try {
    nlohmann::json reply = nlohmann::json::parse(res->body);
    std::string text =
        reply.at("choices").at(0).at("message").at("content").get<std::string>();
    error.clear();
    return text;
  } catch (const nlohmann::json::exception& e) {
    error = std::string("malformed completion body: ") + e.what();
    return {};
  }
}

CompletionResult Gateway::complete(const std::vector<Message>& messages,
                                   const SimFeatures* features) {
  auto t0 = std::chrono::steady_clock::now();
  acquire_slot();
  struct SlotGuard {
    Gateway* g;
    ~SlotGuard() { g->release_slot(); }
  } guard{this};

  int last_status = 0;
  std::string last_error = "no attempts made";
  int max_attempts = retry_.max_retries + 1;
  for (int a = 1; a <= max_attempts; ++a) {
    if (a > 1) {
      size_t idx = std::min<size_t>(a - 2, retry_.backoff.size() - 1);
      std::this_thread::sleep_for(
          std::chrono::duration<double>(retry_.backoff[idx]));
    }
    pace();
    int status = 0;
    std::string error;
    std::string text = attempt(messages, features, status, error);
    last_status = status;
    if (error.empty() &&
        text.size() >= static_cast<size_t>(retry_.min_response_chars)) {
      auto dt = std::chrono::steady_clock::now() - t0;
      return {std::move(text), a,
              std::chrono::duration<double, std::milli>(dt).count()};
    }
    last_error = error.empty()
                     ? "response shorter than " +
                           std::to_string(retry_.min_response_chars) + " chars"
                     : error;
  }
  throw PersistentFailure("endpoint " + endpoint_.id + ": all " +
                              std::to_string(max_attempts) +
                              " attempts failed; last: " + last_error,
                          last_status, max_attempts);
}

}  // namespace esiaudit
