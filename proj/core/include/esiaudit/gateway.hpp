#pragma once

#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "esiaudit/simulator.hpp"
#include "esiaudit/strategy.hpp"

namespace esiaudit {

enum class EndpointKind { HttpChat, Simulator };

std::string to_string(EndpointKind k);
EndpointKind endpoint_kind_from_string(std::string_view s);

struct ModelEndpoint {
  std::string id;
  EndpointKind kind = EndpointKind::Simulator;
  std::string base_url;     // HttpChat only; may carry a path prefix
  std::string model_name;   // HttpChat only
  std::string api_key_env;  // name of the env var holding the key, never the key
  double inter_request_delay = 0;  // seconds between request starts
  int max_in_flight = 4;
  SimProfile sim;  // Simulator only

  void check() const;  // throws on inconsistent fields
};

struct DecodeConfig {
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct RetryPolicy {
  int max_retries = 5;
  std::vector<double> backoff = {1, 2, 4, 8, 16};  // seconds, per retry
  int min_response_chars = 10;
};

struct CompletionResult {
  std::string raw_text;
  int attempts = 0;
  double latency_ms = 0;
};

// Wrong or rejected credentials. Never retried; carries the env var name,
// never the key itself.
struct AuthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every attempt failed. last_status is the final HTTP code, 0 for transport
// errors.
struct PersistentFailure : std::runtime_error {
  PersistentFailure(const std::string& what, int status, int attempts)
      : std::runtime_error(what), last_status(status), attempts(attempts) {}
  int last_status;
  int attempts;
};

// One gateway per endpoint: paces requests, bounds concurrency, retries on
// transport errors and empty or short responses, and never retries auth
// failures. Thread-safe; callers may invoke complete() from many threads.
class Gateway {
 public:
  explicit Gateway(ModelEndpoint endpoint, DecodeConfig decode = {},
                   RetryPolicy retry = {});
  ~Gateway();

  const ModelEndpoint& endpoint() const { return endpoint_; }
  const RetryPolicy& retry() const { return retry_; }

  // features speeds up the simulator path; the HTTP path ignores it.
  CompletionResult complete(const std::vector<Message>& messages,
                            const SimFeatures* features = nullptr);

  // Only valid for Simulator endpoints.
  Simulator& simulator();

  // Peak number of concurrently executing attempts, for concurrency tests.
  int peak_in_flight() const;

 private:
  std::string attempt(const std::vector<Message>& messages,
                      const SimFeatures* features, int& status,
                      std::string& error);
  void pace();
  void acquire_slot();
  void release_slot();

  ModelEndpoint endpoint_;
  DecodeConfig decode_;
  RetryPolicy retry_;
  std::unique_ptr<Simulator> sim_;
  std::string api_key_;  // held in memory only

  std::mutex mu_;
  std::condition_variable slot_free_;
  std::chrono::steady_clock::time_point next_start_;
  int in_flight_ = 0;
  int peak_in_flight_ = 0;
};

}  // namespace esiaudit
