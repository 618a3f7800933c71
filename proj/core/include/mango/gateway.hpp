#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <string_view>

namespace mango::llm {

struct CompletionRequest {
  std::string system_text;
  std::string user_text;
  double temperature = 1.0;
  bool structured_output = false;  // ask the provider for a JSON object
  std::uint32_t sample_index = 0;  // distinguishes repeated samples of one prompt

  friend bool operator==(const CompletionRequest&, const CompletionRequest&) = default;
};

// Throws std::invalid_argument on an empty user_text or temperature outside [0, 2].
void validate(const CompletionRequest& request);

// Digest over every field that affects the provider's answer, sample_index included.
std::string cache_key(const CompletionRequest& request, std::string_view model_id);

struct TokenUsage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
};

struct CompletionResult {
  std::string text;
  std::optional<TokenUsage> usage;  // provider-reported; estimated when absent
};

// A live chat-completion provider. Implementations throw TransientError for retryable
// failures and any other mango::Error for permanent ones.
class ChatBackend {
public:
  virtual ~ChatBackend() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

struct RateLimits {
  std::uint64_t input_tokens_per_minute = 1'000'000;
  std::uint64_t requests_per_minute = 10'000;
};

struct Prices {
  double input_per_token = 0.0;
  double output_per_token = 0.0;
};

struct UsageLedger {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  std::uint64_t requests = 0;    // live requests sent, retries included
  std::uint64_t cache_hits = 0;  // answered from the record/replay store
  double estimated_cost = 0.0;   // prompt_tokens * input price + completion_tokens * output price
};

// ---------------------------------------------------------------------------------------------
// Time source, injectable so admission and backoff are testable without sleeping.

using Duration = std::chrono::nanoseconds;

class Clock {
public:
  virtual ~Clock() = default;
  virtual Duration now() = 0;
  virtual void sleep_for(Duration d) = 0;
};

class SystemClock final : public Clock {
public:
  Duration now() override;
  void sleep_for(Duration d) override;
};

// Sleeping advances the clock instantly.
class SimulatedClock final : public Clock {
public:
  Duration now() override;
  void sleep_for(Duration d) override;
  void advance(Duration d) { sleep_for(d); }
  Duration total_slept() const;

private:
  mutable std::mutex mu_;
  Duration now_{0};
  Duration slept_{0};
};

// Approximate token count used for admission; default is ceil(bytes / 4).
using TokenEstimator = std::function<std::uint64_t(std::string_view)>;
std::uint64_t estimate_tokens_chars_div4(std::string_view text);

// Sliding-window admission: within any 60 s window, at most requests_per_minute requests and
// input_tokens_per_minute estimated input tokens are admitted.
class AdmissionController {
public:
  AdmissionController(RateLimits limits, std::shared_ptr<Clock> clock);

  // Blocks (via the clock) until the request fits. Throws mango::Error if `tokens` alone
  // exceeds the per-minute token budget.
  void admit(std::uint64_t tokens);

  const RateLimits& limits() const noexcept { return limits_; }

  static constexpr Duration kWindow = std::chrono::seconds(60);

private:
  struct Entry {
    Duration at;
    std::uint64_t tokens;
  };

  RateLimits limits_;
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  std::deque<Entry> window_;
  std::uint64_t window_tokens_ = 0;
};

// ---------------------------------------------------------------------------------------------

enum class StoreMode { kRecord, kReplay };

// Directory of key -> response files, one file per key, response stored verbatim.
class RecordReplayStore {
public:
  RecordReplayStore(std::filesystem::path dir, StoreMode mode);

  StoreMode mode() const noexcept { return mode_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

  std::optional<std::string> lookup(const std::string& key) const;
  // Throws CacheMissError when the key is absent.
  std::string get(const std::string& key) const;
  // Throws mango::Error in replay mode.
  void put(const std::string& key, std::string_view value);

  std::filesystem::path path_for(const std::string& key) const;

private:
  std::filesystem::path dir_;
  StoreMode mode_;
  mutable std::shared_mutex mu_;
};

struct RetryPolicy {
  int max_attempts = 6;
  Duration base_delay = std::chrono::seconds(1);
  Duration max_delay = std::chrono::seconds(60);
};

// Jittered exponential delay before retry number `attempt` (0-based): the nominal delay
// min(max_delay, base_delay * 2^attempt) scaled by a factor drawn from [0.5, 1].
Duration backoff_delay(const RetryPolicy& policy, int attempt, std::mt19937_64& rng);

enum class GatewayMode {
  kLive,    // provider only
  kRecord,  // store first, then provider; responses are stored
  kReplay,  // store only; a miss is an error
};

struct GatewayOptions {
  GatewayMode mode = GatewayMode::kReplay;
  std::string model_id;
  RateLimits limits;
  RetryPolicy retry;
  Prices prices;
  TokenEstimator estimator = estimate_tokens_chars_div4;
  std::uint64_t jitter_seed = 0;
};

// Entry point for every chat-completion call. Safe for concurrent callers.
class Gateway {
public:
  Gateway(GatewayOptions options, std::shared_ptr<ChatBackend> backend,
          std::shared_ptr<RecordReplayStore> store,
          std::shared_ptr<Clock> clock = std::make_shared<SystemClock>());

  std::string complete(const CompletionRequest& request);

  UsageLedger ledger() const;
  const GatewayOptions& options() const noexcept { return options_; }

private:
  std::string call_live(const CompletionRequest& request);

  GatewayOptions options_;
  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<RecordReplayStore> store_;
  std::shared_ptr<Clock> clock_;
  AdmissionController admission_;

  mutable std::mutex ledger_mu_;
  UsageLedger ledger_;
  std::mt19937_64 jitter_rng_;
};

// ---------------------------------------------------------------------------------------------
// OpenAI-compatible HTTP chat-completions backend.

struct HttpBackendConfig {
  std::string endpoint;  // full URL, e.g. https://api.openai.com/v1/chat/completions
  std::string model;
  std::string api_key;
  std::chrono::seconds timeout{120};
};

class HttpChatBackend final : public ChatBackend {
public:
  explicit HttpChatBackend(HttpBackendConfig config);
  CompletionResult complete(const CompletionRequest& request) override;

private:
  HttpBackendConfig config_;
};

// Splits "https://host:port/path" into ("https://host:port", "/path").
std::pair<std::string, std::string> split_url(std::string_view url);

}  // namespace mango::llm
