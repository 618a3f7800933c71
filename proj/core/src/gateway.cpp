#include "mango/gateway.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "mango/errors.hpp"
#include "mango/io.hpp"
#include "mango/text.hpp"

namespace mango::llm {

namespace fs = std::filesystem;

void validate(const CompletionRequest& request) {
  if (request.user_text.empty()) throw std::invalid_argument("completion request has empty user_text");
  if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
    throw std::invalid_argument("completion temperature must lie in [0, 2]");
  }
}

namespace {

void append_field(std::string& buf, std::string_view name, std::string_view value) {
  buf += name;
  buf += '=';
  buf += std::to_string(value.size());
  buf += ':';
  buf += value;
  buf += '\n';
}

std::string shortest_double(double v) {
  std::array<char, 64> tmp{};
  auto [end, ec] = std::to_chars(tmp.data(), tmp.data() + tmp.size(), v);
  return std::string(tmp.data(), end);
}

}  // namespace

std::string cache_key(const CompletionRequest& request, std::string_view model_id) {
  std::string buf = "mango-completion-v1\n";
  append_field(buf, "model", model_id);
  append_field(buf, "system", request.system_text);
  append_field(buf, "user", request.user_text);
  append_field(buf, "temperature", shortest_double(request.temperature));
  append_field(buf, "structured", request.structured_output ? "1" : "0");
  append_field(buf, "sample", std::to_string(request.sample_index));
  return text::sha256_hex(buf);
}

// ---------------------------------------------------------------------------------------------

Duration SystemClock::now() {
  return std::chrono::duration_cast<Duration>(
      std::chrono::steady_clock::now().time_since_epoch());
}

void SystemClock::sleep_for(Duration d) {
  if (d > Duration::zero()) std::this_thread::sleep_for(d);
}

Duration SimulatedClock::now() {
  std::lock_guard lock(mu_);
  return now_;
}

void SimulatedClock::sleep_for(Duration d) {
  if (d <= Duration::zero()) return;
  std::lock_guard lock(mu_);
  now_ += d;
  slept_ += d;
}

Duration SimulatedClock::total_slept() const {
  std::lock_guard lock(mu_);
  return slept_;
}

std::uint64_t estimate_tokens_chars_div4(std::string_view text) {
  return (text.size() + 3) / 4;
}

// ---------------------------------------------------------------------------------------------

AdmissionController::AdmissionController(RateLimits limits, std::shared_ptr<Clock> clock)
    : limits_(limits), clock_(std::move(clock)) {
  if (limits_.input_tokens_per_minute == 0 || limits_.requests_per_minute == 0) {
    throw std::invalid_argument("rate limits must be positive");
  }
}

void AdmissionController::admit(std::uint64_t tokens) {
  if (tokens > limits_.input_tokens_per_minute) {
    throw Error("request of " + std::to_string(tokens) +
                " estimated tokens exceeds input_tokens_per_minute");
  }
  while (true) {
    Duration wait{};
    {
      std::lock_guard lock(mu_);
      const Duration now = clock_->now();
      while (!window_.empty() && window_.front().at + kWindow <= now) {
        window_tokens_ -= window_.front().tokens;
        window_.pop_front();
      }
      const bool requests_ok = window_.size() + 1 <= limits_.requests_per_minute;
      const bool tokens_ok = window_tokens_ + tokens <= limits_.input_tokens_per_minute;
      if (requests_ok && tokens_ok) {
        window_.push_back({now, tokens});
        window_tokens_ += tokens;
        return;
      }
      // Earliest instant at which enough old entries have expired.
      std::uint64_t freed_tokens = 0;
      std::size_t freed_requests = 0;
      for (const auto& e : window_) {
        freed_tokens += e.tokens;
        ++freed_requests;
        const bool r_ok = window_.size() - freed_requests + 1 <= limits_.requests_per_minute;
        const bool t_ok = window_tokens_ - freed_tokens + tokens <= limits_.input_tokens_per_minute;
        if (r_ok && t_ok) {
          wait = e.at + kWindow - now;
          break;
        }
      }
    }
    clock_->sleep_for(std::max(wait, Duration(1)));
  }
}

// ---------------------------------------------------------------------------------------------

RecordReplayStore::RecordReplayStore(fs::path dir, StoreMode mode)
    : dir_(std::move(dir)), mode_(mode) {
  if (mode_ == StoreMode::kRecord) {
    fs::create_directories(dir_);
  } else if (!fs::is_directory(dir_)) {
    throw Error("replay cache directory does not exist: " + dir_.string());
  }
}

fs::path RecordReplayStore::path_for(const std::string& key) const {
  if (key.empty() || key.find_first_of("/\\.") != std::string::npos) {
    throw std::invalid_argument("invalid cache key: " + key);
  }
  return dir_ / (key + ".txt");
}

std::optional<std::string> RecordReplayStore::lookup(const std::string& key) const {
  const fs::path p = path_for(key);
  std::shared_lock lock(mu_);
  if (!fs::exists(p)) return std::nullopt;
  return io::read_file(p);
}

std::string RecordReplayStore::get(const std::string& key) const {
  auto value = lookup(key);
  if (!value) throw CacheMissError(key);
  return *std::move(value);
}

void RecordReplayStore::put(const std::string& key, std::string_view value) {
  if (mode_ == StoreMode::kReplay) throw Error("cannot write to a replay-mode cache");
  const fs::path p = path_for(key);
  std::unique_lock lock(mu_);
  io::write_file_atomic(p, value);
}

// ---------------------------------------------------------------------------------------------

Duration backoff_delay(const RetryPolicy& policy, int attempt, std::mt19937_64& rng) {
  using Sec = std::chrono::duration<double>;
  const double base = std::chrono::duration_cast<Sec>(policy.base_delay).count();
  const double cap = std::chrono::duration_cast<Sec>(policy.max_delay).count();
  const double nominal = std::min(cap, base * std::ldexp(1.0, std::min(attempt, 62)));
  std::uniform_real_distribution<double> jitter(0.5, 1.0);
  return std::chrono::duration_cast<Duration>(Sec(nominal * jitter(rng)));
}

Gateway::Gateway(GatewayOptions options, std::shared_ptr<ChatBackend> backend,
                 std::shared_ptr<RecordReplayStore> store, std::shared_ptr<Clock> clock)
    : options_(std::move(options)),
      backend_(std::move(backend)),
      store_(std::move(store)),
      clock_(std::move(clock)),
      admission_(options_.limits, clock_),
      jitter_rng_(options_.jitter_seed) {
  if (options_.retry.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (!options_.estimator) options_.estimator = estimate_tokens_chars_div4;
  switch (options_.mode) {
    case GatewayMode::kLive:
      if (!backend_) throw std::invalid_argument("live gateway needs a backend");
      break;
    case GatewayMode::kRecord:
      if (!backend_ || !store_) throw std::invalid_argument("record gateway needs backend and store");
      if (store_->mode() != StoreMode::kRecord) {
        throw std::invalid_argument("record gateway needs a record-mode store");
      }
      break;
    case GatewayMode::kReplay:
      if (!store_) throw std::invalid_argument("replay gateway needs a store");
      break;
  }
}

std::string Gateway::complete(const CompletionRequest& request) {
  validate(request);
  if (options_.mode == GatewayMode::kLive) return call_live(request);

  const std::string key = cache_key(request, options_.model_id);
  if (auto cached = store_->lookup(key)) {
    std::lock_guard lock(ledger_mu_);
    ++ledger_.cache_hits;
    return *std::move(cached);
  }
  if (options_.mode == GatewayMode::kReplay) throw CacheMissError(key);

  std::string text = call_live(request);
  store_->put(key, text);
  return text;
}

std::string Gateway::call_live(const CompletionRequest& request) {
  const std::uint64_t input_tokens =
      options_.estimator(request.system_text) + options_.estimator(request.user_text);
  for (int attempt = 0;; ++attempt) {
    admission_.admit(input_tokens);
    {
      std::lock_guard lock(ledger_mu_);
      ++ledger_.requests;
    }
    try {
      CompletionResult result = backend_->complete(request);
      const TokenUsage usage = result.usage.value_or(
          TokenUsage{input_tokens, options_.estimator(result.text)});
      std::lock_guard lock(ledger_mu_);
      ledger_.prompt_tokens += usage.prompt_tokens;
      ledger_.completion_tokens += usage.completion_tokens;
      return std::move(result.text);
    } catch (const TransientError& e) {
      if (attempt + 1 >= options_.retry.max_attempts) {
        throw TransportError("provider failed after " + std::to_string(attempt + 1) +
                             " attempts: " + e.what());
      }
      Duration delay;
      {
        std::lock_guard lock(ledger_mu_);
        delay = backoff_delay(options_.retry, attempt, jitter_rng_);
      }
      clock_->sleep_for(delay);
    }
  }
}

UsageLedger Gateway::ledger() const {
  std::lock_guard lock(ledger_mu_);
  UsageLedger l = ledger_;
  l.estimated_cost = static_cast<double>(l.prompt_tokens) * options_.prices.input_per_token +
                     static_cast<double>(l.completion_tokens) * options_.prices.output_per_token;
  return l;
}

}  // namespace mango::llm
