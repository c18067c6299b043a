#pragma once

// Client over completion-style backends: batching, per-language max-token
// policy, stop handling, over-generation truncation, retry, rate limiting,
// and a deterministic mock backend.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "amt/domain.hpp"
#include "amt/prompts.hpp"

namespace amt {

// Default sampling for translation prompts (top_p 1, temperature 0.3,
// newline stop) and for term extraction (temperature 0, no stop).
SamplingParams translation_params();
SamplingParams extraction_params();

struct TokenPolicy {
  std::map<std::string, int> multiplier_by_lang{{"ar", 8}, {"zh", 5}, {"rw", 5}, {"fr", 4}, {"es", 4}};
  int default_multiplier = 4;
  int floor = 16;

  int multiplier(const LangCode& lang) const;
  void validate() const;
};

TokenPolicy load_token_policy(const nlohmann::json& j);

// max over the batch of word_count(segment) * multiplier(tgt_lang), at
// least policy.floor. Throws EmptyBatch.
int max_tokens_for(const std::vector<std::string>& batch, const LangCode& tgt_lang,
                   const TokenPolicy& policy = {});

enum class TruncateMode { FirstLine, None };

// FirstLine keeps the text before the first newline, trimmed. A completion
// starting with a newline therefore becomes empty.
std::string truncate_overgeneration(const std::string& completion, TruncateMode mode = TruncateMode::FirstLine);

// Cuts the completion at the earliest occurrence of any stop sequence.
std::string apply_stop(const std::string& completion, const std::vector<std::string>& stops);

// One request carries up to batch_size prompts and returns one completion
// per prompt, in order. Implementations throw Error(BackendError|Timeout).
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::vector<std::string> complete(const std::vector<std::string>& prompts,
                                            const SamplingParams& params) = 0;
};

// Deterministic backend: the completion is a pure function of the prompt.
class MockBackend : public CompletionBackend {
 public:
  enum class Fallback {
    // " " + uppercase of the query segment (the last "<Lang>: text" line
    // before the final cue), followed by an over-generated line.
    UpperQuery,
    // uppercase of the last prompt line
    UpperLastLine,
    // the prompt itself
    Echo,
    // post-editing: the target segment with every missing directive term
    // appended
    InsertTerms,
    // throw BackendError
    Fail,
  };

  explicit MockBackend(Fallback fallback = Fallback::UpperQuery) : fallback_(fallback) {}

  // Exact-prompt fixtures take precedence over the fallback.
  void add_fixture(const std::string& prompt, const std::string& completion);
  // {"fixtures": {prompt: completion}, "fallback": "upper_query"}
  static std::shared_ptr<MockBackend> from_json(const nlohmann::json& j);

  std::vector<std::string> complete(const std::vector<std::string>& prompts,
                                    const SamplingParams& params) override;

  std::size_t calls() const;

  static std::string complete_one(const std::string& prompt, Fallback fallback);

 private:
  Fallback fallback_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> fixtures_;
  std::size_t calls_ = 0;
};

MockBackend::Fallback mock_fallback_from_string(std::string_view s);

// Test double around a callable.
class FunctionBackend : public CompletionBackend {
 public:
  using Fn = std::function<std::vector<std::string>(const std::vector<std::string>&, const SamplingParams&)>;
  explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}
  std::vector<std::string> complete(const std::vector<std::string>& prompts,
                                    const SamplingParams& params) override {
    return fn_(prompts, params);
  }

 private:
  Fn fn_;
};

// POST {"prompt": [...], "max_tokens", "temperature", "top_p", "stop"}
// expecting {"text": [...]} (a bare string is accepted for one prompt).
class HttpCompletionBackend : public CompletionBackend {
 public:
  HttpCompletionBackend(std::string endpoint, std::string auth_token,
                        std::chrono::milliseconds timeout = std::chrono::seconds(60));
  std::vector<std::string> complete(const std::vector<std::string>& prompts,
                                    const SamplingParams& params) override;

 private:
  std::string endpoint_;
  std::string auth_token_;
  std::chrono::milliseconds timeout_;
};

// Token bucket in requests per minute; 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute = 0);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::mutex mu_;
  double rate_per_sec_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
};

struct BackendConfig {
  enum class Kind { HttpCompletion, Mock };
  Kind kind = Kind::Mock;
  std::string endpoint;
  std::string auth_token;
  std::size_t batch_size = 20;
  int retries = 2;
  std::chrono::milliseconds timeout{60000};
  double requests_per_minute = 0;
  std::string mock_fallback = "upper_query";

  void validate() const;
};

std::shared_ptr<CompletionBackend> make_backend(const BackendConfig& cfg);

struct ItemResult {
  std::optional<std::string> text;
  std::optional<ErrorCode> error;
  std::string message;

  bool ok() const noexcept { return text.has_value(); }
};

class Gateway {
 public:
  Gateway(std::shared_ptr<CompletionBackend> backend, BackendConfig cfg = {});

  // One result per prompt, order-preserving. Prompts are sent in chunks of
  // batch_size; a failing chunk is retried up to cfg.retries times and then
  // reported per item. When params has no stop sequences, the prompts'
  // shared expected_stop is used. Throws EmptyBatch for no prompts.
  std::vector<ItemResult> complete_batch(const std::vector<RenderedPrompt>& prompts,
                                         const SamplingParams& params);

  // Like complete_batch but throws the first per-item error.
  std::vector<std::string> complete_all(const std::vector<RenderedPrompt>& prompts,
                                        const SamplingParams& params);
  std::string complete_one(const RenderedPrompt& prompt, const SamplingParams& params);

  std::uint64_t requests_issued() const noexcept { return requests_; }
  const BackendConfig& config() const noexcept { return cfg_; }

 private:
  std::shared_ptr<CompletionBackend> backend_;
  BackendConfig cfg_;
  RateLimiter limiter_;
  std::atomic<std::uint64_t> requests_{0};
};

}  // namespace amt
