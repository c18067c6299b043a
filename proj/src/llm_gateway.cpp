#include "amt/llm_gateway.hpp"

#include <algorithm>
#include <regex>
#include <thread>

#include <nlohmann/json.hpp>

#include "amt/text.hpp"
#include "http_util.hpp"

namespace amt {

SamplingParams translation_params() {
  SamplingParams p;
  p.top_p = 1.0;
  p.temperature = 0.3;
  p.stop_sequences = {"\n"};
  return p;
}

SamplingParams extraction_params() {
  SamplingParams p;
  p.top_p = 1.0;
  p.temperature = 0.0;
  return p;
}

int TokenPolicy::multiplier(const LangCode& lang) const {
  auto it = multiplier_by_lang.find(lang.code());
  return it == multiplier_by_lang.end() ? default_multiplier : it->second;
}

void TokenPolicy::validate() const {
  if (default_multiplier < 1) throw Error(ErrorCode::InvalidArgument, "default multiplier must be >= 1");
  if (floor < 1) throw Error(ErrorCode::InvalidArgument, "token floor must be >= 1");
  for (const auto& [lang, m] : multiplier_by_lang)
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "multiplier for " + lang + " must be >= 1");
}

TokenPolicy load_token_policy(const nlohmann::json& j) {
  TokenPolicy p;
  if (j.contains("multipliers"))
    for (const auto& [k, v] : j.at("multipliers").items()) p.multiplier_by_lang[k] = v.get<int>();
  p.default_multiplier = j.value("default", p.default_multiplier);
  p.floor = j.value("floor", p.floor);
  p.validate();
  return p;
}

int max_tokens_for(const std::vector<std::string>& batch, const LangCode& tgt_lang, const TokenPolicy& policy) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "no segments");
  std::size_t words = 0;
  for (const auto& s : batch) words = std::max(words, text::word_count(s));
  auto n = static_cast<long long>(words) * policy.multiplier(tgt_lang);
  return static_cast<int>(std::max<long long>(n, policy.floor));
}

std::string truncate_overgeneration(const std::string& completion, TruncateMode mode) {
  if (mode == TruncateMode::None) return completion;
  auto nl = completion.find('\n');
  return std::string(text::trim(std::string_view(completion).substr(0, nl)));
}

std::string apply_stop(const std::string& completion, const std::vector<std::string>& stops) {
  std::size_t cut = completion.size();
  for (const auto& s : stops) {
    if (s.empty()) continue;
    cut = std::min(cut, completion.find(s));
  }
  return completion.substr(0, cut);
}

// ---- mock -----------------------------------------------------------------

namespace {

std::string query_segment(const std::vector<std::string>& lines) {
  // Skip the final cue, then any MT line; the next "<Label>: text" line is
  // the query.
  for (std::size_t i = lines.size() - 1; i-- > 0;) {
    const auto& l = lines[i];
    if (text::starts_with(l, "MT: ") || text::starts_with(l, "Terms: ")) continue;
    auto pos = l.find(": ");
    if (pos != std::string::npos) return l.substr(pos + 2);
    return l;
  }
  return lines.empty() ? std::string() : lines.back();
}

std::string insert_terms(const std::string& prompt) {
  auto lines = text::split_lines(prompt);
  std::string target = lines.empty() ? std::string() : lines.back();
  auto pos = target.find(": ");
  if (pos != std::string::npos) target = target.substr(pos + 2);
  static const std::regex directive(R"re(the "([^"]*)" to translate the [^"]* term "([^"]*)")re");
  auto folded = text::casefold(target);
  for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), directive); it != std::sregex_iterator(); ++it) {
    std::string term = (*it)[1];
    if (folded.find(text::casefold(term)) == std::string::npos) {
      target += " " + term;
      folded = text::casefold(target);
    }
  }
  return target;
}

}  // namespace

std::string MockBackend::complete_one(const std::string& prompt, Fallback fallback) {
  switch (fallback) {
    case Fallback::Echo:
      return prompt;
    case Fallback::UpperLastLine: {
      auto lines = text::split_lines(prompt);
      return lines.empty() ? std::string() : text::to_upper(lines.back());
    }
    case Fallback::InsertTerms:
      return insert_terms(prompt);
    case Fallback::Fail:
      throw Error(ErrorCode::BackendError, "mock backend configured to fail");
    case Fallback::UpperQuery: {
      auto lines = text::split_lines(prompt);
      if (lines.size() < 2) return text::to_upper(prompt);
      return " " + text::to_upper(query_segment(lines)) + "\n" + lines.back();
    }
  }
  return prompt;
}

MockBackend::Fallback mock_fallback_from_string(std::string_view s) {
  if (s == "upper_query") return MockBackend::Fallback::UpperQuery;
  if (s == "upper_last_line") return MockBackend::Fallback::UpperLastLine;
  if (s == "echo") return MockBackend::Fallback::Echo;
  if (s == "insert_terms") return MockBackend::Fallback::InsertTerms;
  if (s == "fail") return MockBackend::Fallback::Fail;
  throw Error(ErrorCode::InvalidArgument, "unknown mock fallback '" + std::string(s) + "'");
}

void MockBackend::add_fixture(const std::string& prompt, const std::string& completion) {
  std::lock_guard lock(mu_);
  fixtures_[prompt] = completion;
}

std::shared_ptr<MockBackend> MockBackend::from_json(const nlohmann::json& j) {
  auto m = std::make_shared<MockBackend>(mock_fallback_from_string(j.value("fallback", std::string("upper_query"))));
  if (j.contains("fixtures"))
    for (const auto& [k, v] : j.at("fixtures").items()) m->add_fixture(k, v.get<std::string>());
  return m;
}

std::vector<std::string> MockBackend::complete(const std::vector<std::string>& prompts, const SamplingParams&) {
  std::map<std::string, std::string> fixtures;
  {
    std::lock_guard lock(mu_);
    ++calls_;
    fixtures = fixtures_;
  }
  std::vector<std::string> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) {
    auto it = fixtures.find(p);
    out.push_back(it != fixtures.end() ? it->second : complete_one(p, fallback_));
  }
  return out;
}

std::size_t MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

// ---- http -----------------------------------------------------------------

HttpCompletionBackend::HttpCompletionBackend(std::string endpoint, std::string auth_token,
                                             std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), auth_token_(std::move(auth_token)), timeout_(timeout) {}

std::vector<std::string> HttpCompletionBackend::complete(const std::vector<std::string>& prompts,
                                                         const SamplingParams& params) {
  nlohmann::json body{{"prompt", prompts},
                      {"max_tokens", params.max_new_tokens},
                      {"temperature", params.temperature},
                      {"top_p", params.top_p},
                      {"stop", params.stop_sequences}};
  if (params.top_k > 0) body["top_k"] = params.top_k;
  if (params.num_hypotheses > 1) body["n"] = params.num_hypotheses;
  auto j = detail::post_json(endpoint_, auth_token_, timeout_, body, ErrorCode::BackendError);
  std::vector<std::string> out;
  try {
    const auto& t = j.at("text");
    if (t.is_string())
      out.push_back(t.get<std::string>());
    else
      out = t.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BackendError, std::string("bad completion response: ") + e.what());
  }
  if (out.size() != prompts.size())
    throw Error(ErrorCode::BackendError, "backend returned " + std::to_string(out.size()) + " completions for " +
                                             std::to_string(prompts.size()) + " prompts");
  return out;
}

// ---- rate limiting ----------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_minute)
    : rate_per_sec_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, requests_per_minute / 60.0)),
      tokens_(capacity_),
      last_(Clock::now()) {}

void RateLimiter::acquire() {
  if (rate_per_sec_ <= 0) return;
  std::unique_lock lock(mu_);
  for (;;) {
    auto now = Clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_sec_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_sec_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

// ---- gateway ----------------------------------------------------------------

void BackendConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (retries < 0) throw Error(ErrorCode::InvalidArgument, "retries must be >= 0");
  if (kind == Kind::HttpCompletion && endpoint.empty())
    throw Error(ErrorCode::InvalidArgument, "http backend needs an endpoint");
}

std::shared_ptr<CompletionBackend> make_backend(const BackendConfig& cfg) {
  cfg.validate();
  if (cfg.kind == BackendConfig::Kind::HttpCompletion)
    return std::make_shared<HttpCompletionBackend>(cfg.endpoint, cfg.auth_token, cfg.timeout);
  return std::make_shared<MockBackend>(mock_fallback_from_string(cfg.mock_fallback));
}

Gateway::Gateway(std::shared_ptr<CompletionBackend> backend, BackendConfig cfg)
    : backend_(std::move(backend)), cfg_(std::move(cfg)), limiter_(cfg_.requests_per_minute) {
  cfg_.validate();
  if (!backend_) throw Error(ErrorCode::InvalidArgument, "gateway needs a backend");
}

std::vector<ItemResult> Gateway::complete_batch(const std::vector<RenderedPrompt>& prompts,
                                                const SamplingParams& params) {
  if (prompts.empty()) throw Error(ErrorCode::EmptyBatch, "no prompts");
  params.validate();
  SamplingParams p = params;
  if (p.stop_sequences.empty()) {
    const auto& first = prompts.front().expected_stop;
    bool shared = first && std::all_of(prompts.begin(), prompts.end(),
                                       [&](const RenderedPrompt& r) { return r.expected_stop == first; });
    if (shared) p.stop_sequences = {*first};
  }

  std::vector<ItemResult> out(prompts.size());
  for (std::size_t start = 0; start < prompts.size(); start += cfg_.batch_size) {
    std::size_t end = std::min(prompts.size(), start + cfg_.batch_size);
    std::vector<std::string> chunk;
    for (std::size_t i = start; i < end; ++i) chunk.push_back(prompts[i].text);

    std::optional<Error> last_error;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
      limiter_.acquire();
      ++requests_;
      try {
        auto texts = backend_->complete(chunk, p);
        if (texts.size() != chunk.size())
          throw Error(ErrorCode::BackendError, "backend returned wrong number of completions");
        for (std::size_t i = 0; i < texts.size(); ++i) out[start + i].text = apply_stop(texts[i], p.stop_sequences);
        last_error.reset();
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::BackendError && e.code() != ErrorCode::Timeout) throw;
        last_error = e;
      }
    }
    if (last_error)
      for (std::size_t i = start; i < end; ++i) {
        out[i].error = last_error->code();
        out[i].message = last_error->detail();
      }
  }
  return out;
}

std::vector<std::string> Gateway::complete_all(const std::vector<RenderedPrompt>& prompts,
                                               const SamplingParams& params) {
  auto results = complete_batch(prompts, params);
  std::vector<std::string> out;
  out.reserve(results.size());
  for (auto& r : results) {
    if (!r.ok()) throw Error(*r.error, r.message);
    out.push_back(std::move(*r.text));
  }
  return out;
}

std::string Gateway::complete_one(const RenderedPrompt& prompt, const SamplingParams& params) {
  return complete_all({prompt}, params).front();
}

}  // namespace amt
