#pragma once

// Word-level autocompletion. Alternative translations of the source are
// sampled (optionally forced to start with the left context), and the
// first word starting with the typed characters is returned. Up to
// max_runs rounds of sampling are tried, the first at temp_lo and the rest
// at temperatures drawn uniformly from [temp_lo, temp_hi].

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "amt/domain.hpp"

namespace amt {

struct WlacQuery {
  std::string source;
  std::string left_context;
  std::string right_context;  // accepted, never used
  std::string typed;

  // Throws EmptyInput when typed or source is empty.
  void validate() const;
};

struct WlacConfig {
  int num_hypotheses = 10;
  int top_k = 10;
  int max_runs = 5;
  double temp_lo = 1.0;
  double temp_hi = 1.3;
  std::optional<std::uint64_t> seed;

  void validate() const;
};

struct WlacResult {
  std::optional<std::string> word;
  std::optional<int> run_found;
  std::size_t candidates_scanned = 0;
  bool used_prefix = false;
  bool timed_out = false;
};

using TokenSeq = std::vector<std::string>;

struct SampleRequest {
  std::string source;
  std::optional<std::string> target_prefix;
  int n = 10;
  int top_k = 10;
  double temperature = 1.0;

  bool operator==(const SampleRequest&) const = default;
};

// Returns up to n sampled translations as token sequences. With a target
// prefix, returned sequences include the prefix. Must be safe to call
// concurrently.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual std::vector<TokenSeq> sample(const SampleRequest& req) = 0;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::string detokenize(const TokenSeq& tokens) const = 0;
  virtual std::vector<std::string> words(const std::string& text) const = 0;
};

// Detokenizes SentencePiece pieces ("▁" marks a word start) or, when no
// piece carries the marker, joins tokens with spaces. Words come from
// Unicode word segmentation.
class DefaultTokenizer : public Tokenizer {
 public:
  std::string detokenize(const TokenSeq& tokens) const override;
  std::vector<std::string> words(const std::string& text) const override;
};

// Default word segmentation; `lang` selects nothing yet.
std::vector<std::string> word_tokenize(const std::string& text, const LangCode& lang);

// Whether a left context triggers prefix-constrained sampling: non-empty
// and starting with an uppercase letter, or with no cased letter at all.
bool prefix_applies(const std::string& left_context);

// Continuation of `hypothesis` after `prefix` (the whole hypothesis when it
// does not start with the prefix).
std::string continuation_after(const std::string& hypothesis, const std::string& prefix);

// First candidate starting with typed: exact case first, then case-folded.
std::optional<std::size_t> find_completion(const std::vector<std::string>& candidates, const std::string& typed);

// Temperatures for runs 1..max_runs under cfg (seeded when cfg.seed is
// set).
std::vector<double> run_temperatures(const WlacConfig& cfg);

// Throws EmptyInput, SamplerFailure (with the run number). When the
// deadline passes between runs the result has timed_out set.
WlacResult autocomplete(const WlacQuery& query, Sampler& sampler, const Tokenizer& tokenizer,
                        const WlacConfig& cfg,
                        std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt);

// Exact-match accuracy. Throws EmptyInput.
double wlac_accuracy(const std::vector<std::pair<WlacResult, std::string>>& results);

// Rounds a temperature to one decimal, the fixture key granularity.
double temperature_bucket(double t);

// Replays hypotheses from a fixture file:
//   {"entries": [{"source": s, "prefix": p|null, "temp": 1.0,
//                 "hypotheses": [{"tokens": [...], "min_top_k": 1}, ...]}]}
// A request returns the first n hypotheses whose min_top_k <= top_k, from
// the entry keyed by (source, prefix, temperature bucket); no entry means
// no hypotheses.
class FixtureSampler : public Sampler {
 public:
  struct Hypothesis {
    TokenSeq tokens;
    int min_top_k = 1;
  };

  static FixtureSampler from_json(const nlohmann::json& j);
  static FixtureSampler load(const std::filesystem::path& path);

  void add(const std::string& source, const std::optional<std::string>& prefix, double temp,
           std::vector<Hypothesis> hyps);

  std::vector<TokenSeq> sample(const SampleRequest& req) override;

 private:
  using Key = std::tuple<std::string, std::optional<std::string>, long>;
  std::map<Key, std::vector<Hypothesis>> entries_;
};

// Records every request and delegates to another sampler.
class SpySampler : public Sampler {
 public:
  explicit SpySampler(Sampler& inner) : inner_(inner) {}
  std::vector<TokenSeq> sample(const SampleRequest& req) override;
  std::vector<SampleRequest> requests() const;

 private:
  Sampler& inner_;
  mutable std::mutex mu_;
  std::vector<SampleRequest> requests_;
};

// POST {"source", "target_prefix", "n", "top_k", "temperature"} expecting
// {"hypotheses": [[token, ...], ...]}.
class HttpSampler : public Sampler {
 public:
  HttpSampler(std::string endpoint, std::string auth_token,
              std::chrono::milliseconds timeout = std::chrono::seconds(30));
  std::vector<TokenSeq> sample(const SampleRequest& req) override;

 private:
  std::string endpoint_;
  std::string auth_token_;
  std::chrono::milliseconds timeout_;
};

// Sampler around a callable.
class FunctionSampler : public Sampler {
 public:
  using Fn = std::function<std::vector<TokenSeq>(const SampleRequest&)>;
  explicit FunctionSampler(Fn fn) : fn_(std::move(fn)) {}
  std::vector<TokenSeq> sample(const SampleRequest& req) override { return fn_(req); }

 private:
  Fn fn_;
};

void to_json(nlohmann::json& j, const WlacResult& r);

}  // namespace amt
