#pragma once

// Corpus preparation: rule, semantic and language-ID filters, synthetic
// data generation, parsing of bilingual generations, score conversion and
// mixed fine-tuning sampling.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "amt/domain.hpp"
#include "amt/embedder.hpp"
#include "amt/llm_gateway.hpp"

namespace amt {

struct FilterConfig {
  std::size_t max_len_words = 200;
  double max_ratio = 2.0;
  double sem_threshold = 0.45;
  double lid_threshold = 0.9;
  bool drop_html = true;

  void validate() const;
};

namespace rule {
inline constexpr const char* kDuplicate = "duplicate";
inline constexpr const char* kSourceCopy = "source_copy";
inline constexpr const char* kLength = "length";
inline constexpr const char* kRatio = "ratio";
inline constexpr const char* kHtml = "html";
inline constexpr const char* kSemantic = "semantic";
inline constexpr const char* kLanguage = "language";
}  // namespace rule

struct FilterReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::map<std::string, std::size_t> dropped_by_rule;

  std::size_t dropped() const;
  bool conserved() const { return input == kept + dropped(); }
};

// 128-bit digest of NFC(source) + "\x1f" + NFC(target).
using PairDigest = std::pair<std::uint64_t, std::uint64_t>;
PairDigest pair_digest(const std::string& source, const std::string& target);

bool contains_html_tag(const std::string& s);

// Streaming rule filter. Rules apply in order: duplicate, source copy,
// length (> max_len_words on either side), ratio (max/min word count >
// max_ratio), HTML tag. Memory grows with the dedup set only.
class RuleFilter {
 public:
  explicit RuleFilter(FilterConfig cfg = {});

  // The rule that drops `u`, or nullopt if it is kept. Updates the report.
  std::optional<std::string> check(const TranslationUnit& u);
  bool accept(const TranslationUnit& u) { return !check(u).has_value(); }

  const FilterReport& report() const noexcept { return report_; }

 private:
  struct DigestHash {
    std::size_t operator()(const PairDigest& d) const noexcept { return d.first ^ (d.second * 31); }
  };
  FilterConfig cfg_;
  FilterReport report_;
  std::unordered_set<PairDigest, DigestHash> seen_;
};

std::pair<std::vector<TranslationUnit>, FilterReport> rule_filter(const std::vector<TranslationUnit>& units,
                                                                  const FilterConfig& cfg = {});

// Keeps units with cosine(embed(source), embed(target)) >= threshold.
std::pair<std::vector<TranslationUnit>, FilterReport> semantic_filter(const std::vector<TranslationUnit>& units,
                                                                      const Embedder& embedder, double threshold);

struct LanguageGuess {
  std::string lang;
  double confidence = 0;
};

class LanguageIdentifier {
 public:
  virtual ~LanguageIdentifier() = default;
  // Throws ProviderUnavailable.
  virtual LanguageGuess detect(const std::string& text) const = 0;
};

class FunctionLanguageIdentifier : public LanguageIdentifier {
 public:
  using Fn = std::function<LanguageGuess(const std::string&)>;
  explicit FunctionLanguageIdentifier(Fn fn) : fn_(std::move(fn)) {}
  LanguageGuess detect(const std::string& text) const override { return fn_(text); }

 private:
  Fn fn_;
};

// Keeps units whose source and target are both detected as their declared
// language with confidence >= threshold.
std::pair<std::vector<TranslationUnit>, FilterReport> language_filter(const std::vector<TranslationUnit>& units,
                                                                      const LanguageIdentifier& lid,
                                                                      double threshold);

struct MixPlan {
  double in_domain_weight = 0.9;
  double generic_weight = 0.1;
  double generic_sample_ratio = 9.0;  // generic pool size / in-domain pool size

  // Weights must be positive and sum to 1; ratio positive.
  void validate() const;
};

struct MixedDraw {
  TranslationUnit unit;
  bool in_domain = false;
};

// Weighted interleaving of two pools. The generic pool is first subsampled
// to ceil(generic_sample_ratio * |in_domain|) units. Each pool is visited
// in a shuffled order that is reshuffled when exhausted, so the smaller
// pool is oversampled. Deterministic under the seed.
class MixedSampler {
 public:
  // Throws EmptyDataset.
  MixedSampler(std::vector<TranslationUnit> in_domain, std::vector<TranslationUnit> generic, MixPlan plan,
               std::uint64_t seed);

  MixedDraw next();
  std::size_t generic_pool_size() const noexcept { return generic_.units.size(); }

 private:
  struct Pool {
    std::vector<TranslationUnit> units;
    std::vector<std::size_t> order;
    std::size_t pos = 0;
  };
  const TranslationUnit& draw(Pool& pool);

  Pool in_domain_;
  Pool generic_;
  MixPlan plan_;
  std::mt19937_64 rng_;
  std::bernoulli_distribution pick_in_domain_;
};

std::vector<MixedDraw> mixed_sample(const std::vector<TranslationUnit>& in_domain,
                                    const std::vector<TranslationUnit>& generic, const MixPlan& plan,
                                    std::uint64_t seed, std::size_t n_draws);

// Rule-based sentence splitter on . ! ? and their full-width forms, with
// trailing closing quotes kept. ASCII terminators need whitespace or the
// end of text after them.
std::vector<std::string> split_sentences(const std::string& text);

// Defaults: top_k 50, top_p 0.95, 300 new tokens, 5 hypotheses.
SamplingParams generation_params();

struct GenerationJob {
  std::vector<std::string> prompts;
  SamplingParams params = generation_params();
  std::size_t parallelism = 1;
};

struct GenerationEntry {
  std::size_t prompt_index = 0;
  std::string prompt;
  std::vector<std::string> generations;
  std::vector<std::string> sentences;  // all generations, sentence-split
};

struct GenerationFailure {
  std::size_t prompt_index = 0;
  ErrorCode code = ErrorCode::ProviderUnavailable;
  std::string message;
};

struct GenerationResult {
  std::vector<GenerationEntry> entries;  // prompt order
  std::vector<GenerationFailure> failures;

  // Some prompts failed while others succeeded.
  bool partial() const { return !failures.empty() && !entries.empty(); }
};

// Returns num_hypotheses generations for one prompt.
class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  virtual std::vector<std::string> generate(const std::string& prompt, const SamplingParams& params) = 0;
};

// Sends the prompt num_hypotheses times in one completion request.
class BackendGenerationProvider : public GenerationProvider {
 public:
  explicit BackendGenerationProvider(std::shared_ptr<CompletionBackend> backend) : backend_(std::move(backend)) {}
  std::vector<std::string> generate(const std::string& prompt, const SamplingParams& params) override;

 private:
  std::shared_ptr<CompletionBackend> backend_;
};

// Throws EmptyInput for no prompts and ProviderUnavailable when every
// prompt fails; otherwise failures are listed in the result.
GenerationResult generate_synthetic(const GenerationJob& job, GenerationProvider& provider);

struct ParsedGeneration {
  std::vector<TranslationUnit> units;
  std::size_t skipped = 0;
};

// Tolerant parser for bilingual generations: dictionary-style lines with
// quoted values (keyed by language code or name, or taken in order) and
// numbered "src <sep> tgt" lines with separators "|||", tab, " - ", ":"
// or "-". Structural lines such as "{" are ignored. Throws NoValidRecords.
ParsedGeneration parse_bilingual_generation(const std::string& llm_output, const LangCode& src,
                                            const LangCode& tgt, IdGenerator& ids = default_id_generator());

// exp(-x) for an average negative log-probability per token. Throws
// NegativeInput for x < 0.
double score_to_exp(double avg_neg_logprob_per_token);

void to_json(nlohmann::json& j, const FilterReport& r);
void from_json(const nlohmann::json& j, FilterConfig& c);

}  // namespace amt
