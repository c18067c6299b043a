#pragma once

// Bilingual terminology: parsing model-extracted term lists, glossary
// compilation, glossary lookup over source n-grams, term-usage checks and
// usage reports.

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "amt/domain.hpp"

namespace amt {

struct ExtractedTerms {
  std::vector<TermPair> terms;
  std::size_t skipped = 0;  // lines that did not yield a pair
};

// Lines look like "N. src <sep> tgt" (numbering optional). Throws
// InvalidArgument for an empty separator, NoTermsParsed if nothing parses.
ExtractedTerms parse_extracted_terms(const std::string& llm_output, const std::string& separator);

using StopwordSet = std::unordered_set<std::string>;  // case-folded

// One token per line; blank lines and lines starting with '#' ignored.
StopwordSet load_stopwords(const std::filesystem::path& path);
// <dir>/<code>.txt, or an empty set if the file does not exist.
StopwordSet load_stopwords_for(const std::filesystem::path& dir, const LangCode& lang);

struct GlossaryOptions {
  std::uint64_t min_frequency = 2;
  std::size_t max_ngram = 5;
  // Drop a term whose source is a contiguous sub-sequence of a longer
  // entry's source.
  bool drop_overlapping = false;
};

class Glossary {
 public:
  Glossary() = default;
  // Validates the invariants and sorts. Throws InvalidArgument on
  // duplicate sources, low frequency, or long n-grams.
  Glossary(LangCode src, LangCode tgt, std::vector<TermPair> entries,
           const GlossaryOptions& opts = {});

  const std::vector<TermPair>& entries() const noexcept { return entries_; }
  const LangCode& src_lang() const noexcept { return src_; }
  const LangCode& tgt_lang() const noexcept { return tgt_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  LangCode src_;
  LangCode tgt_;
  std::vector<TermPair> entries_;
};

// Entry order: src_ngram_len desc, frequency desc, source_term asc.
bool glossary_order(const TermPair& a, const TermPair& b);

// Each input pair counts as frequency() occurrences. Stopwords apply to
// both sides, compared case-folded.
Glossary compile_glossary(const std::vector<TermPair>& occurrences, const StopwordSet& stopwords,
                          const LangCode& src, const LangCode& tgt, const GlossaryOptions& opts = {});

// source<TAB>target<TAB>frequency per line.
void save_glossary_tsv(const Glossary& g, const std::filesystem::path& path);
Glossary load_glossary_tsv(const std::filesystem::path& path, const LangCode& src, const LangCode& tgt);

// Case-folded word n-grams (n = 1..max_n) of `text`, joined by one space.
std::unordered_set<std::string> word_ngrams(const std::string& text, std::size_t max_n = 5);

// Glossary entries whose source occurs among the source's 1..5-grams, in
// glossary order, truncated to max_terms. Throws InvalidArgument if
// max_terms == 0.
std::vector<TermPair> match_terms(const std::string& source, const Glossary& glossary,
                                  std::size_t max_terms);
// Same lookup over an arbitrary term list, keeping its order.
std::vector<TermPair> match_terms(const std::string& source, const std::vector<TermPair>& terms,
                                  std::size_t max_terms);

enum class TermMatchMode {
  Auto,          // WordBoundary for spaced scripts, Substring otherwise
  WordBoundary,  // case-insensitive, not adjacent to word characters
  Substring,     // case-insensitive raw substring
  Exact,         // case-sensitive raw substring
};

// Throws InvalidArgument for an empty translation.
bool term_used(const std::string& translation, const TermPair& term,
               TermMatchMode mode = TermMatchMode::Auto);

std::vector<TermPair> missing_terms(const std::string& translation, const std::vector<TermPair>& terms,
                                    TermMatchMode mode = TermMatchMode::Auto);

struct UsageCount {
  std::string system;
  std::string lang_pair;
  std::string term_set;
  std::uint64_t total = 0;
  std::uint64_t used = 0;
};

struct PairAverage {
  std::string system;
  std::string lang_pair;
  double avg_pct = 0;  // rounded to 2 decimals
  double raw = 0;      // unrounded
};

struct SystemAverage {
  std::string system;
  double avg_pct = 0;  // mean of the unrounded pair averages, rounded
};

struct TermUsageReport {
  std::vector<UsageCount> rows;
  std::vector<PairAverage> pairs;      // first-appearance order
  std::vector<SystemAverage> systems;  // first-appearance order

  double pair_avg(const std::string& system, const std::string& lang_pair) const;
  double system_avg(const std::string& system) const;
};

// Half-up rounding to `decimals` places, tolerant of binary representation
// error (60.175 rounds to 60.18).
double round_half_up(double x, int decimals = 2);

// Throws InconsistentCounts when used > total or total == 0, EmptyInput
// when rows is empty.
TermUsageReport usage_report(const std::vector<UsageCount>& rows);

// Counts used terms per (translation, term set) and aggregates them into
// rows under the given system / language-pair labels.
struct TermEvalItem {
  std::string translation;
  std::vector<TermPair> term_set;
  std::string term_set_label = "terms";
};

std::vector<UsageCount> count_usage(const std::vector<TermEvalItem>& items, const std::string& system,
                                    const std::string& lang_pair,
                                    TermMatchMode mode = TermMatchMode::Auto);

void to_json(nlohmann::json& j, const Glossary& g);
void to_json(nlohmann::json& j, const UsageCount& v);
void from_json(const nlohmann::json& j, UsageCount& v);
void to_json(nlohmann::json& j, const TermUsageReport& r);

}  // namespace amt
