#pragma once

// Prompt construction for adaptive translation, terminology extraction,
// terminology-constrained translation and post-editing, synthetic data
// generation, and encoder-decoder prefix augmentation.
//
// Few-shot layout: examples are sorted by similarity descending, then
// written lowest-similarity first so the best match sits right above the
// segment to translate:
//
//   English: <source of match 2>
//   Arabic: <target of match 2>
//   English: <source of match 1>
//   Arabic: <target of match 1>
//   English: <segment>
//   Arabic:
//
// All functions are pure.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "amt/domain.hpp"

namespace amt {

enum class Template {
  ZeroShot,
  FewShot,
  FewShotOneMt,
  FewShotAllMt,
  TermExtract,
  ZeroShotTerms,
  FewShotFuzzyTerms,
  FewShotGlossaryTerms,
  TermApe,
  SynthTermGen,
  PrefixAugment,
};

std::string_view to_string(Template t);
Template template_from_string(std::string_view s);
const std::vector<Template>& all_templates();

// One in-context example: a fuzzy match plus its optional MT output
// (all-MT template) and its terms (terms templates).
struct FewShotExample {
  FuzzyMatch match;
  std::optional<std::string> mt;
  std::vector<TermPair> terms;
};

struct PromptBindings {
  std::optional<LangCode> src_lang;
  std::optional<LangCode> tgt_lang;
  std::optional<std::string> segment;
  std::vector<FewShotExample> examples;
  std::optional<std::string> mt_segment;
  std::vector<TermPair> terms;  // terms for the segment itself
  // term extraction
  std::optional<TranslationUnit> pair;
  std::optional<std::size_t> number;
  std::optional<std::string> separator;
  // post-editing
  std::optional<std::string> target_segment;
  // synthetic generation
  std::optional<std::string> term;
  std::optional<std::size_t> count;
  // prefix augmentation (pair holds the fuzzy match)
  std::optional<std::string> src_code;
  std::optional<std::string> tgt_code;
  std::string joiner = "•";
};

struct PromptSpec {
  Template tmpl = Template::ZeroShot;
  PromptBindings bindings;
};

struct RenderedPrompt {
  std::string text;
  std::optional<std::string> expected_stop;
  std::map<std::string, std::string> slots_used;
  std::optional<std::string> target_prefix;  // prefix augmentation only
};

// Throws MissingSlot, EmptyMatches (few-shot variants with no examples),
// EmptyTerms, InvalidArgument.
RenderedPrompt render(const PromptSpec& spec);

// "Terms: s1 = t1 - s2 = t2". Throws EmptyTerms.
std::string render_terms_block(const std::vector<TermPair>& terms);

RenderedPrompt render_term_extract(const TranslationUnit& pair, std::size_t number,
                                   const std::string& separator);

RenderedPrompt render_term_ape(const LangCode& src_lang, const LangCode& tgt_lang,
                               const std::string& src_segment, const std::string& tgt_segment,
                               const std::vector<TermPair>& terms);

RenderedPrompt render_synth_gen(const std::string& term, std::size_t n, const LangCode& src_lang,
                                const LangCode& tgt_lang);

struct PrefixAugmented {
  std::string augmented_source;
  std::string target_prefix;
};

PrefixAugmented render_prefix_augment(const std::string& src_segment, const TranslationUnit& fuzzy,
                                      const std::string& src_code, const std::string& tgt_code,
                                      const std::string& joiner = "•");

// Removes `prefix` and the whitespace after it from a decoded output.
std::string strip_target_prefix(const std::string& output, const std::string& prefix);

// True if `text` contains "<slot>" for any slot name used by the templates.
bool contains_placeholder(const std::string& text);

}  // namespace amt
