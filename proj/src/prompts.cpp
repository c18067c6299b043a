#include "amt/prompts.hpp"

#include <algorithm>
#include <array>

#include "amt/text.hpp"

namespace amt {

namespace {

struct TemplateName {
  Template t;
  std::string_view name;
};

constexpr std::array<TemplateName, 11> kNames{{
    {Template::ZeroShot, "zero_shot"},
    {Template::FewShot, "few_shot"},
    {Template::FewShotOneMt, "few_shot_one_mt"},
    {Template::FewShotAllMt, "few_shot_all_mt"},
    {Template::TermExtract, "term_extract"},
    {Template::ZeroShotTerms, "zero_shot_terms"},
    {Template::FewShotFuzzyTerms, "few_shot_fuzzy_terms"},
    {Template::FewShotGlossaryTerms, "few_shot_glossary_terms"},
    {Template::TermApe, "term_ape"},
    {Template::SynthTermGen, "synth_term_gen"},
    {Template::PrefixAugment, "prefix_augment"},
}};

constexpr std::array<std::string_view, 22> kSlotNames{
    "src_lang",        "tgt_lang",        "source_lang",   "target_lang",  "segment",
    "source_segment",  "target_segment",  "mt_segment",    "number",       "separator",
    "src_term",        "tgt_term",        "term",          "count",        "src_code",
    "tgt_code",        "joiner",          "source_sentence", "target_sentence", "terms",
    "source_fuzzy_match", "target_fuzzy_match"};

template <typename T>
const T& require(const std::optional<T>& v, const char* slot) {
  if (!v) throw Error(ErrorCode::MissingSlot, std::string("slot '") + slot + "' is required");
  return *v;
}

const std::string& require_text(const std::optional<std::string>& v, const char* slot) {
  const auto& s = require(v, slot);
  if (text::trim(s).empty())
    throw Error(ErrorCode::MissingSlot, std::string("slot '") + slot + "' is empty");
  return s;
}

bool uses_terms(Template t) {
  return t == Template::ZeroShotTerms || t == Template::FewShotFuzzyTerms ||
         t == Template::FewShotGlossaryTerms;
}

bool is_few_shot(Template t) {
  return t == Template::FewShot || t == Template::FewShotOneMt || t == Template::FewShotAllMt ||
         t == Template::FewShotFuzzyTerms || t == Template::FewShotGlossaryTerms;
}

void append_terms_line(std::string& out, const std::vector<TermPair>& terms) {
  if (terms.empty()) return;
  out += render_terms_block(terms);
  out += '\n';
}

RenderedPrompt render_translation(Template t, const PromptBindings& b) {
  const auto& src = require(b.src_lang, "src_lang");
  const auto& tgt = require(b.tgt_lang, "tgt_lang");
  const auto& segment = require_text(b.segment, "segment");
  const std::string& S = src.display_name();
  const std::string& T = tgt.display_name();

  RenderedPrompt r;
  r.slots_used["src_lang"] = S;
  r.slots_used["tgt_lang"] = T;
  r.slots_used["segment"] = segment;

  std::string out;
  if (is_few_shot(t)) {
    if (b.examples.empty()) throw Error(ErrorCode::EmptyMatches, "few-shot prompt needs at least one match");
    std::vector<FewShotExample> ex = b.examples;
    std::stable_sort(ex.begin(), ex.end(), [](const FewShotExample& a, const FewShotExample& c) {
      return a.match.similarity() > c.match.similarity();
    });
    for (auto it = ex.rbegin(); it != ex.rend(); ++it) {
      if (uses_terms(t)) append_terms_line(out, it->terms);
      out += S + ": " + it->match.unit().source() + "\n";
      if (t == Template::FewShotAllMt) out += "MT: " + require_text(it->mt, "mt_fuzzy_match") + "\n";
      out += T + ": " + it->match.unit().target() + "\n";
    }
    r.slots_used["matches"] = std::to_string(ex.size());
  }
  if (uses_terms(t)) {
    append_terms_line(out, b.terms);
    r.slots_used["terms"] = std::to_string(b.terms.size());
  }
  out += S + ": " + segment + "\n";
  if (t == Template::FewShotOneMt || t == Template::FewShotAllMt) {
    const auto& mt = require_text(b.mt_segment, "mt_segment");
    out += "MT: " + mt + "\n";
    r.slots_used["mt_segment"] = mt;
  }
  out += T + ":";
  r.text = std::move(out);
  r.expected_stop = "\n";
  return r;
}

}  // namespace

std::string_view to_string(Template t) {
  for (const auto& n : kNames)
    if (n.t == t) return n.name;
  return "unknown";
}

Template template_from_string(std::string_view s) {
  for (const auto& n : kNames)
    if (n.name == s) return n.t;
  throw Error(ErrorCode::InvalidArgument, "unknown template '" + std::string(s) + "'");
}

const std::vector<Template>& all_templates() {
  static const std::vector<Template> all = [] {
    std::vector<Template> v;
    for (const auto& n : kNames) v.push_back(n.t);
    return v;
  }();
  return all;
}

std::string render_terms_block(const std::vector<TermPair>& terms) {
  if (terms.empty()) throw Error(ErrorCode::EmptyTerms, "terms block needs at least one term");
  std::string out = "Terms: ";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += " - ";
    out += terms[i].source_term() + " = " + terms[i].target_term();
  }
  return out;
}

RenderedPrompt render_term_extract(const TranslationUnit& pair, std::size_t number,
                                   const std::string& separator) {
  if (number < 1) throw Error(ErrorCode::MissingSlot, "number must be >= 1");
  if (separator.empty()) throw Error(ErrorCode::MissingSlot, "separator is empty");
  if (pair.source().empty() || pair.target().empty())
    throw Error(ErrorCode::MissingSlot, "sentence pair is empty");
  const std::string& S = pair.src_lang().display_name();
  const std::string& T = pair.tgt_lang().display_name();
  RenderedPrompt r;
  r.text = S + ": " + pair.source() + "\n" + T + ": " + pair.target() + "\n\nExtract " +
           std::to_string(number) + " terms from the above sentence pair. Type each " + S +
           " term and its " + T + " equivalent in one line, separated by '" + separator +
           "'.\n\n1.";
  r.slots_used = {{"source_lang", S},
                  {"target_lang", T},
                  {"number", std::to_string(number)},
                  {"separator", separator}};
  return r;
}

RenderedPrompt render_term_ape(const LangCode& src_lang, const LangCode& tgt_lang,
                               const std::string& src_segment, const std::string& tgt_segment,
                               const std::vector<TermPair>& terms) {
  if (terms.empty()) throw Error(ErrorCode::EmptyTerms, "post-editing needs at least one term");
  if (text::trim(tgt_segment).empty()) throw Error(ErrorCode::MissingSlot, "target segment is empty");
  if (text::trim(src_segment).empty()) throw Error(ErrorCode::MissingSlot, "source segment is empty");
  const std::string& S = src_lang.display_name();
  const std::string& T = tgt_lang.display_name();
  std::string out = "In the following " + T + " translation, ";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    out += i == 0 ? "use the \"" : ", and the \"";
    out += terms[i].target_term() + "\" to translate the " + S + " term \"" +
           terms[i].source_term() + "\"";
  }
  out += ". Leave everything else the same.\n\n";
  out += S + ": " + src_segment + "\n" + T + ": " + tgt_segment;
  RenderedPrompt r;
  r.text = std::move(out);
  r.expected_stop = "\n";
  r.slots_used = {{"src_lang", S},
                  {"tgt_lang", T},
                  {"terms", std::to_string(terms.size())}};
  return r;
}

RenderedPrompt render_synth_gen(const std::string& term, std::size_t n, const LangCode& src_lang,
                                const LangCode& tgt_lang) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  if (text::trim(term).empty()) throw Error(ErrorCode::MissingSlot, "term is empty");
  RenderedPrompt r;
  r.text = "Please use the \"" + term + "\" to generate just " + std::to_string(n) +
           " numbered sentences in " + src_lang.display_name() + "-" + tgt_lang.display_name() +
           " in one Python dictionary format.";
  r.slots_used = {{"term", term}, {"count", std::to_string(n)}};
  return r;
}

PrefixAugmented render_prefix_augment(const std::string& src_segment, const TranslationUnit& fuzzy,
                                      const std::string& src_code, const std::string& tgt_code,
                                      const std::string& joiner) {
  if (fuzzy.source().empty() || fuzzy.target().empty())
    throw Error(ErrorCode::MissingSlot, "fuzzy match is empty");
  if (src_code.empty() || tgt_code.empty()) throw Error(ErrorCode::MissingSlot, "language code is empty");
  if (text::trim(src_segment).empty()) throw Error(ErrorCode::MissingSlot, "segment is empty");
  return {fuzzy.source() + " " + src_code + " " + joiner + " " + src_segment,
          fuzzy.target() + " " + tgt_code + " " + joiner};
}

std::string strip_target_prefix(const std::string& output, const std::string& prefix) {
  if (!text::starts_with(output, prefix)) return output;
  std::size_t i = prefix.size();
  while (i < output.size() && (output[i] == ' ' || output[i] == '\t')) ++i;
  return output.substr(i);
}

bool contains_placeholder(const std::string& text) {
  for (auto slot : kSlotNames) {
    std::string token = "<" + std::string(slot) + ">";
    if (text.find(token) != std::string::npos) return true;
  }
  return false;
}

RenderedPrompt render(const PromptSpec& spec) {
  const auto& b = spec.bindings;
  switch (spec.tmpl) {
    case Template::TermExtract:
      return render_term_extract(require(b.pair, "pair"), require(b.number, "number"),
                                 require(b.separator, "separator"));
    case Template::TermApe:
      return render_term_ape(require(b.src_lang, "src_lang"), require(b.tgt_lang, "tgt_lang"),
                             require_text(b.segment, "segment"),
                             require(b.target_segment, "target_segment"), b.terms);
    case Template::SynthTermGen:
      return render_synth_gen(require(b.term, "term"), require(b.count, "count"),
                              require(b.src_lang, "src_lang"), require(b.tgt_lang, "tgt_lang"));
    case Template::PrefixAugment: {
      auto p = render_prefix_augment(require_text(b.segment, "segment"), require(b.pair, "pair"),
                                     require(b.src_code, "src_code"), require(b.tgt_code, "tgt_code"),
                                     b.joiner);
      RenderedPrompt r;
      r.text = std::move(p.augmented_source);
      r.target_prefix = std::move(p.target_prefix);
      r.slots_used = {{"src_code", *b.src_code}, {"tgt_code", *b.tgt_code}, {"joiner", b.joiner}};
      return r;
    }
    default:
      return render_translation(spec.tmpl, b);
  }
}

}  // namespace amt
