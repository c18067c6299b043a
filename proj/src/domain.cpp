#include "amt/domain.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "amt/text.hpp"

namespace amt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySide: return "EmptySide";
    case ErrorCode::SameLanguage: return "SameLanguage";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::LanguageMismatch: return "LanguageMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::NoValidRecords: return "NoValidRecords";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::TooFewVectors: return "TooFewVectors";
    case ErrorCode::NotTrained: return "NotTrained";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::BadSnapshot: return "BadSnapshot";
    case ErrorCode::IndexStale: return "IndexStale";
    case ErrorCode::EmptyTm: return "EmptyTm";
    case ErrorCode::BadEdges: return "BadEdges";
    case ErrorCode::MissingSlot: return "MissingSlot";
    case ErrorCode::EmptyMatches: return "EmptyMatches";
    case ErrorCode::EmptyTerms: return "EmptyTerms";
    case ErrorCode::NoTermsParsed: return "NoTermsParsed";
    case ErrorCode::InconsistentCounts: return "InconsistentCounts";
    case ErrorCode::SamplerFailure: return "SamplerFailure";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::PartialBatch: return "PartialBatch";
    case ErrorCode::NegativeInput: return "NegativeInput";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

namespace {

struct KnownLang {
  std::string_view code;
  std::string_view name;
};

constexpr std::array<KnownLang, 14> kKnownLangs{{
    {"en", "English"},
    {"ar", "Arabic"},
    {"zh", "Chinese"},
    {"fr", "French"},
    {"es", "Spanish"},
    {"rw", "Kinyarwanda"},
    {"de", "German"},
    {"cs", "Czech"},
    {"it", "Italian"},
    {"pt", "Portuguese"},
    {"ru", "Russian"},
    {"ja", "Japanese"},
    {"ko", "Korean"},
    {"nl", "Dutch"},
}};

}  // namespace

LangCode::LangCode(std::string code, std::string display_name)
    : code_(std::move(code)), display_name_(std::move(display_name)) {
  if (code_.empty()) throw Error(ErrorCode::InvalidArgument, "language code is empty");
  if (std::any_of(code_.begin(), code_.end(), [](char c) { return c >= 'A' && c <= 'Z'; }))
    throw Error(ErrorCode::InvalidArgument, "language code must be lowercase: " + code_);
  if (display_name_.empty())
    throw Error(ErrorCode::InvalidArgument, "display name is empty for " + code_);
}

LangCode LangCode::from_code(std::string_view code) {
  for (const auto& k : kKnownLangs) {
    if (k.code == code) return LangCode(std::string(k.code), std::string(k.name));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown language code: " + std::string(code));
}

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::Authentic: return "authentic";
    case Origin::SyntheticLm: return "synthetic_lm";
    case Origin::BackTranslated: return "back_translated";
    case Origin::ApprovedEdit: return "approved_edit";
    case Origin::Machine: return "machine";
  }
  return "authentic";
}

Origin origin_from_string(std::string_view s) {
  for (Origin o : {Origin::Authentic, Origin::SyntheticLm, Origin::BackTranslated,
                   Origin::ApprovedEdit, Origin::Machine}) {
    if (to_string(o) == s) return o;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown origin: " + std::string(s));
}

Timestamp now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

IdGenerator::IdGenerator() : rng_(std::random_device{}()) {}
IdGenerator::IdGenerator(std::uint64_t seed) : rng_(seed) {}

std::string IdGenerator::next() {
  std::uint64_t v;
  {
    std::lock_guard lock(mu_);
    v = rng_();
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "u-%016llx", static_cast<unsigned long long>(v));
  return buf;
}

IdGenerator& default_id_generator() {
  static IdGenerator gen;
  return gen;
}

bool TranslationUnit::operator==(const TranslationUnit& o) const {
  return id_ == o.id_ && source_ == o.source_ && target_ == o.target_ &&
         src_lang_.code() == o.src_lang_.code() &&
         src_lang_.display_name() == o.src_lang_.display_name() &&
         tgt_lang_.code() == o.tgt_lang_.code() &&
         tgt_lang_.display_name() == o.tgt_lang_.display_name() && origin_ == o.origin_ &&
         created_at_ == o.created_at_;
}

TranslationUnit make_unit(std::string id, std::string source, std::string target, LangCode src,
                          LangCode tgt, Origin origin, Timestamp created_at) {
  std::string s(text::trim(source));
  std::string t(text::trim(target));
  if (s.empty() || t.empty()) throw Error(ErrorCode::EmptySide, "source and target must be non-empty");
  if (src.code().empty() || tgt.code().empty())
    throw Error(ErrorCode::InvalidArgument, "language codes must be set");
  if (src == tgt) throw Error(ErrorCode::SameLanguage, "source and target language are both " + src.code());
  if (id.empty()) throw Error(ErrorCode::InvalidArgument, "unit id is empty");
  TranslationUnit u;
  u.id_ = std::move(id);
  u.source_ = std::move(s);
  u.target_ = std::move(t);
  u.src_lang_ = std::move(src);
  u.tgt_lang_ = std::move(tgt);
  u.origin_ = origin;
  u.created_at_ = created_at;
  return u;
}

TranslationUnit validate_unit(const RawUnit& raw, IdGenerator& ids) {
  // Check sides before drawing an id so failures do not consume the stream.
  if (text::trim(raw.source).empty() || text::trim(raw.target).empty())
    throw Error(ErrorCode::EmptySide, "source and target must be non-empty");
  if (raw.src_lang == raw.tgt_lang)
    throw Error(ErrorCode::SameLanguage, "source and target language are both " + raw.src_lang.code());
  return make_unit(raw.id ? *raw.id : ids.next(), raw.source, raw.target, raw.src_lang,
                   raw.tgt_lang, raw.origin, raw.created_at ? *raw.created_at : now_ms());
}

FuzzyMatch::FuzzyMatch(TranslationUnit unit, double similarity)
    : unit_(std::move(unit)), similarity_(similarity) {
  if (!std::isfinite(similarity) || similarity < -1.0 - 1e-9 || similarity > 1.0 + 1e-9)
    throw Error(ErrorCode::InvalidArgument, "similarity out of [-1, 1]");
  similarity_ = std::clamp(similarity, -1.0, 1.0);
}

void sort_matches(std::vector<FuzzyMatch>& matches) {
  std::stable_sort(matches.begin(), matches.end(), [](const FuzzyMatch& a, const FuzzyMatch& b) {
    return a.similarity() > b.similarity();
  });
}

TermPair::TermPair(std::string source_term, std::string target_term, std::uint64_t frequency)
    : source_term_(text::trim(source_term)),
      target_term_(text::trim(target_term)),
      frequency_(frequency) {
  if (source_term_.empty() || target_term_.empty())
    throw Error(ErrorCode::EmptySide, "term pair sides must be non-empty");
  if (frequency_ < 1) throw Error(ErrorCode::InvalidArgument, "term frequency must be >= 1");
  src_ngram_len_ = text::split_whitespace(source_term_).size();
}

void SamplingParams::validate() const {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "top_p must be in (0, 1]");
  if (!(temperature >= 0.0) || !std::isfinite(temperature))
    throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
  if (top_k < 0) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 0");
  if (num_hypotheses < 1) throw Error(ErrorCode::InvalidArgument, "num_hypotheses must be >= 1");
  if (max_new_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_new_tokens must be >= 1");
}

// JSON -----------------------------------------------------------------

namespace {

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::InvalidArgument, std::string("missing field: ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad field ") + key + ": " + e.what());
  }
}

}  // namespace

void to_json(nlohmann::json& j, const LangCode& v) {
  j = nlohmann::json{{"code", v.code()}, {"display_name", v.display_name()}};
}

void from_json(const nlohmann::json& j, LangCode& v) {
  if (j.is_string()) {
    v = LangCode::from_code(j.get<std::string>());
    return;
  }
  v = LangCode(required<std::string>(j, "code"), required<std::string>(j, "display_name"));
}

void to_json(nlohmann::json& j, const TranslationUnit& v) {
  j = nlohmann::json{{"id", v.id()},
                     {"source", v.source()},
                     {"target", v.target()},
                     {"src_lang", v.src_lang()},
                     {"tgt_lang", v.tgt_lang()},
                     {"origin", std::string(to_string(v.origin()))},
                     {"created_at", v.created_at()}};
}

void from_json(const nlohmann::json& j, TranslationUnit& v) {
  RawUnit raw;
  raw.source = required<std::string>(j, "source");
  raw.target = required<std::string>(j, "target");
  raw.src_lang = required<LangCode>(j, "src_lang");
  raw.tgt_lang = required<LangCode>(j, "tgt_lang");
  if (j.contains("origin")) raw.origin = origin_from_string(required<std::string>(j, "origin"));
  if (j.contains("id")) raw.id = required<std::string>(j, "id");
  if (j.contains("created_at")) raw.created_at = required<Timestamp>(j, "created_at");
  v = validate_unit(raw);
}

void to_json(nlohmann::json& j, const FuzzyMatch& v) {
  j = nlohmann::json{{"unit", v.unit()}, {"similarity", v.similarity()}};
}

void from_json(const nlohmann::json& j, FuzzyMatch& v) {
  v = FuzzyMatch(required<TranslationUnit>(j, "unit"), required<double>(j, "similarity"));
}

void to_json(nlohmann::json& j, const TermPair& v) {
  j = nlohmann::json{{"source_term", v.source_term()},
                     {"target_term", v.target_term()},
                     {"frequency", v.frequency()},
                     {"src_ngram_len", v.src_ngram_len()}};
}

void from_json(const nlohmann::json& j, TermPair& v) {
  std::uint64_t freq = j.contains("frequency") ? required<std::uint64_t>(j, "frequency") : 1;
  v = TermPair(required<std::string>(j, "source_term"), required<std::string>(j, "target_term"), freq);
}

void to_json(nlohmann::json& j, const SamplingParams& v) {
  j = nlohmann::json{{"top_p", v.top_p},
                     {"temperature", v.temperature},
                     {"top_k", v.top_k},
                     {"num_hypotheses", v.num_hypotheses},
                     {"max_new_tokens", v.max_new_tokens},
                     {"stop_sequences", v.stop_sequences}};
}

void from_json(const nlohmann::json& j, SamplingParams& v) {
  SamplingParams p;
  if (j.contains("top_p")) p.top_p = required<double>(j, "top_p");
  if (j.contains("temperature")) p.temperature = required<double>(j, "temperature");
  if (j.contains("top_k")) p.top_k = required<int>(j, "top_k");
  if (j.contains("num_hypotheses")) p.num_hypotheses = required<int>(j, "num_hypotheses");
  if (j.contains("max_new_tokens")) p.max_new_tokens = required<int>(j, "max_new_tokens");
  if (j.contains("stop_sequences"))
    p.stop_sequences = required<std::vector<std::string>>(j, "stop_sequences");
  p.validate();
  v = std::move(p);
}

}  // namespace amt
