#pragma once

// Typed values shared by every module. Constructors validate their
// invariants and throw amt::Error; constructed values are immutable.

#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "amt/error.hpp"

namespace amt {

class LangCode {
 public:
  LangCode() = default;
  // Throws InvalidArgument if code is empty or not lowercase, or
  // display_name is empty.
  LangCode(std::string code, std::string display_name);

  // Looks up the display name in the built-in table (en, ar, zh, fr, es,
  // rw, de, cs, ...). Throws InvalidArgument for unknown codes.
  static LangCode from_code(std::string_view code);

  const std::string& code() const noexcept { return code_; }
  const std::string& display_name() const noexcept { return display_name_; }

  bool operator==(const LangCode& o) const { return code_ == o.code_; }

 private:
  std::string code_;
  std::string display_name_;
};

enum class Origin { Authentic, SyntheticLm, BackTranslated, ApprovedEdit, Machine };

std::string_view to_string(Origin o);
Origin origin_from_string(std::string_view s);

using Timestamp = std::int64_t;  // UTC epoch milliseconds

Timestamp now_ms();

// Thread-safe generator of opaque unit identifiers ("u-" + 16 hex digits).
class IdGenerator {
 public:
  IdGenerator();
  explicit IdGenerator(std::uint64_t seed);
  std::string next();

 private:
  std::mutex mu_;
  std::mt19937_64 rng_;
};

IdGenerator& default_id_generator();

class TranslationUnit {
 public:
  TranslationUnit() = default;

  const std::string& id() const noexcept { return id_; }
  const std::string& source() const noexcept { return source_; }
  const std::string& target() const noexcept { return target_; }
  const LangCode& src_lang() const noexcept { return src_lang_; }
  const LangCode& tgt_lang() const noexcept { return tgt_lang_; }
  Origin origin() const noexcept { return origin_; }
  Timestamp created_at() const noexcept { return created_at_; }

  bool operator==(const TranslationUnit& o) const;

 private:
  friend TranslationUnit make_unit(std::string, std::string, std::string, LangCode, LangCode,
                                   Origin, Timestamp);
  std::string id_;
  std::string source_;
  std::string target_;
  LangCode src_lang_;
  LangCode tgt_lang_;
  Origin origin_ = Origin::Authentic;
  Timestamp created_at_ = 0;
};

// Unvalidated input for validate_unit.
struct RawUnit {
  std::string source;
  std::string target;
  LangCode src_lang;
  LangCode tgt_lang;
  Origin origin = Origin::Authentic;
  std::optional<std::string> id;
  std::optional<Timestamp> created_at;
};

// Trims both sides; throws EmptySide or SameLanguage. Missing id and
// timestamp are generated.
TranslationUnit validate_unit(const RawUnit& raw, IdGenerator& ids = default_id_generator());

TranslationUnit make_unit(std::string id, std::string source, std::string target, LangCode src,
                          LangCode tgt, Origin origin, Timestamp created_at);

class FuzzyMatch {
 public:
  FuzzyMatch() = default;
  // Throws InvalidArgument when similarity is outside [-1, 1].
  FuzzyMatch(TranslationUnit unit, double similarity);

  const TranslationUnit& unit() const noexcept { return unit_; }
  double similarity() const noexcept { return similarity_; }

  bool operator==(const FuzzyMatch& o) const = default;

 private:
  TranslationUnit unit_;
  double similarity_ = 0.0;
};

// Sorts by similarity descending (stable).
void sort_matches(std::vector<FuzzyMatch>& matches);

class TermPair {
 public:
  TermPair() = default;
  // Trims both sides; src_ngram_len is the whitespace token count of the
  // source term. Throws EmptySide or InvalidArgument (frequency < 1).
  TermPair(std::string source_term, std::string target_term, std::uint64_t frequency = 1);

  const std::string& source_term() const noexcept { return source_term_; }
  const std::string& target_term() const noexcept { return target_term_; }
  std::uint64_t frequency() const noexcept { return frequency_; }
  std::size_t src_ngram_len() const noexcept { return src_ngram_len_; }

  bool operator==(const TermPair& o) const = default;

 private:
  std::string source_term_;
  std::string target_term_;
  std::uint64_t frequency_ = 1;
  std::size_t src_ngram_len_ = 1;
};

struct SamplingParams {
  double top_p = 1.0;
  double temperature = 0.3;
  int top_k = 0;  // 0 = disabled
  int num_hypotheses = 1;
  int max_new_tokens = 256;
  std::vector<std::string> stop_sequences;

  // Throws InvalidArgument on any out-of-range field.
  void validate() const;

  bool operator==(const SamplingParams& o) const = default;
};

// Canonical JSON encoding (snake_case fields). from_json validates.
void to_json(nlohmann::json& j, const LangCode& v);
void from_json(const nlohmann::json& j, LangCode& v);
void to_json(nlohmann::json& j, const TranslationUnit& v);
void from_json(const nlohmann::json& j, TranslationUnit& v);
void to_json(nlohmann::json& j, const FuzzyMatch& v);
void from_json(const nlohmann::json& j, FuzzyMatch& v);
void to_json(nlohmann::json& j, const TermPair& v);
void from_json(const nlohmann::json& j, TermPair& v);
void to_json(nlohmann::json& j, const SamplingParams& v);
void from_json(const nlohmann::json& j, SamplingParams& v);

}  // namespace amt
