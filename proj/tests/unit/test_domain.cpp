#include <gtest/gtest.h>

#include <algorithm>
#include <thread>

#include <nlohmann/json.hpp>

#include "amt/domain.hpp"
#include "amt/text.hpp"
#include "test_support.hpp"

using namespace amt;
using amt::testing::unit;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no amt::Error thrown";
  return ErrorCode::NotFound;
}

}  // namespace

TEST(LangCode, KnownCodesHaveEnglishDisplayNames) {
  EXPECT_EQ(LangCode::from_code("ar").display_name(), "Arabic");
  EXPECT_EQ(LangCode::from_code("zh").display_name(), "Chinese");
  EXPECT_EQ(LangCode::from_code("rw").display_name(), "Kinyarwanda");
  EXPECT_EQ(code_of([] { LangCode::from_code("xx"); }), ErrorCode::InvalidArgument);
}

TEST(TranslationUnit, ValidationTrimsAndRejects) {
  auto u = unit("  fever ", "\tfiebre\n", "en", "es");
  EXPECT_EQ(u.source(), "fever");
  EXPECT_EQ(u.target(), "fiebre");
  EXPECT_EQ(u.origin(), Origin::Authentic);
  EXPECT_EQ(u.id().rfind("u-", 0), 0u);
  EXPECT_EQ(code_of([] { unit("   ", "x", "en", "es"); }), ErrorCode::EmptySide);
  EXPECT_EQ(code_of([] { unit("x", "y", "en", "en"); }), ErrorCode::SameLanguage);
}

TEST(TranslationUnit, JsonRoundTrip) {
  auto u = unit("The patient has a high fever.", "El paciente tiene fiebre alta.", "en", "es");
  nlohmann::json j = u;
  EXPECT_EQ(j.at("src_lang").at("code"), "en");
  auto back = j.get<TranslationUnit>();
  EXPECT_EQ(back, u);
}

TEST(IdGenerator, IdsAreUniqueAcrossThreads) {
  IdGenerator ids(42);
  std::vector<std::string> all(4000);
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t)
    ts.emplace_back([&, t] {
      for (int i = 0; i < 1000; ++i) all[t * 1000 + i] = ids.next();
    });
  for (auto& t : ts) t.join();
  std::sort(all.begin(), all.end());
  EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
}

TEST(FuzzyMatch, SimilarityRangeAndSort) {
  auto u = unit("a b", "c d", "en", "es");
  EXPECT_EQ(code_of([&] { FuzzyMatch(u, 1.5); }), ErrorCode::InvalidArgument);
  std::vector<FuzzyMatch> m{FuzzyMatch(u, 0.2), FuzzyMatch(u, 0.9), FuzzyMatch(u, 0.5)};
  sort_matches(m);
  EXPECT_DOUBLE_EQ(m[0].similarity(), 0.9);
  EXPECT_DOUBLE_EQ(m[2].similarity(), 0.2);
}

TEST(TermPair, NgramLengthAndValidation) {
  TermPair t(" blood  pressure ", "presión arterial");
  EXPECT_EQ(t.src_ngram_len(), 2u);
  EXPECT_EQ(t.frequency(), 1u);
  EXPECT_EQ(code_of([] { TermPair("", "x"); }), ErrorCode::EmptySide);
  EXPECT_EQ(code_of([] { TermPair("x", "y", 0); }), ErrorCode::InvalidArgument);
}

TEST(SamplingParams, Validation) {
  SamplingParams p;
  EXPECT_NO_THROW(p.validate());
  p.top_p = 0;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidArgument);
}

TEST(Error, MessageCarriesCode) {
  Error e(ErrorCode::EmptySide, "source is empty");
  EXPECT_STREQ(e.what(), "EmptySide: source is empty");
  EXPECT_EQ(e.detail(), "source is empty");
  EXPECT_EQ(to_string(ErrorCode::PartialBatch), "PartialBatch");
}

TEST(Text, CasefoldAndNfc) {
  EXPECT_EQ(text::casefold("Straße"), "strasse");
  // e + combining acute composes to U+00E9.
  EXPECT_EQ(text::nfc("e\xCC\x81"), "\xC3\xA9");
}

TEST(Text, WordCount) {
  EXPECT_EQ(text::word_count("one two  three"), 3u);
  EXPECT_EQ(text::word_count("病人发烧"), 2u);
  EXPECT_EQ(text::word_count("病人发烧了"), 3u);
  EXPECT_EQ(text::word_count(""), 0u);
}

TEST(Text, WordTokenizeDropsPunctuation) {
  auto w = text::word_tokenize("The follow-up visit, today.");
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w[1], "follow-up");
  EXPECT_EQ(w[3], "today");
}

TEST(Text, FirstLetterCase) {
  EXPECT_EQ(text::first_letter_case("  12 The"), text::LetterCase::Upper);
  EXPECT_EQ(text::first_letter_case("the"), text::LetterCase::Lower);
  EXPECT_EQ(text::first_letter_case("病人"), text::LetterCase::Uncased);
  EXPECT_EQ(text::first_letter_case("123"), text::LetterCase::NoLetter);
}
