#include <gtest/gtest.h>

#include "amt/prompts.hpp"
#include "test_support.hpp"

using namespace amt;
using amt::testing::unit;

class Golden : public ::testing::TestWithParam<std::string> {};

TEST_P(Golden, RenderMatchesFile) {
  EXPECT_EQ(amt::testing::render_golden_case(GetParam()), amt::testing::golden(GetParam()));
}

INSTANTIATE_TEST_SUITE_P(Prompts, Golden,
                         ::testing::Values("zero_shot", "few_shot", "few_shot_one_mt", "few_shot_all_mt",
                                           "term_extract", "zero_shot_terms", "few_shot_fuzzy_terms",
                                           "few_shot_glossary_terms", "term_ape", "synth_term_gen",
                                           "prefix_augment"));

TEST(Prompts, EveryTemplateHasAGoldenAndNoPlaceholders) {
  for (auto t : all_templates()) {
    auto name = std::string(to_string(t));
    EXPECT_EQ(template_from_string(name), t);
    auto text = amt::testing::render_golden_case(name);
    EXPECT_FALSE(contains_placeholder(text)) << name;
  }
  EXPECT_THROW(template_from_string("nope"), Error);
}

TEST(Prompts, ExampleOrderDoesNotDependOnInputOrder) {
  auto en = LangCode::from_code("en");
  auto es = LangCode::from_code("es");
  FewShotExample a{FuzzyMatch(unit("aa", "AA", "en", "es"), 0.9), std::nullopt, {}};
  FewShotExample b{FuzzyMatch(unit("bb", "BB", "en", "es"), 0.5), std::nullopt, {}};
  FewShotExample c{FuzzyMatch(unit("cc", "CC", "en", "es"), 0.7), std::nullopt, {}};
  PromptSpec s1{Template::FewShot, {}};
  s1.bindings.src_lang = en;
  s1.bindings.tgt_lang = es;
  s1.bindings.segment = "dd";
  auto s2 = s1;
  s1.bindings.examples = {a, b, c};
  s2.bindings.examples = {c, a, b};
  auto r = render(s1);
  EXPECT_EQ(r.text, render(s2).text);
  EXPECT_EQ(r.text, "English: bb\nSpanish: BB\nEnglish: cc\nSpanish: CC\nEnglish: aa\nSpanish: AA\nEnglish: dd\nSpanish:");
}

TEST(Prompts, MissingSlotsAndEmptyCollections) {
  auto code = [](const PromptSpec& s) {
    try {
      render(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::NotFound;
  };
  PromptSpec s{Template::ZeroShot, {}};
  EXPECT_EQ(code(s), ErrorCode::MissingSlot);
  s.bindings.src_lang = LangCode::from_code("en");
  s.bindings.tgt_lang = LangCode::from_code("es");
  s.bindings.segment = "x";
  EXPECT_NO_THROW(render(s));
  s.tmpl = Template::FewShot;
  EXPECT_EQ(code(s), ErrorCode::EmptyMatches);
  s.tmpl = Template::ZeroShotTerms;
  EXPECT_EQ(render(s).text.find("Terms:"), std::string::npos);  // no line for an empty list
  s.tmpl = Template::FewShotOneMt;
  s.bindings.examples = {{FuzzyMatch(unit("a", "b", "en", "es"), 0.5), std::nullopt, {}}};
  EXPECT_EQ(code(s), ErrorCode::MissingSlot);
  s.tmpl = Template::FewShotAllMt;
  s.bindings.mt_segment = "y";
  EXPECT_EQ(code(s), ErrorCode::MissingSlot);  // example without MT
}

TEST(Prompts, SingularCountsStayLiteral) {
  auto pair = unit("fever", "fiebre", "en", "es");
  EXPECT_NE(render_term_extract(pair, 1, "=").text.find("Extract 1 terms"), std::string::npos);
  auto g = render_synth_gen("fever", 1, LangCode::from_code("en"), LangCode::from_code("es"));
  EXPECT_NE(g.text.find("just 1 numbered"), std::string::npos);
  EXPECT_THROW(render_synth_gen("fever", 0, LangCode::from_code("en"), LangCode::from_code("es")), Error);
}

TEST(Prompts, TermsBlock) {
  EXPECT_EQ(render_terms_block({TermPair("a", "b"), TermPair("c d", "e")}), "Terms: a = b - c d = e");
  EXPECT_THROW(render_terms_block({}), Error);
}

TEST(Prompts, PrefixAugmentRoundTrip) {
  auto fz = unit("El paciente tiene fiebre alta.", "The patient has a high fever.", "es", "en");
  auto r = render_prefix_augment("El paciente tiene tos.", fz, "spa_Latn", "eng_Latn");
  EXPECT_EQ(r.target_prefix, "The patient has a high fever. eng_Latn •");
  auto decoded = r.target_prefix + " The patient has a cough.";
  EXPECT_EQ(strip_target_prefix(decoded, r.target_prefix), "The patient has a cough.");
  EXPECT_EQ(strip_target_prefix("unrelated", r.target_prefix), "unrelated");
}

TEST(Prompts, ApeIsDeterministic) {
  auto de = LangCode::from_code("de");
  auto en = LangCode::from_code("en");
  std::vector<TermPair> t{TermPair("Forschung", "research")};
  auto a = render_term_ape(de, en, "Die Forschung.", "The science.", t);
  EXPECT_EQ(a.text, render_term_ape(de, en, "Die Forschung.", "The science.", t).text);
  EXPECT_EQ(a.expected_stop, "\n");
  EXPECT_THROW(render_term_ape(de, en, "Die Forschung.", "  ", t), Error);
}
