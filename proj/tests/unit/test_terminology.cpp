#include <gtest/gtest.h>

#include "amt/terminology.hpp"
#include "test_support.hpp"

using namespace amt;

namespace {

const LangCode kEn = LangCode::from_code("en");
const LangCode kEs = LangCode::from_code("es");

std::vector<UsageCount> rows_of(const nlohmann::json& j) { return j.at("rows").get<std::vector<UsageCount>>(); }

}  // namespace

TEST(ParseExtractedTerms, ToleratesNoise) {
  auto r = parse_extracted_terms(" high fever = fiebre alta\n2. patient = paciente\n3) noise line\n4. cough =\n", "=");
  ASSERT_EQ(r.terms.size(), 2u);
  EXPECT_EQ(r.terms[0], TermPair("high fever", "fiebre alta"));
  EXPECT_EQ(r.terms[1].target_term(), "paciente");
  EXPECT_EQ(r.skipped, 2u);
  EXPECT_THROW(parse_extracted_terms("nothing here", "="), Error);
  EXPECT_THROW(parse_extracted_terms("a = b", ""), Error);
}

TEST(Glossary, MatchesBruteForceOracle) {
  auto j = amt::testing::read_json(amt::testing::tests_dir() / "fixtures" / "glossary_oracle.json");
  StopwordSet sw;
  for (const auto& w : j.at("stopwords")) sw.insert(w.get<std::string>());
  for (const auto& c : j.at("corpora")) {
    std::vector<TermPair> occ;
    for (const auto& o : c.at("occurrences")) occ.emplace_back(o[0].get<std::string>(), o[1].get<std::string>());
    auto g = compile_glossary(occ, sw, kEn, kEs);
    const auto& exp = c.at("expected");
    ASSERT_EQ(g.size(), exp.size());
    for (std::size_t i = 0; i < exp.size(); ++i) {
      EXPECT_EQ(g.entries()[i].source_term(), exp[i][0].get<std::string>());
      EXPECT_EQ(g.entries()[i].target_term(), exp[i][1].get<std::string>());
      EXPECT_EQ(g.entries()[i].frequency(), exp[i][2].get<std::uint64_t>());
    }
  }
}

TEST(Glossary, InvariantsAndOverlap) {
  std::vector<TermPair> occ{{"blood pressure", "presión arterial", 3}, {"blood", "sangre", 2},
                            {"pressure", "presión", 2}, {"rare", "raro", 1}};
  auto g = compile_glossary(occ, {}, kEn, kEs);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g.entries()[0].source_term(), "blood pressure");
  GlossaryOptions o;
  o.drop_overlapping = true;
  EXPECT_EQ(compile_glossary(occ, {}, kEn, kEs, o).size(), 1u);
  EXPECT_THROW(Glossary(kEn, kEs, {TermPair("a", "b", 1)}), Error);
  EXPECT_THROW(Glossary(kEn, kEs, {TermPair("a", "b", 2), TermPair("a", "c", 3)}), Error);
}

TEST(Glossary, TsvRoundTrip) {
  auto g = compile_glossary({{"blood pressure", "presión arterial", 3}, {"fever", "fiebre", 2}}, {}, kEn, kEs);
  auto p = std::filesystem::temp_directory_path() / ("amt_gloss_" + std::to_string(::getpid()) + ".tsv");
  save_glossary_tsv(g, p);
  auto back = load_glossary_tsv(p, kEn, kEs);
  EXPECT_EQ(back.entries(), g.entries());
  std::filesystem::remove(p);
}

TEST(MatchTerms, SmallerLimitIsPrefix) {
  std::vector<TermPair> entries;
  const char* words[] = {"patient", "high", "fever", "cough", "mild", "child", "temperature", "has"};
  for (int i = 0; i < 8; ++i) entries.emplace_back(words[i], std::string("t") + words[i], 2 + i);
  entries.emplace_back("high fever", "fiebre alta", 4);
  Glossary g(kEn, kEs, entries);
  std::string src = "The patient has a high fever, the child has a mild cough and a high temperature.";
  auto ten = match_terms(src, g, 10);
  auto five = match_terms(src, g, 5);
  ASSERT_EQ(five.size(), 5u);
  EXPECT_TRUE(std::equal(five.begin(), five.end(), ten.begin()));
  EXPECT_EQ(ten[0].source_term(), "high fever");
  EXPECT_THROW(match_terms(src, g, 0), Error);
  EXPECT_TRUE(match_terms("nothing relevant", g, 5).empty());
}

TEST(TermUsed, Modes) {
  TermPair t("x", "Ministry");
  EXPECT_TRUE(term_used("The ministry said", t));
  EXPECT_FALSE(term_used("The ministryship said", t));
  EXPECT_TRUE(term_used("The ministryship said", t, TermMatchMode::Substring));
  EXPECT_FALSE(term_used("The ministry said", t, TermMatchMode::Exact));
  EXPECT_TRUE(term_used("病人发高烧了", TermPair("x", "发高烧")));
  EXPECT_THROW(term_used("", t), Error);
  auto m = missing_terms("The patient", {TermPair("a", "patient"), TermPair("b", "fever")});
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].target_term(), "fever");
}

TEST(UsageReport, DeEnBaseline) {
  auto r = usage_report(rows_of(amt::testing::read_json(amt::testing::tests_dir() / "fixtures" / "de_en_test.json")));
  EXPECT_NEAR(r.pair_avg("Baseline", "DE-EN"), 60.18, 1e-9);
}

TEST(UsageReport, PublishedTables) {
  for (auto name : {"term_usage_test.json", "term_usage_blind.json"}) {
    auto j = amt::testing::read_json(amt::testing::tests_dir() / "fixtures" / name);
    auto r = usage_report(rows_of(j));
    for (const auto& p : j.at("expected").at("pairs"))
      EXPECT_NEAR(r.pair_avg(p.at("system"), p.at("lang_pair")), p.at("avg_pct").get<double>(), 0.01) << name;
    for (const auto& s : j.at("expected").at("systems"))
      EXPECT_NEAR(r.system_avg(s.at("system")), s.at("avg_pct").get<double>(), 0.01) << name;
  }
}

TEST(UsageReport, Errors) {
  EXPECT_THROW(usage_report({}), Error);
  EXPECT_THROW(usage_report({{"s", "p", "t", 3, 4}}), Error);
  EXPECT_THROW(usage_report({{"s", "p", "t", 0, 0}}), Error);
}

TEST(RoundHalfUp, BinaryTolerance) {
  EXPECT_DOUBLE_EQ(round_half_up(60.175), 60.18);
  EXPECT_DOUBLE_EQ(round_half_up(2.5, 0), 3.0);
  EXPECT_DOUBLE_EQ(round_half_up(1.004), 1.0);
}

TEST(CountUsage, AggregatesPerTermSet) {
  std::vector<TermEvalItem> items{
      {"The Federal Ministry funds research.", {TermPair("a", "Federal Ministry"), TermPair("b", "funding")}, "terms_1"},
      {"Research is funded.", {TermPair("c", "research")}, "terms_2"},
  };
  auto rows = count_usage(items, "Sys", "DE-EN");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].total, 2u);
  EXPECT_EQ(rows[0].used, 1u);
  EXPECT_EQ(rows[1].used, 1u);
}
