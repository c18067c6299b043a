#include <gtest/gtest.h>

#include "amt/retrieval.hpp"
#include "test_support.hpp"

using namespace amt;
using amt::testing::unit;

namespace {

std::unique_ptr<Project> e2e_project() {
  auto p = std::make_unique<Project>("e2e", "e2e", LangCode::from_code("en"), LangCode::from_code("ar"));
  std::vector<TranslationUnit> us;
  for (const auto& u : amt::testing::e2e_tm()) us.push_back(unit(u.source, u.target, "en", "ar"));
  p->add_units(us);
  return p;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::NotFound;
}

}  // namespace

TEST(TopFuzzy, RanksByCosine) {
  auto p = e2e_project();
  HashEmbedder e;
  auto idx = TmIndex::build(*p, e);
  EXPECT_EQ(idx.index().nlist(), default_nlist(6));
  RetrievalConfig cfg;
  cfg.top_k = 2;
  auto m = top_fuzzy(*p, idx, e, amt::testing::e2e_query(), cfg);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].unit().source(), amt::testing::e2e_tm()[5].source);
  EXPECT_EQ(m[1].unit().source(), amt::testing::e2e_tm()[0].source);
  EXPECT_NEAR(m[0].similarity(), 0.778078, 1e-6);
}

TEST(TopFuzzy, ExactSelfIsExcludedOnlyWhenAsked) {
  auto p = e2e_project();
  HashEmbedder e;
  auto idx = TmIndex::build(*p, e);
  RetrievalConfig cfg;
  cfg.top_k = 1;
  auto m = top_fuzzy(*p, idx, e, amt::testing::e2e_tm()[0].source, cfg);
  EXPECT_NE(m[0].unit().source(), amt::testing::e2e_tm()[0].source);
  cfg.exclude_exact_self = false;
  m = top_fuzzy(*p, idx, e, amt::testing::e2e_tm()[0].source, cfg);
  EXPECT_EQ(m[0].unit().source(), amt::testing::e2e_tm()[0].source);
  EXPECT_NEAR(m[0].similarity(), 1.0, 1e-6);
}

TEST(TopFuzzy, MinSimilarityFilters) {
  auto p = e2e_project();
  HashEmbedder e;
  auto idx = TmIndex::build(*p, e);
  RetrievalConfig cfg;
  cfg.min_similarity = 0.5;
  auto m = top_fuzzy(*p, idx, e, amt::testing::e2e_query(), cfg);
  EXPECT_EQ(m.size(), 3u);
  for (const auto& x : m) EXPECT_GE(x.similarity(), 0.5);
}

TEST(TopFuzzy, EmptyAndStale) {
  Project empty("x", "x", LangCode::from_code("en"), LangCode::from_code("ar"));
  HashEmbedder e;
  EXPECT_EQ(code_of([&] { TmIndex::build(empty, e); }), ErrorCode::EmptyTm);

  auto p = e2e_project();
  auto idx = TmIndex::build(*p, e);
  p->approve_edit(amt::testing::e2e_query(), "المريض يعاني من ارتفاع في درجة الحرارة.");
  EXPECT_FALSE(idx.in_sync(*p));
  EXPECT_EQ(code_of([&] { top_fuzzy(*p, idx, e, "query"); }), ErrorCode::IndexStale);
  EXPECT_EQ(idx.refresh(*p, e), 1u);
  EXPECT_TRUE(idx.in_sync(*p));
  RetrievalConfig cfg;
  cfg.exclude_exact_self = false;
  auto m = top_fuzzy(*p, idx, e, amt::testing::e2e_query(), cfg);
  EXPECT_EQ(m[0].unit().origin(), Origin::ApprovedEdit);
}

TEST(MatchStats, BucketsAndOutOfRange) {
  auto u = unit("a", "b", "en", "es");
  std::vector<std::vector<FuzzyMatch>> per{{FuzzyMatch(u, 0.1), FuzzyMatch(u, 0.55)}, {FuzzyMatch(u, -0.2)}};
  auto h = match_stats(per, {0.0, 0.5, 1.0});
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(h.out_of_range, 1u);
  EXPECT_EQ(h.total(), 3u);
  EXPECT_EQ(code_of([&] { match_stats(per, {0.5, 0.5}); }), ErrorCode::BadEdges);
  EXPECT_EQ(code_of([&] { match_stats(per, {0.5}); }), ErrorCode::BadEdges);
}
