#include <gtest/gtest.h>

#include "amt/wlac.hpp"
#include "test_support.hpp"

using namespace amt;

namespace {

const nlohmann::json& suite() {
  static const auto j = amt::testing::read_json(amt::testing::tests_dir() / "fixtures" / "wlac_suite.json");
  return j;
}

WlacConfig config(int hyps, int k, int runs) {
  WlacConfig c;
  c.num_hypotheses = hyps;
  c.top_k = k;
  c.max_runs = runs;
  c.seed = 7;
  return c;
}

}  // namespace

TEST(Wlac, FindCompletionPrefersExactCase) {
  std::vector<std::string> c{"Fever", "fiebre", "fever"};
  EXPECT_EQ(find_completion(c, "fe"), 2u);
  EXPECT_EQ(find_completion(c, "Fi"), 1u);
  EXPECT_EQ(find_completion(c, "x"), std::nullopt);
}

TEST(Wlac, PrefixRule) {
  EXPECT_TRUE(prefix_applies("The patient"));
  EXPECT_TRUE(prefix_applies("病人"));
  EXPECT_TRUE(prefix_applies("42"));
  EXPECT_FALSE(prefix_applies("the"));
  EXPECT_FALSE(prefix_applies("   "));
  EXPECT_EQ(continuation_after("The patient has fever", "The patient"), "has fever");
  EXPECT_EQ(continuation_after("A child", "The patient"), "A child");
}

TEST(Wlac, TokenizerHandlesSentencePiece) {
  DefaultTokenizer t;
  EXPECT_EQ(t.detokenize({"\xE2\x96\x81The", "\xE2\x96\x81pat", "ient"}), "The patient");
  EXPECT_EQ(t.detokenize({"The", "patient"}), "The patient");
  EXPECT_EQ(t.words("high fever, today."), (std::vector<std::string>{"high", "fever", "today"}));
}

TEST(Wlac, ScheduleMatchesReferenceGenerator) {
  auto t = run_temperatures(config(20, 20, 5));
  const auto& want = suite().at("temperatures");
  ASSERT_EQ(t.size(), want.size());
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_DOUBLE_EQ(t[i], want[i].get<double>());
  auto c = config(1, 1, 3);
  c.temp_hi = c.temp_lo;
  EXPECT_EQ(run_temperatures(c), (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(temperature_bucket(1.2263), 1.2);
}

TEST(Wlac, SuiteMatchesOracle) {
  auto sampler = FixtureSampler::from_json(suite().at("sampler"));
  for (auto name : {"h10_k10_r1", "h20_k20_r1", "h20_k20_r5"}) {
    auto words = amt::testing::run_wlac_suite(suite(), name, sampler);
    for (std::size_t i = 0; i < words.size(); ++i) {
      const auto& e = suite().at("queries")[i].at("expected").at(name);
      std::optional<std::string> want;
      if (!e.is_null()) want = e.get<std::string>();
      EXPECT_EQ(words[i], want) << name << " query " << i;
    }
  }
}

TEST(Wlac, RightContextNeverReachesSampler) {
  auto inner = FixtureSampler::from_json(suite().at("sampler"));
  SpySampler a(inner), b(inner);
  DefaultTokenizer tok;
  auto cfg = config(10, 10, 5);
  for (const auto& q : suite().at("queries")) {
    WlacQuery x{q.at("source"), q.at("left"), "", q.at("typed")};
    WlacQuery y{q.at("source"), q.at("left"), "completely different right side", q.at("typed")};
    EXPECT_EQ(autocomplete(x, a, tok, cfg).word, autocomplete(y, b, tok, cfg).word);
  }
  EXPECT_EQ(a.requests(), b.requests());
}

TEST(Wlac, PrefixRequestsCarryLeftContext) {
  FixtureSampler inner;
  SpySampler spy(inner);
  DefaultTokenizer tok;
  autocomplete({"src", "The patient", "", "x"}, spy, tok, config(10, 10, 1));
  auto reqs = spy.requests();
  ASSERT_EQ(reqs.size(), 2u);
  EXPECT_EQ(reqs[0].target_prefix, std::nullopt);
  EXPECT_EQ(reqs[1].target_prefix, "The patient");
  EXPECT_EQ(reqs[1].n, 10);
}

TEST(Wlac, FixtureReplay) {
  FixtureSampler s;
  s.add("src", std::nullopt, 1.0, {{{"fiebre", "alta"}, 1}, {{"tos"}, 15}});
  DefaultTokenizer tok;
  auto r = autocomplete({"src", "", "", "to"}, s, tok, config(10, 10, 1));
  EXPECT_EQ(r.word, std::nullopt);
  r = autocomplete({"src", "", "", "to"}, s, tok, config(10, 20, 1));
  EXPECT_EQ(r.word, "tos");
  EXPECT_EQ(r.run_found, 1);
}

TEST(Wlac, Errors) {
  FunctionSampler bad([](const SampleRequest&) -> std::vector<TokenSeq> { throw std::runtime_error("down"); });
  DefaultTokenizer tok;
  try {
    autocomplete({"src", "", "", "a"}, bad, tok, config(1, 1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SamplerFailure);
  }
  EXPECT_THROW(autocomplete({"src", "", "", ""}, bad, tok, config(1, 1, 1)), Error);
  EXPECT_THROW(wlac_accuracy({}), Error);
}

TEST(Wlac, DeadlineBetweenRuns) {
  FixtureSampler empty;
  DefaultTokenizer tok;
  auto r = autocomplete({"src", "", "", "a"}, empty, tok, config(1, 1, 5), std::chrono::steady_clock::now());
  EXPECT_TRUE(r.timed_out);
  EXPECT_EQ(r.word, std::nullopt);
}
