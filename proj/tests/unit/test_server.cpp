#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "amt/server.hpp"
#include "test_support.hpp"

using namespace amt;
using json = nlohmann::json;

namespace {

ServiceConfig base_config() {
  ServiceConfig c;
  c.stopword_dir = amt::testing::source_dir() / "data" / "stopwords";
  return c;
}

json e2e_units() {
  json us = json::array();
  for (const auto& u : amt::testing::e2e_tm()) us.push_back({{"source", u.source}, {"target", u.target}});
  return {{"units", us}};
}

std::string seed_e2e(Service& s) {
  auto p = s.create_project({{"src_lang", "en"}, {"tgt_lang", "ar"}, {"name", "clinic"}});
  auto id = p.at("id").get<std::string>();
  s.add_units(id, e2e_units());
  s.rebuild_index(id, json::object());
  return id;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::NotFound;
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("amt_srv_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(ServiceConfig, LoadOverridesDefaults) {
  auto c = load_service_config({{"port", 9001},
                                {"backend", {{"kind", "mock"}, {"batch_size", 5}}},
                                {"retrieval", {{"nprobe", 4}}},
                                {"wlac", {{"max_runs", 2}}}});
  EXPECT_EQ(c.port, 9001);
  EXPECT_EQ(c.backend.batch_size, 5u);
  EXPECT_EQ(c.retrieval.nprobe, 4u);
  EXPECT_EQ(c.wlac.max_runs, 2);
  EXPECT_EQ(c.wlac.num_hypotheses, 10);
}

TEST(TranslateRequest, Validation) {
  EXPECT_EQ(code_of([] { parse_translate_request({{"source", ""}}); }), ErrorCode::EmptySide);
  EXPECT_EQ(code_of([] { parse_translate_request({{"source", "x"}, {"mode", "fuzzy_k"}}); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_translate_request({{"source", "x"}, {"mode", "terms_zero"}}); }),
            ErrorCode::InvalidArgument);
  auto r = parse_translate_request({{"source", "x"}, {"mode", "fuzzy_k"}, {"k", 2}, {"include_trace", true}});
  EXPECT_EQ(r.mode, TranslateMode::FuzzyK);
  EXPECT_EQ(r.k, 2u);
  EXPECT_TRUE(r.include_trace);
}

TEST(Service, ProjectLifecycle) {
  Service s(base_config());
  EXPECT_EQ(code_of([&] { s.create_project({{"src_lang", "en"}, {"tgt_lang", "en"}}); }), ErrorCode::SameLanguage);
  auto id = seed_e2e(s);
  auto p = s.get_project(id);
  EXPECT_EQ(p.at("tm_size"), 6);
  EXPECT_EQ(p.at("indexed"), 6);
  EXPECT_EQ(s.list_projects().size(), 1u);
  EXPECT_EQ(code_of([&] { s.get_project("missing"); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([&] { s.create_project({{"id", id}, {"src_lang", "en"}, {"tgt_lang", "ar"}}); }),
            ErrorCode::DuplicateId);
}

TEST(Service, UploadWithoutRebuildIsStale) {
  Service s(base_config());
  auto id = s.create_project({{"src_lang", "en"}, {"tgt_lang", "ar"}}).at("id").get<std::string>();
  json fuzzy{{"source", "The patient."}, {"mode", "fuzzy_k"}, {"k", 2}};
  EXPECT_EQ(code_of([&] { s.translate_json(id, fuzzy); }), ErrorCode::EmptyTm);
  auto r = s.add_units(id, {{"content", "fever\tحمى\nbad line\n"}, {"format", "tsv"}});
  EXPECT_EQ(r.at("added"), 1);
  EXPECT_EQ(r.at("skipped").size(), 1u);
  EXPECT_EQ(code_of([&] { s.translate_json(id, fuzzy); }), ErrorCode::IndexStale);
}

TEST(Service, TranslateTraceMatchesGolden) {
  Service s(base_config());
  auto id = seed_e2e(s);
  auto r = s.translate_json(
      id, {{"source", amt::testing::e2e_query()}, {"mode", "fuzzy_k"}, {"k", 2}, {"include_trace", true}});
  EXPECT_EQ(r.at("prompt_trace").at("text"), amt::testing::golden("few_shot"));
  EXPECT_EQ(r.at("template"), "few_shot");
  EXPECT_EQ(r.at("fuzzy_matches").size(), 2u);
  EXPECT_EQ(r.at("translation"), "THE PATIENT HAS A HIGH TEMPERATURE.");

  auto z = s.translate_json(id, {{"source", amt::testing::e2e_query()}});
  EXPECT_EQ(z.at("template"), "zero_shot");
  EXPECT_FALSE(z.contains("prompt_trace"));
}

TEST(Service, ApproveRefreshesIndex) {
  Service s(base_config());
  auto id = seed_e2e(s);
  auto a = s.approve(id, {{"source", amt::testing::e2e_query()}, {"edited_target", "المريض حرارته مرتفعة."}});
  EXPECT_EQ(a.at("tm_size"), 7);
  EXPECT_EQ(a.at("indexed"), 7);
  auto r = s.translate_json(id, {{"source", amt::testing::e2e_query()}, {"mode", "fuzzy_k"}, {"k", 2}});
  EXPECT_EQ(r.at("fuzzy_matches")[0].at("source"), amt::testing::e2e_query());
  EXPECT_EQ(code_of([&] { s.approve(id, {{"source", "x"}, {"edited_target", " "}}); }), ErrorCode::EmptySide);
}

TEST(Service, ApproveCanRetrainSynchronously) {
  Service s(base_config());
  auto id = seed_e2e(s);
  auto before = s.get_project(id).at("nlist");
  auto a = s.approve(id, {{"source", "Take one tablet."}, {"target", "خذ قرصا واحدا."}, {"retrain", true}});
  EXPECT_EQ(a.at("indexed"), 7);
  EXPECT_EQ(s.get_project(id).at("nlist"), default_nlist(7));
  EXPECT_NE(before, json());
}

TEST(Service, GlossaryAndTermsModes) {
  Service s(base_config());
  auto id = s.create_project({{"src_lang", "en"}, {"tgt_lang", "es"}}).at("id").get<std::string>();
  json q{{"source", "The patient has a high fever."}, {"mode", "terms_glossary"}, {"k", 1}, {"max_terms", 5}};
  EXPECT_EQ(code_of([&] { s.get_glossary(id); }), ErrorCode::NotFound);
  auto g = s.compile_glossary(
      id, {{"occurrences", json::array({json::array({"high fever", "fiebre alta"}), json::array({"high fever", "fiebre alta"}),
                                        json::array({"the", "el"}), json::array({"the", "el"})})}});
  EXPECT_EQ(g.at("entries").size(), 1u);
  EXPECT_EQ(s.get_glossary(id).at("entries").size(), 1u);
  auto z = s.translate_json(id, {{"source", "The patient has a high fever."}, {"mode", "terms_zero"}, {"max_terms", 5}});
  EXPECT_EQ(z.at("template"), "zero_shot_terms");
  EXPECT_EQ(z.at("terms_used_in_prompt").size(), 1u);
}

TEST(Service, TermApeInsertsMissingTerms) {
  auto cfg = base_config();
  Service s(cfg, std::make_shared<MockBackend>(MockBackend::Fallback::InsertTerms));
  auto id = s.create_project({{"src_lang", "de"}, {"tgt_lang", "en"}}).at("id").get<std::string>();
  json terms = json::array({json::array({"Forschung", "research"}), json::array({"Förderung", "funding"})});
  auto r = s.term_ape(id, {{"source", "Die Forschung und Förderung."}, {"translation", "The research and grants."},
                           {"term_set", terms}});
  EXPECT_EQ(r.at("missing_before").size(), 1u);
  EXPECT_EQ(r.at("missing_after").size(), 0u);
  EXPECT_EQ(r.at("backend_calls"), 2);  // temperatures 0 and 0.2
  EXPECT_EQ(r.at("temperature"), 0.0);
  auto none = s.term_ape(id, {{"source", "Die Forschung."}, {"translation", "The research funding."},
                              {"term_set", terms}});
  EXPECT_EQ(none.at("backend_calls"), 0);
  EXPECT_EQ(none.at("post_edited"), "The research funding.");
}

TEST(Service, EvaluateTerms) {
  Service s(base_config());
  auto id = s.create_project({{"src_lang", "de"}, {"tgt_lang", "en"}}).at("id").get<std::string>();
  auto r = s.evaluate_terms(id, amt::testing::read_json(amt::testing::tests_dir() / "fixtures" / "de_en_test.json"));
  EXPECT_NEAR(r.at("avg_pct").get<double>(), 60.18, 1e-9);
}

TEST(Service, AutocompleteUsesSamplerAndDeadline) {
  auto fast = std::make_shared<FunctionSampler>(
      [](const SampleRequest&) { return std::vector<TokenSeq>{{"high", "fever"}}; });
  Service s(base_config(), std::make_shared<MockBackend>(), fast);
  auto id = s.create_project({{"src_lang", "en"}, {"tgt_lang", "es"}}).at("id").get<std::string>();
  auto r = s.autocomplete_json(id, {{"source", "x"}, {"left", "the"}, {"typed", "fe"}});
  EXPECT_EQ(r.at("word"), "fever");

  auto cfg = base_config();
  cfg.autocomplete_deadline = std::chrono::milliseconds(50);
  auto slow = std::make_shared<FunctionSampler>([](const SampleRequest&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    return std::vector<TokenSeq>{};
  });
  Service s2(cfg, std::make_shared<MockBackend>(), slow);
  auto id2 = s2.create_project({{"src_lang", "en"}, {"tgt_lang", "es"}}).at("id").get<std::string>();
  EXPECT_EQ(code_of([&] { s2.autocomplete(id2, {"x", "", "", "a"}); }), ErrorCode::Timeout);
}

TEST(Service, PersistenceSurvivesRestart) {
  auto cfg = base_config();
  cfg.data_dir = fresh_dir("persist");
  std::string id;
  {
    Service s(cfg);
    id = seed_e2e(s);
    s.approve(id, {{"source", amt::testing::e2e_query()}, {"edited_target", "نص"}});
  }
  Service again(cfg);
  auto p = again.get_project(id);
  EXPECT_EQ(p.at("tm_size"), 7);
  EXPECT_EQ(p.at("indexed"), 7);
  std::filesystem::remove_all(*cfg.data_dir);
}

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(ErrorCode::NotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::IndexStale), 409);
  EXPECT_EQ(http_status(ErrorCode::BackendError), 502);
  EXPECT_EQ(http_status(ErrorCode::Timeout), 504);
  EXPECT_EQ(http_status(ErrorCode::EmptySide), 422);
}

TEST(HttpServer, RoutesAuthAndErrors) {
  auto cfg = base_config();
  cfg.api_key = "secret";
  Service s(cfg);
  HttpServer http(s);
  int port = http.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client c("127.0.0.1", port);
  httplib::Headers auth{{"Authorization", "Bearer secret"}};

  auto h = c.Get("/healthz");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);
  auto denied = c.Get("/projects");
  ASSERT_TRUE(denied);
  EXPECT_EQ(denied->status, 401);

  auto created = c.Post("/projects", auth, R"({"src_lang":"en","tgt_lang":"ar"})", "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  auto id = json::parse(created->body).at("id").get<std::string>();

  auto missing = c.Get("/projects/nope", auth);
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto body = json::parse(missing->body);
  EXPECT_EQ(body.at("code"), "NotFound");
  EXPECT_TRUE(body.contains("message"));

  auto bad = c.Post("/projects/" + id + "/translate", {{"X-API-Key", "secret"}}, R"({"source":""})",
                    "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 422);
  auto garbage = c.Post("/projects/" + id + "/translate", auth, "{not json", "application/json");
  ASSERT_TRUE(garbage);
  EXPECT_EQ(garbage->status, 422);
  http.stop();
}
