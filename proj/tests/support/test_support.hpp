#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "amt/domain.hpp"
#include "amt/embedder.hpp"
#include "amt/prompts.hpp"
#include "amt/wlac.hpp"

namespace amt::testing {

inline std::filesystem::path tests_dir() { return AMT_TESTS_DIR; }
inline std::filesystem::path source_dir() { return AMT_SOURCE_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(read_file(p)); }

inline std::string golden(const std::string& name) {
  return read_file(tests_dir() / "golden" / "prompts" / (name + ".txt"));
}

inline TranslationUnit unit(const std::string& s, const std::string& t, const std::string& src,
                            const std::string& tgt) {
  return validate_unit(RawUnit{s, t, LangCode::from_code(src), LangCode::from_code(tgt), Origin::Authentic,
                               std::nullopt, std::nullopt});
}

// The English-Arabic TM behind the two-shot golden and the end-to-end flow.
struct E2eUnit {
  const char* source;
  const char* target;
};
inline const std::vector<E2eUnit>& e2e_tm() {
  static const std::vector<E2eUnit> tm{
      {"The patient has a high fever.", "المريض يعاني من حمى شديدة."},
      {"The patient has a mild cough.", "المريض يعاني من سعال خفيف."},
      {"Wash your hands with soap and water.", "اغسل يديك بالماء والصابون."},
      {"The clinic opens at eight in the morning.", "تفتح العيادة في الثامنة صباحا."},
      {"Drink plenty of fluids every day.", "اشرب الكثير من السوائل كل يوم."},
      {"The child has a high temperature.", "الطفل يعاني من ارتفاع في درجة الحرارة."},
  };
  return tm;
}
inline const char* e2e_query() { return "The patient has a high temperature."; }

// Renders template `name` from the bindings its golden file was written
// for. prefix_augment yields "augmented_source\ntarget_prefix".
inline std::string render_golden_case(const std::string& name) {
  const auto en = LangCode::from_code("en");
  const auto es = LangCode::from_code("es");
  const auto tm = [](const char* s, const char* t, const char* a, const char* b, double sim) {
    return FuzzyMatch(unit(s, t, a, b), sim);
  };
  PromptSpec spec{template_from_string(name), {}};
  auto& b = spec.bindings;
  auto fuzzy_terms_examples = [&] {
    b.examples = {
        {tm("The patient has a high fever.", "El paciente tiene fiebre alta.", "en", "es", 0.81),
         std::nullopt,
         {TermPair("high fever", "fiebre alta"), TermPair("patient", "paciente")}},
        {tm("The patient has a mild cough.", "El paciente tiene una tos leve.", "en", "es", 0.64),
         std::nullopt,
         {TermPair("cough", "tos")}},
    };
  };
  if (name == "zero_shot") {
    b.src_lang = en;
    b.tgt_lang = LangCode::from_code("ar");
    b.segment = e2e_query();
  } else if (name == "few_shot") {
    b.src_lang = en;
    b.tgt_lang = LangCode::from_code("ar");
    b.segment = e2e_query();
    b.examples = {{tm(e2e_tm()[5].source, e2e_tm()[5].target, "en", "ar", 0.778078), std::nullopt, {}},
                  {tm(e2e_tm()[0].source, e2e_tm()[0].target, "en", "ar", 0.679119), std::nullopt, {}}};
  } else if (name == "few_shot_one_mt" || name == "few_shot_all_mt") {
    b.src_lang = en;
    b.tgt_lang = LangCode::from_code("zh");
    b.segment = e2e_query();
    b.mt_segment = "病人体温很高。";
    b.examples = {{tm("The child has a high temperature.", "孩子体温很高。", "en", "zh", 0.78), std::nullopt, {}},
                  {tm("The patient has a high fever.", "病人发高烧。", "en", "zh", 0.68), std::nullopt, {}}};
    if (name == "few_shot_all_mt") {
      b.examples[0].mt = "孩子有高温。";
      b.examples[1].mt = "病人发烧很高。";
    }
  } else if (name == "term_extract") {
    b.pair = unit("The patient has a high fever.", "El paciente tiene fiebre alta.", "en", "es");
    b.number = 5;
    b.separator = "=";
  } else if (name == "zero_shot_terms") {
    b.src_lang = en;
    b.tgt_lang = es;
    b.segment = "The patient has a high fever and a cough.";
    b.terms = {TermPair("high fever", "fiebre alta"), TermPair("patient", "paciente")};
  } else if (name == "few_shot_fuzzy_terms") {
    b.src_lang = en;
    b.tgt_lang = es;
    b.segment = "The patient has a high fever and a cough.";
    fuzzy_terms_examples();
    b.terms = {TermPair("high fever", "fiebre alta"), TermPair("cough", "tos")};
  } else if (name == "few_shot_glossary_terms") {
    b.src_lang = en;
    b.tgt_lang = es;
    b.segment = "The patient has a high fever and a cough.";
    fuzzy_terms_examples();
    b.terms = {TermPair("high fever", "fiebre alta"), TermPair("patient", "paciente"), TermPair("cough", "tos")};
  } else if (name == "term_ape") {
    b.src_lang = LangCode::from_code("de");
    b.tgt_lang = en;
    b.segment = "Das Bundesministerium unterstützt die Forschung mit neuer Förderung.";
    b.target_segment = "The federal department supports the science with new grants.";
    b.terms = {TermPair("Bundesministerium", "Federal Ministry"), TermPair("Forschung", "research"),
               TermPair("Förderung", "funding")};
  } else if (name == "synth_term_gen") {
    b.src_lang = LangCode::from_code("de");
    b.tgt_lang = en;
    b.term = "Federal Ministry of Science";
    b.count = 20;
  } else if (name == "prefix_augment") {
    b.segment = "El paciente tiene fiebre alta y tos.";
    b.pair = unit("El paciente tiene fiebre alta.", "The patient has a high fever.", "es", "en");
    b.src_code = "spa_Latn";
    b.tgt_code = "eng_Latn";
  }
  auto r = render(spec);
  if (r.target_prefix) return r.text + "\n" + *r.target_prefix;
  return r.text;
}

// Gaussian blobs on the unit sphere: `centers` random directions, each
// point a center plus N(0, spread) noise.
inline std::vector<Embedding> gaussian_blobs(std::size_t n, std::size_t dim, std::size_t centers, double spread,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> c(centers, std::vector<double>(dim));
  for (auto& v : c)
    for (auto& x : v) x = g(rng);
  std::vector<Embedding> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& base = c[i % centers];
    std::vector<double> v(dim);
    for (std::size_t d = 0; d < dim; ++d) v[d] = base[d] + spread * g(rng);
    out.emplace_back(std::move(v));
  }
  return out;
}

inline std::vector<Embedding> random_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Embedding> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = g(rng);
    out.emplace_back(std::move(v));
  }
  return out;
}

// Runs every suite query under one named setting and returns the words
// produced, in query order.
inline std::vector<std::optional<std::string>> run_wlac_suite(const nlohmann::json& suite, const std::string& setting,
                                                              Sampler& sampler) {
  const auto& s = suite.at("settings").at(setting);
  WlacConfig cfg;
  cfg.num_hypotheses = s.at("num_hypotheses");
  cfg.top_k = s.at("top_k");
  cfg.max_runs = s.at("max_runs");
  cfg.temp_lo = suite.at("temp_lo");
  cfg.temp_hi = suite.at("temp_hi");
  cfg.seed = suite.at("seed").get<std::uint64_t>();
  DefaultTokenizer tok;
  std::vector<std::optional<std::string>> out;
  for (const auto& q : suite.at("queries")) {
    WlacQuery wq{q.at("source"), q.at("left"), q.at("right"), q.at("typed")};
    out.push_back(autocomplete(wq, sampler, tok, cfg).word);
  }
  return out;
}

inline double wlac_suite_accuracy(const nlohmann::json& suite, const std::vector<std::optional<std::string>>& words) {
  std::vector<std::pair<WlacResult, std::string>> rs;
  for (std::size_t i = 0; i < words.size(); ++i) {
    WlacResult r;
    r.word = words[i];
    rs.emplace_back(r, suite.at("queries")[i].at("gold").get<std::string>());
  }
  return wlac_accuracy(rs);
}

}  // namespace amt::testing
