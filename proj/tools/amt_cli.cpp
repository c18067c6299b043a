// amt: batch frontend for the workbench engine.
//
// Exit codes: 0 success, 1 domain error, 2 usage error. Data goes to
// stdout, diagnostics to stderr.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "amt/corpus_pipeline.hpp"
#include "amt/server.hpp"
#include "amt/text.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
  bool json_out = false;
  std::size_t threads = 1;
};

struct LangPair {
  amt::LangCode src, tgt;
};

LangPair parse_langs(const std::string& s) {
  auto comma = s.find(',');
  if (comma == std::string::npos) throw amt::Error(amt::ErrorCode::InvalidArgument, "--langs needs src,tgt");
  return {amt::LangCode::from_code(s.substr(0, comma)), amt::LangCode::from_code(s.substr(comma + 1))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw amt::Error(amt::ErrorCode::Io, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& p) {
  try {
    return json::parse(slurp(p));
  } catch (const json::parse_error& e) {
    throw amt::Error(amt::ErrorCode::InvalidArgument, p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw amt::Error(amt::ErrorCode::Io, "cannot write " + p.string());
  out << s;
}

std::vector<amt::TranslationUnit> load_units(const fs::path& path, const LangPair& lp) {
  amt::CorpusFile f{path, amt::format_for(path), 0};
  auto r = amt::load_corpus(f, lp.src, lp.tgt);
  for (const auto& s : r.skipped) std::cerr << path.string() << ":" << s.line_no << ": skipped (" << s.reason << ")\n";
  return std::move(r.units);
}

void write_units(const fs::path& path, const std::vector<amt::TranslationUnit>& units) {
  if (amt::format_for(path) == amt::CorpusFormat::JsonlUnits)
    amt::save_units_jsonl(path, units);
  else
    amt::save_tsv(path, units);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> out;
  for (auto& l : amt::text::split_lines(slurp(path)))
    if (!amt::text::trim(l).empty()) out.push_back(std::move(l));
  return out;
}

// Occurrence files: TSV "source<TAB>target[<TAB>count]" per line, or a
// JSON array of {source, target, frequency}.
std::vector<amt::TermPair> load_occurrences(const fs::path& path) {
  std::vector<amt::TermPair> out;
  if (path.extension() == ".json") {
    for (const auto& t : read_json(path))
      out.emplace_back(t.at("source").get<std::string>(), t.at("target").get<std::string>(),
                       t.value("frequency", std::uint64_t{1}));
    return out;
  }
  std::size_t line_no = 0;
  for (const auto& line : amt::text::split_lines(slurp(path))) {
    ++line_no;
    if (amt::text::trim(line).empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
    if (cols.size() < 2 || cols.size() > 3) {
      std::cerr << path.string() << ":" << line_no << ": skipped (need 2 or 3 columns)\n";
      continue;
    }
    out.emplace_back(cols[0], cols[1], cols.size() == 3 ? std::stoull(cols[2]) : 1);
  }
  return out;
}

amt::BackendConfig backend_config(const std::string& kind, const std::string& endpoint, const std::string& fallback) {
  amt::BackendConfig cfg;
  cfg.kind = kind == "http" ? amt::BackendConfig::Kind::HttpCompletion : amt::BackendConfig::Kind::Mock;
  if (kind != "http" && kind != "mock") throw amt::Error(amt::ErrorCode::InvalidArgument, "--backend is mock or http");
  cfg.endpoint = endpoint;
  cfg.mock_fallback = fallback;
  cfg.validate();
  return cfg;
}

void emit(const Globals& g, const json& j, const std::string& plain) {
  if (g.json_out)
    std::cout << j.dump() << "\n";
  else
    std::cout << plain;
}

// ---- subcommands ------------------------------------------------------------------

struct FilterArgs {
  std::string in, out, report, langs;
  std::size_t max_len = 200;
  double max_ratio = 2.0;
  bool keep_html = false;
  double sem_threshold = -2.0;
  std::size_t dim = 384;
};

int run_filter(const Globals& g, const FilterArgs& a) {
  auto lp = parse_langs(a.langs);
  amt::FilterConfig cfg;
  cfg.max_len_words = a.max_len;
  cfg.max_ratio = a.max_ratio;
  cfg.drop_html = !a.keep_html;
  cfg.validate();
  auto units = load_units(a.in, lp);
  auto [kept, report] = amt::rule_filter(units, cfg);
  if (a.sem_threshold > -2.0) {
    amt::HashEmbedder emb(a.dim);
    auto [sem_kept, sem_report] = amt::semantic_filter(kept, emb, a.sem_threshold);
    for (const auto& [rule, n] : sem_report.dropped_by_rule) report.dropped_by_rule[rule] += n;
    report.kept = sem_report.kept;
    kept = std::move(sem_kept);
  }
  std::string out = a.out;
  if (out.empty()) {
    fs::path p(a.in);
    out = (p.parent_path() / (p.stem().string() + ".kept" + p.extension().string())).string();
  }
  write_units(out, kept);
  json rj = report;
  if (!a.report.empty()) write_text(a.report, rj.dump(2) + "\n");
  std::ostringstream plain;
  plain << "input " << report.input << " kept " << report.kept << " dropped " << report.dropped() << "\n";
  for (const auto& [rule, n] : report.dropped_by_rule) plain << "  " << rule << " " << n << "\n";
  emit(g, rj, plain.str());
  return 0;
}

struct IndexArgs {
  std::string tm, langs, out, index, query;
  std::size_t dim = 384, nlist = 0, k = 10, nprobe = 32;
  std::uint64_t seed = 7;
};

std::unique_ptr<amt::Project> make_project(const std::string& tm, const LangPair& lp) {
  auto p = std::make_unique<amt::Project>("cli", "cli", lp.src, lp.tgt);
  p->add_units(load_units(tm, lp));
  return p;
}

int run_index_build(const Globals& g, const IndexArgs& a) {
  auto lp = parse_langs(a.langs);
  auto project = make_project(a.tm, lp);
  amt::HashEmbedder emb(a.dim);
  amt::IndexBuildOptions opts;
  opts.nlist = a.nlist;
  opts.seed = a.seed;
  auto idx = amt::TmIndex::build(*project, emb, opts);
  idx.index().save(a.out);
  json j{{"indexed", idx.indexed_count()}, {"nlist", idx.index().nlist()}, {"dim", a.dim}, {"out", a.out}};
  emit(g, j, "indexed " + std::to_string(idx.indexed_count()) + " units into " + std::to_string(idx.index().nlist()) +
                 " lists -> " + a.out + "\n");
  return 0;
}

int run_index_search(const Globals& g, const IndexArgs& a) {
  auto lp = parse_langs(a.langs);
  auto project = make_project(a.tm, lp);
  auto ivf = amt::IvfIndex::load(a.index);
  amt::HashEmbedder emb(ivf.dim());
  amt::TmIndex idx(std::move(ivf), project->size());
  amt::RetrievalConfig rc;
  rc.top_k = a.k;
  rc.nprobe = a.nprobe;
  rc.exclude_exact_self = false;
  auto matches = amt::top_fuzzy(*project, idx, emb, a.query, rc);
  json j = json::array();
  std::ostringstream plain;
  for (const auto& m : matches) {
    j.push_back(json{{"similarity", m.similarity()}, {"source", m.unit().source()}, {"target", m.unit().target()}});
    plain << std::fixed << std::setprecision(4) << m.similarity() << "\t" << m.unit().source() << "\t"
          << m.unit().target() << "\n";
  }
  emit(g, j, plain.str());
  return 0;
}

struct GlossaryArgs {
  std::string occurrences, langs, stopwords = "data/stopwords", out, glossary, source;
  bool drop_overlapping = false;
  std::size_t max_terms = 10;
};

int run_glossary_compile(const Globals& g, const GlossaryArgs& a) {
  auto lp = parse_langs(a.langs);
  auto stop = amt::load_stopwords_for(a.stopwords, lp.src);
  for (auto& w : amt::load_stopwords_for(a.stopwords, lp.tgt)) stop.insert(w);
  amt::GlossaryOptions opts;
  opts.drop_overlapping = a.drop_overlapping;
  auto glossary = amt::compile_glossary(load_occurrences(a.occurrences), stop, lp.src, lp.tgt, opts);
  if (!a.out.empty()) amt::save_glossary_tsv(glossary, a.out);
  std::ostringstream plain;
  for (const auto& e : glossary.entries())
    plain << e.source_term() << "\t" << e.target_term() << "\t" << e.frequency() << "\n";
  emit(g, json(glossary), a.out.empty() ? plain.str() : std::to_string(glossary.size()) + " entries -> " + a.out + "\n");
  return 0;
}

int run_glossary_match(const Globals& g, const GlossaryArgs& a) {
  auto lp = parse_langs(a.langs);
  auto glossary = amt::load_glossary_tsv(a.glossary, lp.src, lp.tgt);
  auto terms = amt::match_terms(a.source, glossary, a.max_terms);
  std::ostringstream plain;
  for (const auto& t : terms) plain << t.source_term() << "\t" << t.target_term() << "\n";
  emit(g, json(terms), plain.str());
  return 0;
}

struct TranslateArgs {
  std::string tm, langs, mode = "zero_shot", glossary, source, in, backend = "mock", endpoint,
                             fallback = "upper_query";
  std::size_t k = 0, max_terms = 0, dim = 384;
  bool trace = false;
  std::uint64_t seed = 7;
};

int run_translate(const Globals& g, const TranslateArgs& a) {
  auto lp = parse_langs(a.langs);
  amt::ServiceConfig cfg;
  cfg.backend = backend_config(a.backend, a.endpoint, a.fallback);
  cfg.embedder.dim = a.dim;
  cfg.index.seed = a.seed;
  amt::Service svc(cfg);
  svc.create_project(json{{"id", "cli"}, {"src_lang", lp.src.code()}, {"tgt_lang", lp.tgt.code()}});
  if (!a.tm.empty()) {
    auto units = load_units(a.tm, lp);
    json arr = json::array();
    for (const auto& u : units) arr.push_back(json{{"source", u.source()}, {"target", u.target()}});
    svc.add_units("cli", json{{"units", arr}});
    if (!units.empty()) svc.rebuild_index("cli", json::object());
  }
  if (!a.glossary.empty()) {
    auto gl = amt::load_glossary_tsv(a.glossary, lp.src, lp.tgt);
    svc.compile_glossary("cli", json{{"occurrences", gl.entries()}});
  }
  std::vector<std::string> sources;
  if (!a.in.empty()) sources = read_lines(a.in);
  if (!a.source.empty()) sources.push_back(a.source);
  if (sources.empty()) throw amt::Error(amt::ErrorCode::EmptyInput, "nothing to translate (--source or --in)");
  for (const auto& s : sources) {
    json req{{"source", s}, {"mode", a.mode}, {"include_trace", a.trace}};
    if (a.k) req["k"] = a.k;
    if (a.max_terms) req["max_terms"] = a.max_terms;
    auto resp = svc.translate("cli", amt::parse_translate_request(req));
    std::string plain = resp.translation + "\n";
    if (a.trace && resp.prompt_trace) plain = resp.prompt_trace->text + "\n---\n" + plain;
    emit(g, amt::to_json(resp), plain);
  }
  return 0;
}

struct WlacArgs {
  std::string fixture, source, left, right, typed, suite, endpoint;
  int hyps = 10, top_k = 10, runs = 1;
  double temp_lo = 1.0, temp_hi = 1.3;
  std::uint64_t seed = 7;
};

std::shared_ptr<amt::Sampler> wlac_sampler(const WlacArgs& a) {
  if (!a.endpoint.empty()) return std::make_shared<amt::HttpSampler>(a.endpoint, "", std::chrono::milliseconds(30000));
  if (a.fixture.empty()) throw amt::Error(amt::ErrorCode::InvalidArgument, "--fixture or --endpoint required");
  // A suite file carries its fixture under "sampler".
  auto j = read_json(a.fixture);
  return std::make_shared<amt::FixtureSampler>(amt::FixtureSampler::from_json(j.contains("sampler") ? j.at("sampler") : j));
}

amt::WlacConfig wlac_config(const WlacArgs& a) {
  amt::WlacConfig c;
  c.num_hypotheses = a.hyps;
  c.top_k = a.top_k;
  c.max_runs = a.runs;
  c.temp_lo = a.temp_lo;
  c.temp_hi = a.temp_hi;
  c.seed = a.seed;
  c.validate();
  return c;
}

int run_wlac_run(const Globals& g, const WlacArgs& a) {
  auto sampler = wlac_sampler(a);
  amt::DefaultTokenizer tok;
  auto r = amt::autocomplete({a.source, a.left, a.right, a.typed}, *sampler, tok, wlac_config(a));
  emit(g, json(r), (r.word ? *r.word : std::string("<none>")) + "\n");
  return 0;
}

// Suite: JSON array of {source, left, right, typed, gold}.
int run_wlac_eval(const Globals& g, const WlacArgs& a) {
  auto sampler = wlac_sampler(a);
  amt::DefaultTokenizer tok;
  auto cfg = wlac_config(a);
  std::vector<std::pair<amt::WlacResult, std::string>> results;
  auto suite = read_json(a.suite);
  if (suite.is_object()) suite = suite.at("queries");
  for (const auto& q : suite) {
    amt::WlacQuery query{q.at("source").get<std::string>(), q.value("left", std::string()),
                         q.value("right", std::string()), q.at("typed").get<std::string>()};
    results.emplace_back(amt::autocomplete(query, *sampler, tok, cfg), q.at("gold").get<std::string>());
  }
  double acc = amt::wlac_accuracy(results);
  std::size_t hits = 0;
  for (const auto& [r, gold] : results) hits += r.word && *r.word == gold;
  std::ostringstream plain;
  plain << std::fixed << std::setprecision(4) << acc << "\n";
  emit(g, json{{"accuracy", acc}, {"hits", hits}, {"total", results.size()}}, plain.str());
  return 0;
}

struct SynthArgs {
  std::string terms, langs, in, out, backend = "mock", endpoint, fallback = "echo";
  std::size_t n = 20;
  int hyps = 5;
  std::uint64_t seed = 7;
};

int run_synth_generate(const Globals& g, const SynthArgs& a) {
  auto lp = parse_langs(a.langs);
  amt::GenerationJob job;
  for (const auto& t : read_lines(a.terms)) job.prompts.push_back(amt::render_synth_gen(t, a.n, lp.src, lp.tgt).text);
  job.params.num_hypotheses = a.hyps;
  job.parallelism = g.threads;
  amt::BackendGenerationProvider provider(amt::make_backend(backend_config(a.backend, a.endpoint, a.fallback)));
  auto result = amt::generate_synthetic(job, provider);
  std::ostringstream lines;
  for (const auto& e : result.entries)
    lines << json{{"prompt_index", e.prompt_index}, {"prompt", e.prompt}, {"generations", e.generations}}.dump()
          << "\n";
  for (const auto& f : result.failures)
    std::cerr << "prompt " << f.prompt_index << " failed: " << amt::to_string(f.code) << ": " << f.message << "\n";
  if (!a.out.empty())
    write_text(a.out, lines.str());
  else
    std::cout << lines.str();
  if (g.json_out && !a.out.empty())
    std::cout << json{{"entries", result.entries.size()}, {"failures", result.failures.size()}}.dump() << "\n";
  return result.failures.empty() ? 0 : 1;
}

// Input: plain text, or JSONL from `synth generate` (all generations used).
int run_synth_parse(const Globals& g, const SynthArgs& a) {
  auto lp = parse_langs(a.langs);
  std::string text = slurp(a.in);
  if (fs::path(a.in).extension() == ".jsonl") {
    std::string joined;
    for (const auto& line : amt::text::split_lines(text)) {
      if (amt::text::trim(line).empty()) continue;
      for (const auto& gen : json::parse(line).at("generations")) joined += gen.get<std::string>() + "\n";
    }
    text = std::move(joined);
  }
  auto parsed = amt::parse_bilingual_generation(text, lp.src, lp.tgt);
  if (!a.out.empty()) write_units(a.out, parsed.units);
  std::ostringstream plain;
  if (a.out.empty())
    for (const auto& u : parsed.units) plain << u.source() << "\t" << u.target() << "\n";
  else
    plain << parsed.units.size() << " units, " << parsed.skipped << " skipped -> " << a.out << "\n";
  emit(g, json{{"units", parsed.units.size()}, {"skipped", parsed.skipped}}, plain.str());
  return 0;
}

struct EvalArgs {
  std::string rows, items, system = "system", pair = "src-tgt";
};

int run_evaluate_terms(const Globals& g, const EvalArgs& a) {
  std::vector<amt::UsageCount> rows;
  if (!a.rows.empty()) {
    auto j = read_json(a.rows);
    rows = (j.is_object() ? j.at("rows") : j).get<std::vector<amt::UsageCount>>();
  } else if (!a.items.empty()) {
    std::vector<amt::TermEvalItem> items;
    for (const auto& it : read_json(a.items))
      items.push_back({it.value("translation", std::string()), it.at("term_set").get<std::vector<amt::TermPair>>(),
                       it.value("term_set_label", std::string("terms"))});
    rows = amt::count_usage(items, a.system, a.pair);
  } else {
    throw amt::Error(amt::ErrorCode::InvalidArgument, "--rows or --items required");
  }
  auto report = amt::usage_report(rows);
  std::ostringstream plain;
  plain << std::fixed << std::setprecision(2);
  for (const auto& p : report.pairs) plain << p.system << "\t" << p.lang_pair << "\t" << p.avg_pct << "\n";
  bool multi_pair = report.pairs.size() > report.systems.size();
  if (multi_pair)
    for (const auto& s : report.systems) plain << s.system << "\tAverage\t" << s.avg_pct << "\n";
  emit(g, json(report), plain.str());
  return 0;
}

struct ServeArgs {
  std::string config, host, data_dir;
  int port = -1;
};

amt::HttpServer* g_server = nullptr;

int run_serve(const ServeArgs& a) {
  json j = a.config.empty() ? json::object() : read_json(a.config);
  if (const char* env = std::getenv("AMT_API_KEY")) j["api_key"] = env;
  if (const char* env = std::getenv("AMT_BACKEND_ENDPOINT")) {
    j["backend"]["kind"] = "http_completion";
    j["backend"]["endpoint"] = env;
  }
  if (const char* env = std::getenv("AMT_TOKEN_POLICY")) j["token_policy"] = read_json(env);
  if (!a.host.empty()) j["host"] = a.host;
  if (a.port >= 0) j["port"] = a.port;
  if (!a.data_dir.empty()) j["data_dir"] = a.data_dir;
  auto cfg = amt::load_service_config(j);
  amt::Service svc(cfg);
  amt::HttpServer server(svc);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cerr << "listening on " << cfg.host << ":" << cfg.port << "\n";
  server.run(cfg.host, cfg.port);
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive MT workbench engine"};
  app.set_config("--config", "", "TOML/INI file pre-populating flags");
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json_out, "Machine-readable JSON on stdout");
  app.add_option("--threads", g.threads, "Worker cap")->check(CLI::PositiveNumber);

  std::function<int()> action;

  FilterArgs fa;
  auto* filter = app.add_subcommand("filter", "Rule-based (and optional semantic) corpus filtering");
  filter->add_option("--in", fa.in, "Input corpus (.tsv or .jsonl)")->required()->check(CLI::ExistingFile);
  filter->add_option("--langs", fa.langs, "src,tgt")->required();
  filter->add_option("--out", fa.out, "Kept units (default <in>.kept.<ext>)");
  filter->add_option("--report", fa.report, "Write the filter report JSON here");
  filter->add_option("--max-len", fa.max_len, "Max words per side");
  filter->add_option("--max-ratio", fa.max_ratio, "Max word-count ratio");
  filter->add_flag("--keep-html", fa.keep_html, "Do not drop units with HTML tags");
  filter->add_option("--semantic-threshold", fa.sem_threshold, "Also drop pairs below this cosine");
  filter->add_option("--dim", fa.dim, "Embedding dimension for the semantic filter");
  filter->callback([&] { action = [&] { return run_filter(g, fa); }; });

  IndexArgs ia;
  auto* index = app.add_subcommand("index", "IVF index over a TM")->require_subcommand(1);
  auto* ibuild = index->add_subcommand("build", "Build and save an index snapshot");
  ibuild->add_option("--tm", ia.tm, "TM corpus")->required()->check(CLI::ExistingFile);
  ibuild->add_option("--langs", ia.langs, "src,tgt")->required();
  ibuild->add_option("--out", ia.out, "Snapshot path")->required();
  ibuild->add_option("--dim", ia.dim, "Embedding dimension");
  ibuild->add_option("--nlist", ia.nlist, "Number of lists (0: automatic)");
  ibuild->add_option("--seed", ia.seed, "k-means seed");
  ibuild->callback([&] { action = [&] { return run_index_build(g, ia); }; });
  auto* isearch = index->add_subcommand("search", "Fuzzy-match search");
  isearch->add_option("--tm", ia.tm, "TM corpus the index was built from")->required()->check(CLI::ExistingFile);
  isearch->add_option("--langs", ia.langs, "src,tgt")->required();
  isearch->add_option("--index", ia.index, "Snapshot path")->required()->check(CLI::ExistingFile);
  isearch->add_option("--query", ia.query, "Source segment")->required();
  isearch->add_option("--k", ia.k, "Matches to return");
  isearch->add_option("--nprobe", ia.nprobe, "Lists to scan");
  isearch->callback([&] { action = [&] { return run_index_search(g, ia); }; });

  GlossaryArgs ga;
  auto* glossary = app.add_subcommand("glossary", "Glossary compilation and matching")->require_subcommand(1);
  auto* gcompile = glossary->add_subcommand("compile", "Compile term occurrences into a glossary");
  gcompile->add_option("--occurrences", ga.occurrences, "TSV or JSON occurrences")->required()->check(CLI::ExistingFile);
  gcompile->add_option("--langs", ga.langs, "src,tgt")->required();
  gcompile->add_option("--stopwords", ga.stopwords, "Directory of <lang>.txt stopword lists");
  gcompile->add_option("--out", ga.out, "Glossary TSV");
  gcompile->add_flag("--drop-overlapping", ga.drop_overlapping, "Drop entries contained in longer ones");
  gcompile->callback([&] { action = [&] { return run_glossary_compile(g, ga); }; });
  auto* gmatch = glossary->add_subcommand("match", "Glossary terms occurring in a segment");
  gmatch->add_option("--glossary", ga.glossary, "Glossary TSV")->required()->check(CLI::ExistingFile);
  gmatch->add_option("--langs", ga.langs, "src,tgt")->required();
  gmatch->add_option("--source", ga.source, "Source segment")->required();
  gmatch->add_option("--max-terms", ga.max_terms, "Maximum terms");
  gmatch->callback([&] { action = [&] { return run_glossary_match(g, ga); }; });

  TranslateArgs ta;
  auto* translate = app.add_subcommand("translate", "Adaptive translation through the completion backend");
  translate->add_option("--langs", ta.langs, "src,tgt")->required();
  translate->add_option("--tm", ta.tm, "TM corpus for fuzzy matches")->check(CLI::ExistingFile);
  translate->add_option("--glossary", ta.glossary, "Glossary TSV")->check(CLI::ExistingFile);
  translate->add_option("--mode", ta.mode, "zero_shot|fuzzy_k|fuzzy_plus_mt|terms_zero|terms_fuzzy|terms_glossary");
  translate->add_option("--k", ta.k, "Fuzzy matches");
  translate->add_option("--max-terms", ta.max_terms, "Terms in the prompt");
  translate->add_option("--source", ta.source, "Segment to translate");
  translate->add_option("--in", ta.in, "File with one segment per line")->check(CLI::ExistingFile);
  translate->add_option("--backend", ta.backend, "mock|http");
  translate->add_option("--endpoint", ta.endpoint, "Completion endpoint for --backend http");
  translate->add_option("--mock-fallback", ta.fallback, "Mock backend behaviour");
  translate->add_option("--dim", ta.dim, "Embedding dimension");
  translate->add_option("--seed", ta.seed, "Index seed");
  translate->add_flag("--include-trace", ta.trace, "Print the rendered prompt");
  translate->callback([&] { action = [&] { return run_translate(g, ta); }; });

  WlacArgs wa;
  auto* wlac = app.add_subcommand("wlac", "Word-level autocompletion")->require_subcommand(1);
  auto add_wlac_common = [&](CLI::App* c) {
    c->add_option("--fixture", wa.fixture, "Sampler fixture JSON")->check(CLI::ExistingFile);
    c->add_option("--endpoint", wa.endpoint, "Sampler endpoint");
    c->add_option("--hyps", wa.hyps, "Hypotheses per run");
    c->add_option("--top-k", wa.top_k, "top-k");
    c->add_option("--runs", wa.runs, "Maximum runs");
    c->add_option("--temp-lo", wa.temp_lo, "Lowest temperature");
    c->add_option("--temp-hi", wa.temp_hi, "Highest temperature");
    c->add_option("--seed", wa.seed, "Temperature schedule seed");
  };
  auto* wrun = wlac->add_subcommand("run", "Complete one typed sequence");
  add_wlac_common(wrun);
  wrun->add_option("--source", wa.source, "Source sentence")->required();
  wrun->add_option("--left", wa.left, "Left target context");
  wrun->add_option("--right", wa.right, "Right target context (ignored)");
  wrun->add_option("--typed", wa.typed, "Typed character sequence")->required();
  wrun->callback([&] { action = [&] { return run_wlac_run(g, wa); }; });
  auto* weval = wlac->add_subcommand("eval", "Accuracy over a query suite");
  add_wlac_common(weval);
  weval->add_option("--suite", wa.suite, "Suite JSON")->required()->check(CLI::ExistingFile);
  weval->callback([&] { action = [&] { return run_wlac_eval(g, wa); }; });

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Synthetic bilingual data")->require_subcommand(1);
  auto* sgen = synth->add_subcommand("generate", "Generate sentences for each term");
  sgen->add_option("--terms", sa.terms, "One term per line")->required()->check(CLI::ExistingFile);
  sgen->add_option("--langs", sa.langs, "src,tgt")->required();
  sgen->add_option("--n", sa.n, "Sentences per prompt");
  sgen->add_option("--hyps", sa.hyps, "Generations per prompt");
  sgen->add_option("--out", sa.out, "JSONL output");
  sgen->add_option("--backend", sa.backend, "mock|http");
  sgen->add_option("--endpoint", sa.endpoint, "Completion endpoint");
  sgen->add_option("--mock-fallback", sa.fallback, "Mock backend behaviour");
  sgen->add_option("--seed", sa.seed, "Unused by the mock backend");
  sgen->callback([&] { action = [&] { return run_synth_generate(g, sa); }; });
  auto* sparse = synth->add_subcommand("parse", "Parse generations into units");
  sparse->add_option("--in", sa.in, "Generation text or JSONL")->required()->check(CLI::ExistingFile);
  sparse->add_option("--langs", sa.langs, "src,tgt")->required();
  sparse->add_option("--out", sa.out, "Units (.tsv or .jsonl)");
  sparse->callback([&] { action = [&] { return run_synth_parse(g, sa); }; });

  EvalArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluation")->require_subcommand(1);
  auto* eterms = evaluate->add_subcommand("terms", "Term usage report");
  eterms->add_option("--rows", ea.rows, "Precomputed usage rows JSON")->check(CLI::ExistingFile);
  eterms->add_option("--items", ea.items, "Translations with term sets JSON")->check(CLI::ExistingFile);
  eterms->add_option("--system", ea.system, "System label for --items");
  eterms->add_option("--pair", ea.pair, "Language pair label for --items");
  eterms->callback([&] { action = [&] { return run_evaluate_terms(g, ea); }; });

  ServeArgs va;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--service-config", va.config, "Service JSON config")->check(CLI::ExistingFile);
  serve->add_option("--host", va.host, "Bind address");
  serve->add_option("--port", va.port, "Bind port");
  serve->add_option("--data-dir", va.data_dir, "Project store directory");
  serve->callback([&] { action = [&] { return run_serve(va); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    return action ? action() : 2;
  } catch (const amt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
