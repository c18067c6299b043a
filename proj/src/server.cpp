#include "amt/server.hpp"

#include <fstream>
#include <future>

#include <httplib.h>

#include "amt/text.hpp"

namespace amt {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

const json& require_field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name) || j.at(name).is_null())
    throw Error(ErrorCode::InvalidArgument, std::string("missing field '") + name + "'");
  return j.at(name);
}

std::string require_string(const json& j, const char* name) {
  const auto& v = require_field(j, name);
  if (!v.is_string()) throw Error(ErrorCode::InvalidArgument, std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::size_t> optional_count(const json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  const auto& v = j.at(name);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw Error(ErrorCode::InvalidArgument, std::string("field '") + name + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<TermPair> parse_terms(const json& j) {
  std::vector<TermPair> out;
  if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, "term set must be an array");
  for (const auto& t : j) {
    if (t.is_array() && t.size() == 2) {
      out.emplace_back(t[0].get<std::string>(), t[1].get<std::string>());
      continue;
    }
    std::string s = t.contains("source_term") ? t.at("source_term").get<std::string>() : require_string(t, "source");
    std::string g = t.contains("target_term") ? t.at("target_term").get<std::string>() : require_string(t, "target");
    out.emplace_back(s, g, t.value("frequency", std::uint64_t{1}));
  }
  return out;
}

json match_summary(const FuzzyMatch& m) {
  return json{{"unit_id", m.unit().id()},
              {"source", m.unit().source()},
              {"target", m.unit().target()},
              {"similarity", m.similarity()}};
}

// First non-empty line of a post-editing completion, without a leading
// "<Lang>: " label.
std::string clean_ape_output(const std::string& completion, const LangCode& tgt) {
  for (const auto& line : text::split_lines(completion)) {
    auto t = text::trim(line);
    if (t.empty()) continue;
    std::string label = tgt.display_name() + ":";
    if (text::starts_with(t, label)) t = text::trim(t.substr(label.size()));
    return std::string(t);
  }
  return {};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

bool valid_project_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
  return true;
}

}  // namespace

// ---- config and requests ---------------------------------------------------------

void ServiceConfig::validate() const {
  embedder.validate();
  backend.validate();
  token_policy.validate();
  retrieval.validate();
  wlac.validate();
  if (refresh_every < 1) throw Error(ErrorCode::InvalidArgument, "refresh_every must be >= 1");
  if (extract_number < 1) throw Error(ErrorCode::InvalidArgument, "extract_number must be >= 1");
  if (extract_separator.empty()) throw Error(ErrorCode::InvalidArgument, "extract_separator is empty");
  if (port < 0 || port > 65535) throw Error(ErrorCode::InvalidArgument, "port out of range");
}

ServiceConfig load_service_config(const json& j) {
  ServiceConfig c;
  try {
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.api_key = j.value("api_key", c.api_key);
    if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
    c.stopword_dir = j.value("stopword_dir", c.stopword_dir.string());
    c.refresh_every = j.value("refresh_every", c.refresh_every);
    c.retrain_on_approve = j.value("retrain_on_approve", c.retrain_on_approve);
    c.extract_number = j.value("extract_number", c.extract_number);
    c.extract_separator = j.value("extract_separator", c.extract_separator);
    c.autocomplete_deadline = std::chrono::milliseconds(j.value("autocomplete_deadline_ms", c.autocomplete_deadline.count()));
    c.sampler_endpoint = j.value("sampler_endpoint", c.sampler_endpoint);
    if (j.contains("sampler_fixture")) c.sampler_fixture = j.at("sampler_fixture").get<std::string>();
    if (j.contains("embedder")) {
      const auto& e = j.at("embedder");
      auto provider = e.value("provider", std::string("hash"));
      c.embedder.provider = provider == "remote" ? EmbedderProvider::Remote : EmbedderProvider::DeterministicHash;
      c.embedder.dim = e.value("dim", c.embedder.dim);
      c.embedder.endpoint = e.value("endpoint", c.embedder.endpoint);
      c.embedder.auth_token = e.value("auth_token", c.embedder.auth_token);
    }
    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      auto kind = b.value("kind", std::string("mock"));
      c.backend.kind = kind == "http_completion" ? BackendConfig::Kind::HttpCompletion : BackendConfig::Kind::Mock;
      c.backend.endpoint = b.value("endpoint", c.backend.endpoint);
      c.backend.auth_token = b.value("auth_token", c.backend.auth_token);
      c.backend.batch_size = b.value("batch_size", c.backend.batch_size);
      c.backend.retries = b.value("retries", c.backend.retries);
      c.backend.timeout = std::chrono::milliseconds(b.value("timeout_ms", c.backend.timeout.count()));
      c.backend.requests_per_minute = b.value("requests_per_minute", c.backend.requests_per_minute);
      c.backend.mock_fallback = b.value("mock_fallback", c.backend.mock_fallback);
    }
    if (j.contains("token_policy")) c.token_policy = load_token_policy(j.at("token_policy"));
    if (j.contains("retrieval")) {
      const auto& r = j.at("retrieval");
      c.retrieval.nprobe = r.value("nprobe", c.retrieval.nprobe);
      c.retrieval.exclude_exact_self = r.value("exclude_exact_self", c.retrieval.exclude_exact_self);
      c.retrieval.min_similarity = r.value("min_similarity", c.retrieval.min_similarity);
    }
    if (j.contains("index")) {
      c.index.nlist = j.at("index").value("nlist", c.index.nlist);
      c.index.seed = j.at("index").value("seed", c.index.seed);
    }
    if (j.contains("wlac")) {
      const auto& w = j.at("wlac");
      c.wlac.num_hypotheses = w.value("num_hypotheses", c.wlac.num_hypotheses);
      c.wlac.top_k = w.value("top_k", c.wlac.top_k);
      c.wlac.max_runs = w.value("max_runs", c.wlac.max_runs);
      c.wlac.temp_lo = w.value("temp_lo", c.wlac.temp_lo);
      c.wlac.temp_hi = w.value("temp_hi", c.wlac.temp_hi);
      if (w.contains("seed")) c.wlac.seed = w.at("seed").get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad service config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string_view to_string(TranslateMode m) {
  switch (m) {
    case TranslateMode::ZeroShot: return "zero_shot";
    case TranslateMode::FuzzyK: return "fuzzy_k";
    case TranslateMode::FuzzyPlusMt: return "fuzzy_plus_mt";
    case TranslateMode::TermsZero: return "terms_zero";
    case TranslateMode::TermsFuzzy: return "terms_fuzzy";
    case TranslateMode::TermsGlossary: return "terms_glossary";
  }
  return "unknown";
}

TranslateMode translate_mode_from_string(std::string_view s) {
  for (auto m : {TranslateMode::ZeroShot, TranslateMode::FuzzyK, TranslateMode::FuzzyPlusMt, TranslateMode::TermsZero,
                 TranslateMode::TermsFuzzy, TranslateMode::TermsGlossary})
    if (to_string(m) == s) return m;
  throw Error(ErrorCode::InvalidArgument, "unknown translate mode '" + std::string(s) + "'");
}

namespace {
bool needs_k(TranslateMode m) {
  return m == TranslateMode::FuzzyK || m == TranslateMode::FuzzyPlusMt || m == TranslateMode::TermsFuzzy ||
         m == TranslateMode::TermsGlossary;
}
bool needs_terms(TranslateMode m) {
  return m == TranslateMode::TermsZero || m == TranslateMode::TermsFuzzy || m == TranslateMode::TermsGlossary;
}
}  // namespace

void TranslateRequest::validate() const {
  if (text::trim(source).empty()) throw Error(ErrorCode::EmptySide, "source is empty");
  if (needs_k(mode) && (!k || *k < 1))
    throw Error(ErrorCode::InvalidArgument, std::string("mode ") + std::string(to_string(mode)) + " needs k >= 1");
  if (needs_terms(mode) && (!max_terms || *max_terms < 1))
    throw Error(ErrorCode::InvalidArgument,
                std::string("mode ") + std::string(to_string(mode)) + " needs max_terms >= 1");
}

TranslateRequest parse_translate_request(const json& j) {
  TranslateRequest r;
  r.source = require_string(j, "source");
  r.mode = translate_mode_from_string(j.value("mode", std::string("zero_shot")));
  r.k = optional_count(j, "k");
  r.max_terms = optional_count(j, "max_terms");
  r.include_trace = j.value("include_trace", false);
  r.validate();
  return r;
}

json to_json(const RenderedPrompt& p, Template t) {
  json j{{"template", std::string(to_string(t))}, {"text", p.text}, {"slots_used", p.slots_used}};
  j["expected_stop"] = p.expected_stop ? json(*p.expected_stop) : json();
  if (p.target_prefix) j["target_prefix"] = *p.target_prefix;
  return j;
}

json to_json(const TranslateResponse& r) {
  json j{{"translation", r.translation},
         {"terms_used_in_prompt", r.terms_used_in_prompt},
         {"template", std::string(to_string(r.template_used))},
         {"latency_ms", r.latency_ms}};
  auto& matches = j["fuzzy_matches"] = json::array();
  for (const auto& m : r.fuzzy_matches) matches.push_back(match_summary(m));
  if (r.prompt_trace) j["prompt_trace"] = to_json(*r.prompt_trace, r.template_used);
  return j;
}

// ---- service ---------------------------------------------------------------------

struct Service::ProjectState {
  std::unique_ptr<Project> project;
  std::mutex write_mu;  // approve, upload, compile, rebuild
  mutable std::shared_mutex index_mu;
  std::optional<TmIndex> index;
  std::size_t pending_approvals = 0;
  mutable std::shared_mutex terms_mu;
  std::optional<Glossary> glossary;
  std::map<std::string, std::vector<TermPair>> unit_terms;
  std::optional<std::filesystem::path> dir;
};

Service::Service(ServiceConfig cfg) : Service(cfg, nullptr, nullptr, nullptr) {}

Service::Service(ServiceConfig cfg, std::shared_ptr<CompletionBackend> backend, std::shared_ptr<Sampler> sampler,
                 std::shared_ptr<Embedder> embedder)
    : cfg_((cfg.validate(), std::move(cfg))),
      embedder_(embedder ? std::move(embedder) : std::shared_ptr<Embedder>(make_embedder(cfg_.embedder))),
      backend_(backend ? std::move(backend) : make_backend(cfg_.backend)),
      gateway_(backend_, cfg_.backend),
      sampler_(std::move(sampler)) {
  if (!sampler_) {
    if (!cfg_.sampler_endpoint.empty())
      sampler_ = std::make_shared<HttpSampler>(cfg_.sampler_endpoint, cfg_.backend.auth_token, cfg_.backend.timeout);
    else if (cfg_.sampler_fixture)
      sampler_ = std::make_shared<FixtureSampler>(FixtureSampler::load(*cfg_.sampler_fixture));
  }
  if (cfg_.data_dir) load_projects();
}

Service::~Service() = default;

std::shared_ptr<Service::ProjectState> Service::state(const std::string& id) const {
  std::shared_lock lock(projects_mu_);
  auto it = projects_.find(id);
  if (it == projects_.end()) throw Error(ErrorCode::NotFound, "project '" + id + "' not found");
  return it->second;
}

void Service::persist_meta(const ProjectState& st) const {
  if (!st.dir) return;
  const auto& p = *st.project;
  json meta{{"id", p.id()}, {"name", p.name()}, {"src_lang", p.src_lang()}, {"tgt_lang", p.tgt_lang()}};
  if (auto ref = p.glossary_ref()) meta["glossary_ref"] = *ref;
  write_file(*st.dir / "project.json", meta.dump(2));
}

void Service::persist_glossary(const ProjectState& st) const {
  if (!st.dir) return;
  std::shared_lock lock(st.terms_mu);
  if (st.glossary) save_glossary_tsv(*st.glossary, *st.dir / "glossary.tsv");
  json terms = json::object();
  for (const auto& [id, ts] : st.unit_terms) terms[id] = ts;
  write_file(*st.dir / "unit_terms.json", terms.dump());
}

void Service::load_projects() {
  auto root = *cfg_.data_dir;
  std::filesystem::create_directories(root);
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    auto meta_path = entry.path() / "project.json";
    if (!entry.is_directory() || !std::filesystem::exists(meta_path)) continue;
    auto meta = json::parse(read_file(meta_path));
    auto st = std::make_shared<ProjectState>();
    LangCode src = meta.at("src_lang").get<LangCode>();
    LangCode tgt = meta.at("tgt_lang").get<LangCode>();
    st->project = std::make_unique<Project>(meta.at("id").get<std::string>(), meta.value("name", std::string()), src,
                                            tgt, ids_);
    st->dir = entry.path();
    auto units_path = entry.path() / "units.jsonl";
    if (std::filesystem::exists(units_path) && std::filesystem::file_size(units_path) > 0) {
      CorpusFile f{units_path, CorpusFormat::JsonlUnits, 0};
      st->project->add_units(load_corpus(f, src, tgt, ids_).units);
    }
    auto gloss_path = entry.path() / "glossary.tsv";
    if (std::filesystem::exists(gloss_path)) {
      st->glossary = load_glossary_tsv(gloss_path, src, tgt);
      st->project->set_glossary_ref(gloss_path.string());
    }
    auto terms_path = entry.path() / "unit_terms.json";
    if (std::filesystem::exists(terms_path))
      for (const auto& [id, ts] : json::parse(read_file(terms_path)).items())
        st->unit_terms[id] = ts.get<std::vector<TermPair>>();
    if (st->project->size() > 0) st->index = TmIndex::build(*st->project, *embedder_, cfg_.index);
    projects_[st->project->id()] = st;
  }
}

json Service::create_project(const json& body) {
  LangCode src = require_field(body, "src_lang").get<LangCode>();
  LangCode tgt = require_field(body, "tgt_lang").get<LangCode>();
  if (src == tgt) throw Error(ErrorCode::SameLanguage, "source and target language are both " + src.code());
  std::string id = body.contains("id") ? require_string(body, "id") : ids_.next();
  if (!valid_project_id(id)) throw Error(ErrorCode::InvalidArgument, "project id must be [A-Za-z0-9_-]{1,64}");
  auto st = std::make_shared<ProjectState>();
  st->project = std::make_unique<Project>(id, body.value("name", id), src, tgt, ids_);
  if (cfg_.data_dir) st->dir = *cfg_.data_dir / id;
  {
    std::unique_lock lock(projects_mu_);
    if (projects_.count(id)) throw Error(ErrorCode::DuplicateId, "project '" + id + "' exists");
    projects_[id] = st;
  }
  persist_meta(*st);
  return get_project(id);
}

json Service::get_project(const std::string& id) const {
  auto st = state(id);
  const auto& p = *st->project;
  json j{{"id", p.id()}, {"name", p.name()}, {"src_lang", p.src_lang()}, {"tgt_lang", p.tgt_lang()},
         {"tm_size", p.size()}};
  {
    std::shared_lock lock(st->index_mu);
    j["indexed"] = st->index ? st->index->indexed_count() : 0;
    j["nlist"] = st->index ? st->index->index().nlist() : 0;
  }
  std::shared_lock lock(st->terms_mu);
  j["glossary_size"] = st->glossary ? json(st->glossary->size()) : json();
  return j;
}

json Service::list_projects() const {
  std::vector<std::string> ids;
  {
    std::shared_lock lock(projects_mu_);
    for (const auto& [id, st] : projects_) ids.push_back(id);
  }
  json out = json::array();
  for (const auto& id : ids) out.push_back(get_project(id));
  return out;
}

json Service::add_units(const std::string& id, const json& body) {
  auto st = state(id);
  auto& p = *st->project;
  std::vector<TranslationUnit> units;
  std::vector<SkippedLine> skipped;
  if (body.contains("units")) {
    for (const auto& u : require_field(body, "units")) {
      RawUnit raw{require_string(u, "source"), require_string(u, "target"), p.src_lang(), p.tgt_lang(),
                  origin_from_string(u.value("origin", std::string("authentic"))), std::nullopt, std::nullopt};
      if (u.contains("id")) raw.id = u.at("id").get<std::string>();
      units.push_back(validate_unit(raw, ids_));
    }
  } else {
    auto format = body.value("format", std::string("tsv")) == "jsonl" ? CorpusFormat::JsonlUnits : CorpusFormat::TsvBitext;
    auto parsed = parse_corpus(require_string(body, "content"), format, p.src_lang(), p.tgt_lang(), ids_);
    units = std::move(parsed.units);
    skipped = std::move(parsed.skipped);
  }
  std::lock_guard write(st->write_mu);
  auto before = p.size();
  auto added = p.add_units(units);
  if (st->dir && added > 0) append_units_jsonl(*st->dir / "units.jsonl", p.units_from(before));
  json j{{"added", added}, {"tm_size", p.size()}, {"skipped", skipped.size()}};
  return j;
}

json Service::rebuild_index(const std::string& id, const json& body) {
  auto st = state(id);
  IndexBuildOptions opts = cfg_.index;
  if (auto n = optional_count(body, "nlist")) opts.nlist = *n;
  if (auto s = optional_count(body, "seed")) opts.seed = *s;
  std::lock_guard write(st->write_mu);
  auto built = TmIndex::build(*st->project, *embedder_, opts);
  std::unique_lock lock(st->index_mu);
  st->index = std::move(built);
  st->pending_approvals = 0;
  return json{{"indexed", st->index->indexed_count()}, {"nlist", st->index->index().nlist()}};
}

std::vector<FuzzyMatch> Service::retrieve(ProjectState& st, const std::string& source, std::size_t k) {
  std::shared_lock lock(st.index_mu);
  if (st.project->size() == 0) throw Error(ErrorCode::EmptyTm, "project " + st.project->id() + " has no units");
  if (!st.index) throw Error(ErrorCode::IndexStale, "index not built; call index/rebuild");
  RetrievalConfig rc = cfg_.retrieval;
  rc.top_k = k;
  return top_fuzzy(*st.project, *st.index, *embedder_, source, rc);
}

std::vector<TermPair> Service::terms_for_unit(const ProjectState& st, const TranslationUnit& u) const {
  std::shared_lock lock(st.terms_mu);
  if (auto it = st.unit_terms.find(u.id()); it != st.unit_terms.end()) return it->second;
  if (st.glossary) return match_terms(u.source(), *st.glossary, st.glossary->size() ? st.glossary->size() : 1);
  return {};
}

std::string Service::complete_translation(const RenderedPrompt& p, const std::string& source, const LangCode& tgt) {
  auto params = translation_params();
  params.max_new_tokens = max_tokens_for({source}, tgt, cfg_.token_policy);
  auto results = gateway_.complete_batch({p}, params);
  auto& r = results.front();
  if (!r.ok()) throw Error(*r.error, r.message);
  return truncate_overgeneration(*r.text);
}

TranslateResponse Service::translate(const std::string& id, const TranslateRequest& req) {
  req.validate();
  auto t0 = Clock::now();
  auto st = state(id);
  const auto& p = *st->project;

  PromptSpec spec;
  auto& b = spec.bindings;
  b.src_lang = p.src_lang();
  b.tgt_lang = p.tgt_lang();
  b.segment = req.source;

  TranslateResponse resp;
  if (needs_k(req.mode)) resp.fuzzy_matches = retrieve(*st, req.source, *req.k);
  bool have_matches = !resp.fuzzy_matches.empty();
  std::size_t max_terms = req.max_terms.value_or(1);

  auto examples_with_terms = [&](bool with_terms) {
    for (const auto& m : resp.fuzzy_matches) {
      FewShotExample ex{m, std::nullopt, {}};
      if (with_terms) {
        ex.terms = terms_for_unit(*st, m.unit());
        if (ex.terms.size() > max_terms) ex.terms.resize(max_terms);
      }
      b.examples.push_back(std::move(ex));
    }
  };
  auto require_glossary = [&]() -> Glossary {
    std::shared_lock lock(st->terms_mu);
    if (!st->glossary) throw Error(ErrorCode::NotFound, "glossary for project '" + id + "' not compiled");
    return *st->glossary;
  };

  switch (req.mode) {
    case TranslateMode::ZeroShot:
      spec.tmpl = Template::ZeroShot;
      break;
    case TranslateMode::FuzzyK:
      spec.tmpl = have_matches ? Template::FewShot : Template::ZeroShot;
      examples_with_terms(false);
      break;
    case TranslateMode::FuzzyPlusMt: {
      if (!have_matches) {
        spec.tmpl = Template::ZeroShot;
        break;
      }
      PromptSpec mt_spec{Template::ZeroShot, {}};
      mt_spec.bindings.src_lang = p.src_lang();
      mt_spec.bindings.tgt_lang = p.tgt_lang();
      mt_spec.bindings.segment = req.source;
      b.mt_segment = complete_translation(render(mt_spec), req.source, p.tgt_lang());
      if (text::trim(*b.mt_segment).empty()) {
        spec.tmpl = Template::FewShot;
        b.mt_segment.reset();
      } else {
        spec.tmpl = Template::FewShotOneMt;
      }
      examples_with_terms(false);
      break;
    }
    case TranslateMode::TermsZero:
      spec.tmpl = Template::ZeroShotTerms;
      b.terms = match_terms(req.source, require_glossary(), max_terms);
      break;
    case TranslateMode::TermsFuzzy: {
      spec.tmpl = have_matches ? Template::FewShotFuzzyTerms : Template::ZeroShotTerms;
      examples_with_terms(true);
      // Terms of the matches, best match first, that occur in the segment.
      std::vector<TermPair> pool;
      std::unordered_set<std::string> seen;
      auto ordered = resp.fuzzy_matches;
      sort_matches(ordered);
      for (const auto& m : ordered)
        for (const auto& t : terms_for_unit(*st, m.unit()))
          if (seen.insert(t.source_term()).second) pool.push_back(t);
      b.terms = match_terms(req.source, pool, max_terms);
      break;
    }
    case TranslateMode::TermsGlossary:
      spec.tmpl = have_matches ? Template::FewShotGlossaryTerms : Template::ZeroShotTerms;
      b.terms = match_terms(req.source, require_glossary(), max_terms);
      examples_with_terms(true);
      break;
  }

  auto rendered = render(spec);
  resp.translation = complete_translation(rendered, req.source, p.tgt_lang());
  resp.terms_used_in_prompt = b.terms;
  resp.template_used = spec.tmpl;
  if (req.include_trace) resp.prompt_trace = std::move(rendered);
  resp.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return resp;
}

json Service::translate_json(const std::string& id, const json& body) {
  return to_json(translate(id, parse_translate_request(body)));
}

WlacResult Service::autocomplete(const std::string& id, const WlacQuery& q) {
  q.validate();
  auto st = state(id);
  std::shared_ptr<Sampler> sampler = sampler_;
  if (!sampler) {
    // Offline fallback: targets of the nearest TM units.
    auto embedder = embedder_;
    auto retrieval = cfg_.retrieval;
    sampler = std::make_shared<FunctionSampler>([st, embedder, retrieval](const SampleRequest& r) {
      std::vector<TokenSeq> out;
      std::shared_lock lock(st->index_mu);
      if (!st->index || !st->index->in_sync(*st->project) || st->project->size() == 0) return out;
      auto rc = retrieval;
      rc.top_k = static_cast<std::size_t>(r.n);
      for (const auto& m : top_fuzzy(*st->project, *st->index, *embedder, r.source, rc)) {
        const auto& t = m.unit().target();
        if (r.target_prefix && !text::starts_with(t, *r.target_prefix)) continue;
        out.push_back(text::split_whitespace(t));
      }
      return out;
    });
  }
  auto deadline = Clock::now() + cfg_.autocomplete_deadline;
  auto promise = std::make_shared<std::promise<WlacResult>>();
  auto future = promise->get_future();
  auto cfg = cfg_.wlac;
  std::thread([promise, sampler, q, cfg, deadline] {
    DefaultTokenizer tok;
    try {
      promise->set_value(amt::autocomplete(q, *sampler, tok, cfg, deadline));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  }).detach();
  if (future.wait_until(deadline) != std::future_status::ready)
    throw Error(ErrorCode::Timeout, "autocomplete exceeded " + std::to_string(cfg_.autocomplete_deadline.count()) + " ms");
  auto r = future.get();
  if (r.timed_out)
    throw Error(ErrorCode::Timeout, "autocomplete exceeded " + std::to_string(cfg_.autocomplete_deadline.count()) + " ms");
  return r;
}

json Service::autocomplete_json(const std::string& id, const json& body) {
  WlacQuery q;
  q.source = require_string(body, "source");
  q.left_context = body.value("left", body.value("left_context", std::string()));
  q.right_context = body.value("right", body.value("right_context", std::string()));
  q.typed = require_string(body, "typed");
  json j = autocomplete(id, q);
  return j;
}

json Service::approve(const std::string& id, const json& body) {
  auto st = state(id);
  auto source = require_string(body, "source");
  auto target = body.contains("edited_target") ? require_string(body, "edited_target") : require_string(body, "target");
  std::lock_guard write(st->write_mu);
  auto& p = *st->project;
  auto before = p.size();
  auto unit = p.approve_edit(source, target);
  bool added = p.size() > before;
  if (added && st->dir) append_units_jsonl(*st->dir / "units.jsonl", {unit});
  std::size_t indexed = 0;
  {
    std::unique_lock lock(st->index_mu);
    if (added && (cfg_.retrain_on_approve || body.value("retrain", false))) {
      st->index = TmIndex::build(p, *embedder_, cfg_.index);
      st->pending_approvals = 0;
    } else if (added && st->index && ++st->pending_approvals >= cfg_.refresh_every) {
      st->index->refresh(p, *embedder_);
      st->pending_approvals = 0;
    }
    indexed = st->index ? st->index->indexed_count() : 0;
  }
  return json{{"unit_id", unit.id()}, {"tm_size", p.size()}, {"added", added}, {"indexed", indexed}};
}

json Service::term_ape(const std::string& id, const json& body) {
  auto st = state(id);
  const auto& p = *st->project;
  auto source = require_string(body, "source");
  auto translation = require_string(body, "translation");
  auto terms = parse_terms(require_field(body, "term_set"));
  auto before = missing_terms(translation, terms);
  json out{{"missing_before", before}};
  if (before.empty()) {
    out["post_edited"] = translation;
    out["missing_after"] = json::array();
    out["temperature"] = json();
    out["backend_calls"] = 0;
    return out;
  }
  auto prompt = render_term_ape(p.src_lang(), p.tgt_lang(), source, translation, before);
  std::string best;
  std::vector<TermPair> best_missing;
  double best_temp = 0;
  int calls = 0;
  for (double temp : {0.0, 0.2}) {
    auto params = translation_params();
    params.temperature = temp;
    params.stop_sequences.clear();
    params.max_new_tokens = max_tokens_for({source, translation}, p.tgt_lang(), cfg_.token_policy);
    auto r = gateway_.complete_batch({prompt}, params).front();
    ++calls;
    if (!r.ok()) throw Error(*r.error, r.message);
    auto candidate = clean_ape_output(*r.text, p.tgt_lang());
    auto missing = candidate.empty() ? terms : missing_terms(candidate, terms);
    if (calls == 1 || missing.size() < best_missing.size()) {
      best = candidate.empty() ? translation : candidate;
      best_missing = candidate.empty() ? before : missing;
      best_temp = temp;
    }
  }
  out["post_edited"] = best;
  out["missing_after"] = best_missing;
  out["temperature"] = best_temp;
  out["backend_calls"] = calls;
  return out;
}

json Service::compile_glossary(const std::string& id, const json& body) {
  auto st = state(id);
  const auto& p = *st->project;
  GlossaryOptions opts;
  opts.drop_overlapping = body.value("drop_overlapping", false);
  auto stop = load_stopwords_for(cfg_.stopword_dir, p.src_lang());
  for (auto& w : load_stopwords_for(cfg_.stopword_dir, p.tgt_lang())) stop.insert(w);

  std::lock_guard write(st->write_mu);
  std::vector<TermPair> occurrences;
  std::map<std::string, std::vector<TermPair>> extracted;
  std::size_t failed = 0;
  auto units = p.units();
  if (body.contains("occurrences")) {
    occurrences = parse_terms(body.at("occurrences"));
  } else if (!units.empty()) {
    auto number = optional_count(body, "number").value_or(cfg_.extract_number);
    auto sep = body.value("separator", cfg_.extract_separator);
    std::vector<RenderedPrompt> prompts;
    for (const auto& u : units) prompts.push_back(render_term_extract(u, number, sep));
    auto params = extraction_params();
    params.max_new_tokens = 256;
    auto results = gateway_.complete_batch(prompts, params);
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (!results[i].ok()) {
        ++failed;
        continue;
      }
      try {
        // The prompt already ends with "1.", so the completion starts
        // mid-list.
        auto parsed = parse_extracted_terms(*results[i].text, sep);
        extracted[units[i].id()] = parsed.terms;
        for (const auto& t : parsed.terms) occurrences.push_back(t);
      } catch (const Error&) {
        ++failed;
      }
    }
    if (failed == units.size() && !units.empty() && results.front().error)
      throw Error(*results.front().error, results.front().message);
  }
  auto glossary = amt::compile_glossary(occurrences, stop, p.src_lang(), p.tgt_lang(), opts);
  {
    std::unique_lock lock(st->terms_mu);
    st->glossary = glossary;
    for (auto& [uid, ts] : extracted) st->unit_terms[uid] = std::move(ts);
  }
  if (st->dir) st->project->set_glossary_ref((*st->dir / "glossary.tsv").string());
  persist_glossary(*st);
  persist_meta(*st);
  json j = glossary;
  j["units_processed"] = units.size();
  j["units_failed"] = failed;
  return j;
}

json Service::get_glossary(const std::string& id) const {
  auto st = state(id);
  std::shared_lock lock(st->terms_mu);
  if (!st->glossary) throw Error(ErrorCode::NotFound, "glossary for project '" + id + "' not compiled");
  return json(*st->glossary);
}

json Service::evaluate_terms(const std::string& id, const json& body) const {
  auto st = state(id);
  const auto& p = *st->project;
  std::vector<UsageCount> rows;
  if (body.contains("rows")) {
    rows = body.at("rows").get<std::vector<UsageCount>>();
  } else {
    std::vector<TermEvalItem> items;
    for (const auto& it : require_field(body, "items"))
      items.push_back({it.value("translation", std::string()), parse_terms(require_field(it, "term_set")),
                       it.value("term_set_label", std::string("terms"))});
    rows = count_usage(items, body.value("system", std::string("system")),
                       body.value("lang_pair", p.src_lang().code() + "-" + p.tgt_lang().code()));
  }
  auto report = usage_report(rows);
  json j = report;
  if (report.systems.size() == 1) j["avg_pct"] = report.systems.front().avg_pct;
  return j;
}

// ---- http ----------------------------------------------------------------------

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::IndexStale:
    case ErrorCode::EmptyTm:
    case ErrorCode::DuplicateId: return 409;
    case ErrorCode::BackendError:
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::SamplerFailure: return 502;
    case ErrorCode::Timeout: return 504;
    case ErrorCode::Io: return 500;
    default: return 422;
  }
}

HttpServer::HttpServer(Service& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                const std::string& detail) {
  send_json(res, status, json{{"code", code}, {"message", message}, {"detail", detail}});
}

using Handler = std::function<json(const httplib::Request&, const json&)>;

}  // namespace

void HttpServer::install_routes() {
  auto& srv = *server_;
  const std::string api_key = service_.config().api_key;

  auto wrap = [this, api_key](Handler h, int ok_status = 200) {
    return [h, ok_status, api_key](const httplib::Request& req, httplib::Response& res) {
      if (!api_key.empty()) {
        auto auth = req.get_header_value("Authorization");
        auto key = req.get_header_value("X-API-Key");
        if (auth != "Bearer " + api_key && key != api_key) {
          send_error(res, 401, "Unauthorized", "missing or wrong API key", "");
          return;
        }
      }
      try {
        json body = json::object();
        if (!req.body.empty()) body = json::parse(req.body);
        send_json(res, ok_status, h(req, body));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::Timeout && req.path.find("/autocomplete") != std::string::npos) {
          send_json(res, 504,
                    json{{"code", "Timeout"}, {"message", "deadline exceeded"}, {"detail", e.detail()},
                         {"word", nullptr}, {"run_found", nullptr}, {"timed_out", true}});
          return;
        }
        send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what(), e.detail());
      } catch (const json::exception& e) {
        send_error(res, 422, "InvalidArgument", "malformed request body", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "Internal", "internal error", e.what());
      }
    };
  };
  auto pid = [](const httplib::Request& r) { return r.matches[1].str(); };
  Service& s = service_;

  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, json{{"status", "ok"}});
  });
  srv.Post("/projects", wrap([&s](auto&, const json& b) { return s.create_project(b); }, 201));
  srv.Get("/projects", wrap([&s](auto&, const json&) { return s.list_projects(); }));
  srv.Get(R"(/projects/([A-Za-z0-9_-]+))", wrap([&s, pid](auto& r, const json&) { return s.get_project(pid(r)); }));
  srv.Post(R"(/projects/([A-Za-z0-9_-]+)/units)",
           wrap([&s, pid](auto& r, const json& b) { return s.add_units(pid(r), b); }));
  srv.Post(R"(/projects/([A-Za-z0-9_-]+)/index/rebuild)",
           wrap([&s, pid](auto& r, const json& b) { return s.rebuild_index(pid(r), b); }));
  srv.Post(R"(/projects/([A-Za-z0-9_-]+)/translate)",
           wrap([&s, pid](auto& r, const json& b) { return s.translate_json(pid(r), b); }));
  srv.Post(R"(/projects/([A-Za-z0-9_-]+)/autocomplete)",
           wrap([&s, pid](auto& r, const json& b) { return s.autocomplete_json(pid(r), b); }));
  srv.Post(R"(/projects/([A-Za-z0-9_-]+)/approve)",
           wrap([&s, pid](auto& r, const json& b) { return s.approve(pid(r), b); }));
  srv.Post(R"(/projects/([A-Za-z0-9_-]+)/terms/ape)",
           wrap([&s, pid](auto& r, const json& b) { return s.term_ape(pid(r), b); }));
  srv.Post(R"(/projects/([A-Za-z0-9_-]+)/glossary/compile)",
           wrap([&s, pid](auto& r, const json& b) { return s.compile_glossary(pid(r), b); }));
  srv.Get(R"(/projects/([A-Za-z0-9_-]+)/glossary)",
          wrap([&s, pid](auto& r, const json&) { return s.get_glossary(pid(r)); }));
  srv.Post(R"(/projects/([A-Za-z0-9_-]+)/evaluate/terms)",
           wrap([&s, pid](auto& r, const json& b) { return s.evaluate_terms(pid(r), b); }));
}

int HttpServer::start(const std::string& host, int port) {
  if (port == 0)
    port_ = server_->bind_to_any_port(host);
  else
    port_ = server_->bind_to_port(host, port) ? port : -1;
  if (port_ < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpServer::run(const std::string& host, int port) {
  if (!server_->bind_to_port(host, port)) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  port_ = port;
  server_->listen_after_bind();
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace amt
