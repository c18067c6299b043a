#pragma once

// Workbench service: projects with a TM, IVF index, glossary and
// per-unit extracted terms, plus the JSON operations exposed over HTTP.
//
// Service methods take and return JSON and throw amt::Error; HttpServer
// maps error codes to HTTP statuses and problem-details bodies
// {code, message, detail}.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "amt/domain.hpp"
#include "amt/embedder.hpp"
#include "amt/llm_gateway.hpp"
#include "amt/prompts.hpp"
#include "amt/retrieval.hpp"
#include "amt/terminology.hpp"
#include "amt/tm_store.hpp"
#include "amt/wlac.hpp"

namespace httplib {
class Server;
}

namespace amt {

struct ServiceConfig {
  EmbedderConfig embedder{EmbedderProvider::DeterministicHash, 384, true, "", "", std::chrono::seconds(30)};
  BackendConfig backend;
  TokenPolicy token_policy;
  RetrievalConfig retrieval{10, false, -1.0, 32};
  IndexBuildOptions index;
  WlacConfig wlac;
  std::chrono::milliseconds autocomplete_deadline{2000};
  // Sampler endpoint or fixture file for autocompletion; with neither, the
  // targets of the nearest TM units serve as hypotheses.
  std::string sampler_endpoint;
  std::optional<std::filesystem::path> sampler_fixture;
  std::optional<std::filesystem::path> data_dir;
  std::filesystem::path stopword_dir = "data/stopwords";
  std::size_t refresh_every = 1;  // approvals between incremental index refreshes
  // Retrain the whole index on every approval instead of refreshing it.
  // A request can also ask for this with "retrain": true.
  bool retrain_on_approve = false;
  std::size_t extract_number = 5;
  std::string extract_separator = "=";
  std::string api_key;
  std::string host = "127.0.0.1";
  int port = 8080;

  void validate() const;
};

// Fields absent from `j` keep their defaults.
ServiceConfig load_service_config(const nlohmann::json& j);

enum class TranslateMode { ZeroShot, FuzzyK, FuzzyPlusMt, TermsZero, TermsFuzzy, TermsGlossary };

std::string_view to_string(TranslateMode m);
TranslateMode translate_mode_from_string(std::string_view s);

struct TranslateRequest {
  std::string source;
  TranslateMode mode = TranslateMode::ZeroShot;
  std::optional<std::size_t> k;
  std::optional<std::size_t> max_terms;
  bool include_trace = false;

  // k is required for fuzzy modes, max_terms for terms modes.
  void validate() const;
};

TranslateRequest parse_translate_request(const nlohmann::json& j);

struct TranslateResponse {
  std::string translation;
  std::vector<FuzzyMatch> fuzzy_matches;
  std::vector<TermPair> terms_used_in_prompt;
  std::optional<RenderedPrompt> prompt_trace;
  Template template_used = Template::ZeroShot;
  double latency_ms = 0;
};

nlohmann::json to_json(const TranslateResponse& r);
nlohmann::json to_json(const RenderedPrompt& p, Template t);

class Service {
 public:
  explicit Service(ServiceConfig cfg);
  Service(ServiceConfig cfg, std::shared_ptr<CompletionBackend> backend, std::shared_ptr<Sampler> sampler = nullptr,
          std::shared_ptr<Embedder> embedder = nullptr);
  ~Service();

  const ServiceConfig& config() const noexcept { return cfg_; }

  nlohmann::json create_project(const nlohmann::json& body);
  nlohmann::json get_project(const std::string& id) const;
  nlohmann::json list_projects() const;
  nlohmann::json add_units(const std::string& id, const nlohmann::json& body);
  nlohmann::json rebuild_index(const std::string& id, const nlohmann::json& body);
  TranslateResponse translate(const std::string& id, const TranslateRequest& req);
  nlohmann::json translate_json(const std::string& id, const nlohmann::json& body);
  // Throws Timeout when the deadline passes.
  WlacResult autocomplete(const std::string& id, const WlacQuery& q);
  nlohmann::json autocomplete_json(const std::string& id, const nlohmann::json& body);
  nlohmann::json approve(const std::string& id, const nlohmann::json& body);
  nlohmann::json term_ape(const std::string& id, const nlohmann::json& body);
  nlohmann::json compile_glossary(const std::string& id, const nlohmann::json& body);
  nlohmann::json get_glossary(const std::string& id) const;
  nlohmann::json evaluate_terms(const std::string& id, const nlohmann::json& body) const;

  std::uint64_t backend_requests() const { return gateway_.requests_issued(); }

 private:
  struct ProjectState;

  std::shared_ptr<ProjectState> state(const std::string& id) const;
  std::shared_ptr<const TmIndex> index_of(const ProjectState& st) const;
  std::vector<FuzzyMatch> retrieve(ProjectState& st, const std::string& source, std::size_t k);
  std::vector<TermPair> terms_for_unit(const ProjectState& st, const TranslationUnit& u) const;
  std::string complete_translation(const RenderedPrompt& p, const std::string& source, const LangCode& tgt);
  void persist_meta(const ProjectState& st) const;
  void persist_glossary(const ProjectState& st) const;
  void load_projects();

  ServiceConfig cfg_;
  std::shared_ptr<Embedder> embedder_;
  std::shared_ptr<CompletionBackend> backend_;
  Gateway gateway_;
  std::shared_ptr<Sampler> sampler_;
  DefaultTokenizer tokenizer_;
  IdGenerator ids_;
  mutable std::shared_mutex projects_mu_;
  std::map<std::string, std::shared_ptr<ProjectState>> projects_;
};

// HTTP status for an error code.
int http_status(ErrorCode code);

class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  // Binds host:port (port 0 picks a free port) and serves on a background
  // thread. Returns the bound port.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();
  int port() const noexcept { return port_; }

 private:
  void install_routes();

  Service& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace amt
