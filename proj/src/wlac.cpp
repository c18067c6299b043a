#include "amt/wlac.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "amt/text.hpp"
#include "http_util.hpp"

namespace amt {

namespace {

constexpr std::string_view kSpMarker = "\xE2\x96\x81";  // U+2581

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

void WlacQuery::validate() const {
  if (typed.empty()) throw Error(ErrorCode::EmptyInput, "typed sequence is empty");
  if (text::trim(source).empty()) throw Error(ErrorCode::EmptyInput, "source is empty");
}

void WlacConfig::validate() const {
  if (num_hypotheses < 1) throw Error(ErrorCode::InvalidArgument, "num_hypotheses must be >= 1");
  if (top_k < 1) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 1");
  if (max_runs < 1) throw Error(ErrorCode::InvalidArgument, "max_runs must be >= 1");
  if (!(temp_lo > 0) || !(temp_lo <= temp_hi))
    throw Error(ErrorCode::InvalidArgument, "need 0 < temp_lo <= temp_hi");
}

std::string DefaultTokenizer::detokenize(const TokenSeq& tokens) const {
  bool sentencepiece = false;
  for (const auto& t : tokens)
    if (t.find(kSpMarker) != std::string::npos) sentencepiece = true;
  std::string out;
  if (sentencepiece) {
    for (const auto& t : tokens) out += t;
    out = replace_all(std::move(out), kSpMarker, " ");
  } else {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out += ' ';
      out += tokens[i];
    }
  }
  return std::string(text::trim(out));
}

std::vector<std::string> DefaultTokenizer::words(const std::string& s) const { return text::word_tokenize(s); }

std::vector<std::string> word_tokenize(const std::string& s, const LangCode&) { return text::word_tokenize(s); }

bool prefix_applies(const std::string& left_context) {
  if (text::trim(left_context).empty()) return false;
  auto c = text::first_letter_case(left_context);
  return c == text::LetterCase::Upper || c == text::LetterCase::Uncased || c == text::LetterCase::NoLetter;
}

std::string continuation_after(const std::string& hypothesis, const std::string& prefix) {
  auto p = text::trim(prefix);
  if (!text::starts_with(hypothesis, p)) return hypothesis;
  return std::string(text::trim(std::string_view(hypothesis).substr(p.size())));
}

std::optional<std::size_t> find_completion(const std::vector<std::string>& candidates, const std::string& typed) {
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (text::starts_with(candidates[i], typed)) return i;
  auto folded = text::casefold(typed);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (text::starts_with(text::casefold(candidates[i]), folded)) return i;
  return std::nullopt;
}

std::vector<double> run_temperatures(const WlacConfig& cfg) {
  std::mt19937_64 rng(cfg.seed ? *cfg.seed : std::random_device{}());
  std::uniform_real_distribution<double> dist(cfg.temp_lo, cfg.temp_hi);
  std::vector<double> out;
  out.push_back(cfg.temp_lo);
  for (int r = 2; r <= cfg.max_runs; ++r) out.push_back(cfg.temp_lo == cfg.temp_hi ? cfg.temp_lo : dist(rng));
  return out;
}

WlacResult autocomplete(const WlacQuery& query, Sampler& sampler, const Tokenizer& tokenizer,
                        const WlacConfig& cfg, std::optional<std::chrono::steady_clock::time_point> deadline) {
  query.validate();
  cfg.validate();
  WlacResult result;
  bool use_prefix = prefix_applies(query.left_context);
  std::string prefix(text::trim(query.left_context));
  auto temps = run_temperatures(cfg);

  for (int run = 1; run <= cfg.max_runs; ++run) {
    if (deadline && std::chrono::steady_clock::now() > *deadline) {
      result.timed_out = true;
      return result;
    }
    SampleRequest req{query.source, std::nullopt, cfg.num_hypotheses, cfg.top_k, temps[run - 1]};
    std::vector<std::string> candidates;
    std::vector<bool> from_prefix;
    auto gather = [&](const SampleRequest& r, bool prefixed) {
      std::vector<TokenSeq> hyps;
      try {
        hyps = sampler.sample(r);
      } catch (const std::exception& e) {
        throw Error(ErrorCode::SamplerFailure, "run " + std::to_string(run) + ": " + e.what());
      }
      for (const auto& h : hyps) {
        auto s = tokenizer.detokenize(h);
        if (prefixed) s = continuation_after(s, prefix);
        for (auto& w : tokenizer.words(s)) {
          candidates.push_back(std::move(w));
          from_prefix.push_back(prefixed);
        }
      }
    };
    gather(req, false);
    if (use_prefix) {
      req.target_prefix = prefix;
      gather(req, true);
    }
    result.candidates_scanned += candidates.size();
    if (auto hit = find_completion(candidates, query.typed)) {
      result.word = candidates[*hit];
      result.run_found = run;
      result.used_prefix = from_prefix[*hit];
      return result;
    }
  }
  return result;
}

double wlac_accuracy(const std::vector<std::pair<WlacResult, std::string>>& results) {
  if (results.empty()) throw Error(ErrorCode::EmptyInput, "no results");
  std::size_t hits = 0;
  for (const auto& [r, gold] : results)
    if (r.word && *r.word == gold) ++hits;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double temperature_bucket(double t) { return std::round(t * 10.0) / 10.0; }

namespace {
long bucket_key(double t) { return std::lround(t * 10.0); }
}  // namespace

void FixtureSampler::add(const std::string& source, const std::optional<std::string>& prefix, double temp,
                         std::vector<Hypothesis> hyps) {
  auto& v = entries_[Key{source, prefix, bucket_key(temp)}];
  for (auto& h : hyps) v.push_back(std::move(h));
}

FixtureSampler FixtureSampler::from_json(const nlohmann::json& j) {
  FixtureSampler s;
  try {
    for (const auto& e : j.at("entries")) {
      std::optional<std::string> prefix;
      if (e.contains("prefix") && !e.at("prefix").is_null()) prefix = e.at("prefix").get<std::string>();
      std::vector<Hypothesis> hyps;
      for (const auto& h : e.at("hypotheses"))
        hyps.push_back({h.at("tokens").get<TokenSeq>(), h.value("min_top_k", 1)});
      s.add(e.at("source").get<std::string>(), prefix, e.at("temp").get<double>(), std::move(hyps));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad sampler fixture: ") + ex.what());
  }
  return s;
}

FixtureSampler FixtureSampler::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

std::vector<TokenSeq> FixtureSampler::sample(const SampleRequest& req) {
  std::vector<TokenSeq> out;
  auto it = entries_.find(Key{req.source, req.target_prefix, bucket_key(req.temperature)});
  if (it == entries_.end()) return out;
  for (const auto& h : it->second) {
    if (static_cast<int>(out.size()) == req.n) break;
    if (h.min_top_k <= req.top_k) out.push_back(h.tokens);
  }
  return out;
}

std::vector<TokenSeq> SpySampler::sample(const SampleRequest& req) {
  {
    std::lock_guard lock(mu_);
    requests_.push_back(req);
  }
  return inner_.sample(req);
}

std::vector<SampleRequest> SpySampler::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

HttpSampler::HttpSampler(std::string endpoint, std::string auth_token, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), auth_token_(std::move(auth_token)), timeout_(timeout) {}

std::vector<TokenSeq> HttpSampler::sample(const SampleRequest& req) {
  nlohmann::json body{{"source", req.source},
                      {"target_prefix", req.target_prefix ? nlohmann::json(*req.target_prefix) : nlohmann::json()},
                      {"n", req.n},
                      {"top_k", req.top_k},
                      {"temperature", req.temperature}};
  auto j = detail::post_json(endpoint_, auth_token_, timeout_, body, ErrorCode::SamplerFailure);
  try {
    return j.at("hypotheses").get<std::vector<TokenSeq>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SamplerFailure, std::string("bad sampler response: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const WlacResult& r) {
  j = nlohmann::json{{"word", r.word ? nlohmann::json(*r.word) : nlohmann::json()},
                     {"run_found", r.run_found ? nlohmann::json(*r.run_found) : nlohmann::json()},
                     {"candidates_scanned", r.candidates_scanned},
                     {"used_prefix", r.used_prefix},
                     {"timed_out", r.timed_out}};
}

}  // namespace amt
