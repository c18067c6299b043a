#include "amt/corpus_pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <mutex>
#include <regex>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "amt/text.hpp"

namespace amt {

void FilterConfig::validate() const {
  if (max_len_words < 1) throw Error(ErrorCode::InvalidArgument, "max_len_words must be >= 1");
  if (!(max_ratio >= 1.0)) throw Error(ErrorCode::InvalidArgument, "max_ratio must be >= 1");
  if (!(sem_threshold >= -1.0 && sem_threshold <= 1.1))
    throw Error(ErrorCode::InvalidArgument, "sem_threshold out of range");
  if (!(lid_threshold >= 0.0 && lid_threshold <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "lid_threshold must be in [0, 1]");
}

std::size_t FilterReport::dropped() const {
  std::size_t n = 0;
  for (const auto& [rule, c] : dropped_by_rule) n += c;
  return n;
}

PairDigest pair_digest(const std::string& source, const std::string& target) {
  std::string key = text::nfc(source) + "\x1f" + text::nfc(target);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(key.data(), key.size(), md, &len, EVP_md5(), nullptr) != 1 || len != 16)
    throw Error(ErrorCode::InvalidArgument, "digest failed");
  std::uint64_t a = 0, b = 0;
  for (int i = 7; i >= 0; --i) a = (a << 8) | md[i];
  for (int i = 15; i >= 8; --i) b = (b << 8) | md[i];
  return {a, b};
}

bool contains_html_tag(const std::string& s) {
  static const std::regex tag("</?[a-zA-Z][^>]*>");
  return std::regex_search(s, tag);
}

RuleFilter::RuleFilter(FilterConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::optional<std::string> RuleFilter::check(const TranslationUnit& u) {
  ++report_.input;
  auto drop = [&](const char* r) -> std::optional<std::string> {
    ++report_.dropped_by_rule[r];
    return std::string(r);
  };
  if (!seen_.insert(pair_digest(u.source(), u.target())).second) return drop(rule::kDuplicate);
  if (u.source() == u.target()) return drop(rule::kSourceCopy);
  auto ls = text::word_count(u.source());
  auto lt = text::word_count(u.target());
  if (ls > cfg_.max_len_words || lt > cfg_.max_len_words) return drop(rule::kLength);
  auto lo = std::max<std::size_t>(1, std::min(ls, lt));
  if (static_cast<double>(std::max(ls, lt)) / static_cast<double>(lo) > cfg_.max_ratio) return drop(rule::kRatio);
  if (cfg_.drop_html && (contains_html_tag(u.source()) || contains_html_tag(u.target()))) return drop(rule::kHtml);
  ++report_.kept;
  return std::nullopt;
}

std::pair<std::vector<TranslationUnit>, FilterReport> rule_filter(const std::vector<TranslationUnit>& units,
                                                                  const FilterConfig& cfg) {
  RuleFilter f(cfg);
  std::vector<TranslationUnit> kept;
  for (const auto& u : units)
    if (f.accept(u)) kept.push_back(u);
  return {std::move(kept), f.report()};
}

std::pair<std::vector<TranslationUnit>, FilterReport> semantic_filter(const std::vector<TranslationUnit>& units,
                                                                      const Embedder& embedder, double threshold) {
  FilterReport report;
  report.input = units.size();
  std::vector<TranslationUnit> kept;
  if (units.empty()) return {kept, report};
  std::vector<std::string> src, tgt;
  for (const auto& u : units) {
    src.push_back(u.source());
    tgt.push_back(u.target());
  }
  auto es = embedder.embed_batch(src);
  auto et = embedder.embed_batch(tgt);
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (cosine(es[i], et[i]) >= threshold) {
      kept.push_back(units[i]);
      ++report.kept;
    } else {
      ++report.dropped_by_rule[rule::kSemantic];
    }
  }
  return {std::move(kept), report};
}

std::pair<std::vector<TranslationUnit>, FilterReport> language_filter(const std::vector<TranslationUnit>& units,
                                                                      const LanguageIdentifier& lid,
                                                                      double threshold) {
  FilterReport report;
  report.input = units.size();
  std::vector<TranslationUnit> kept;
  auto ok = [&](const std::string& s, const LangCode& lang) {
    auto g = lid.detect(s);
    return g.lang == lang.code() && g.confidence >= threshold;
  };
  for (const auto& u : units) {
    if (ok(u.source(), u.src_lang()) && ok(u.target(), u.tgt_lang())) {
      kept.push_back(u);
      ++report.kept;
    } else {
      ++report.dropped_by_rule[rule::kLanguage];
    }
  }
  return {std::move(kept), report};
}

// ---- mixed sampling ---------------------------------------------------------

void MixPlan::validate() const {
  if (!(in_domain_weight > 0) || !(generic_weight > 0))
    throw Error(ErrorCode::InvalidArgument, "mix weights must be positive");
  if (std::abs(in_domain_weight + generic_weight - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "mix weights must sum to 1");
  if (!(generic_sample_ratio > 0)) throw Error(ErrorCode::InvalidArgument, "generic_sample_ratio must be positive");
}

MixedSampler::MixedSampler(std::vector<TranslationUnit> in_domain, std::vector<TranslationUnit> generic,
                           MixPlan plan, std::uint64_t seed)
    : plan_((plan.validate(), plan)), rng_(seed), pick_in_domain_(plan.in_domain_weight) {
  if (in_domain.empty()) throw Error(ErrorCode::EmptyDataset, "in-domain dataset is empty");
  if (generic.empty()) throw Error(ErrorCode::EmptyDataset, "generic dataset is empty");
  auto cap = static_cast<std::size_t>(std::ceil(plan_.generic_sample_ratio * static_cast<double>(in_domain.size())));
  if (generic.size() > cap) {
    std::shuffle(generic.begin(), generic.end(), rng_);
    generic.resize(cap);
  }
  in_domain_.units = std::move(in_domain);
  generic_.units = std::move(generic);
  for (Pool* p : {&in_domain_, &generic_}) {
    p->order.resize(p->units.size());
    for (std::size_t i = 0; i < p->order.size(); ++i) p->order[i] = i;
    std::shuffle(p->order.begin(), p->order.end(), rng_);
  }
}

const TranslationUnit& MixedSampler::draw(Pool& pool) {
  if (pool.pos == pool.order.size()) {
    std::shuffle(pool.order.begin(), pool.order.end(), rng_);
    pool.pos = 0;
  }
  return pool.units[pool.order[pool.pos++]];
}

MixedDraw MixedSampler::next() {
  bool in = pick_in_domain_(rng_);
  return {draw(in ? in_domain_ : generic_), in};
}

std::vector<MixedDraw> mixed_sample(const std::vector<TranslationUnit>& in_domain,
                                    const std::vector<TranslationUnit>& generic, const MixPlan& plan,
                                    std::uint64_t seed, std::size_t n_draws) {
  MixedSampler s(in_domain, generic, plan, seed);
  std::vector<MixedDraw> out;
  out.reserve(n_draws);
  for (std::size_t i = 0; i < n_draws; ++i) out.push_back(s.next());
  return out;
}

// ---- sentence splitting -------------------------------------------------------

std::vector<std::string> split_sentences(const std::string& s) {
  auto u = text::to_u32(s);
  auto is_close = [](char32_t c) {
    return c == U'"' || c == U'\'' || c == U'”' || c == U'’' || c == U'」' || c == U'』' ||
           c == U'»' || c == U')';
  };
  auto is_ascii_term = [](char32_t c) { return c == U'.' || c == U'!' || c == U'?'; };
  auto is_wide_term = [](char32_t c) { return c == U'。' || c == U'！' || c == U'？'; };

  std::vector<std::string> out;
  std::u32string cur;
  auto flush = [&] {
    auto utf8 = text::to_utf8(cur);
    auto t = text::trim(utf8);
    if (!t.empty()) out.emplace_back(t);
    cur.clear();
  };
  for (std::size_t i = 0; i < u.size(); ++i) {
    char32_t c = u[i];
    cur += c;
    if (!is_ascii_term(c) && !is_wide_term(c)) continue;
    std::size_t j = i + 1;
    while (j < u.size() && (is_ascii_term(u[j]) || is_wide_term(u[j]))) cur += u[j++];
    while (j < u.size() && is_close(u[j])) cur += u[j++];
    bool boundary = is_wide_term(c) || j == u.size() || u[j] == U' ' || u[j] == U'\n' || u[j] == U'\t';
    i = j - 1;
    if (boundary) flush();
  }
  flush();
  return out;
}

// ---- generation -----------------------------------------------------------------

SamplingParams generation_params() {
  SamplingParams p;
  p.top_k = 50;
  p.top_p = 0.95;
  p.temperature = 1.0;
  p.max_new_tokens = 300;
  p.num_hypotheses = 5;
  return p;
}

std::vector<std::string> BackendGenerationProvider::generate(const std::string& prompt, const SamplingParams& params) {
  std::vector<std::string> prompts(static_cast<std::size_t>(params.num_hypotheses), prompt);
  SamplingParams one = params;
  one.num_hypotheses = 1;
  return backend_->complete(prompts, one);
}

GenerationResult generate_synthetic(const GenerationJob& job, GenerationProvider& provider) {
  if (job.prompts.empty()) throw Error(ErrorCode::EmptyInput, "generation job has no prompts");
  job.params.validate();
  std::size_t n = job.prompts.size();
  std::vector<std::optional<GenerationEntry>> entries(n);
  std::vector<std::optional<GenerationFailure>> failures(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        auto gens = provider.generate(job.prompts[i], job.params);
        GenerationEntry e{i, job.prompts[i], std::move(gens), {}};
        for (const auto& g : e.generations)
          for (auto& sent : split_sentences(g)) e.sentences.push_back(std::move(sent));
        entries[i] = std::move(e);
      } catch (const Error& e) {
        failures[i] = GenerationFailure{i, e.code(), e.detail()};
      } catch (const std::exception& e) {
        failures[i] = GenerationFailure{i, ErrorCode::ProviderUnavailable, e.what()};
      }
    }
  };
  std::size_t threads = std::clamp<std::size_t>(job.parallelism, 1, n);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  GenerationResult r;
  for (std::size_t i = 0; i < n; ++i) {
    if (entries[i]) r.entries.push_back(std::move(*entries[i]));
    if (failures[i]) r.failures.push_back(std::move(*failures[i]));
  }
  if (r.entries.empty())
    throw Error(ErrorCode::ProviderUnavailable, "all " + std::to_string(n) + " prompts failed: " + r.failures[0].message);
  return r;
}

// ---- bilingual generation parsing ------------------------------------------------

namespace {

struct Quoted {
  std::string value;
  std::size_t begin;  // position of the opening quote
  std::size_t end;    // one past the closing quote
};

std::vector<Quoted> quoted_strings(const std::string& line) {
  std::vector<Quoted> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char q = line[i];
    bool opener = (q == '"' || q == '\'') &&
                  (i == 0 || std::strchr(" \t{[(:,=", line[i - 1]) != nullptr);
    if (!opener) {
      ++i;
      continue;
    }
    std::string v;
    std::size_t j = i + 1;
    bool closed = false;
    while (j < line.size()) {
      if (line[j] == '\\' && j + 1 < line.size()) {
        v += line[j + 1];
        j += 2;
        continue;
      }
      if (line[j] == q) {
        // A single quote only closes before a delimiter, so apostrophes in
        // words survive.
        std::size_t k = j + 1;
        while (k < line.size() && (line[k] == ' ' || line[k] == '\t')) ++k;
        if (q == '"' || k == line.size() || std::strchr(":,}])", line[k]) != nullptr) {
          closed = true;
          break;
        }
      }
      v += line[j++];
    }
    if (!closed) {
      ++i;
      continue;
    }
    out.push_back({v, i, j + 1});
    i = j + 1;
  }
  return out;
}

struct KeyValue {
  std::string key;
  std::string value;
};

// Quoted keys followed by ':' and a quoted value.
std::vector<KeyValue> key_values(const std::string& line, const std::vector<Quoted>& qs,
                                 std::vector<std::string>& loose) {
  std::vector<KeyValue> out;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    std::size_t k = qs[i].end;
    while (k < line.size() && (line[k] == ' ' || line[k] == '\t')) ++k;
    if (k < line.size() && line[k] == ':' && i + 1 < qs.size()) {
      out.push_back({qs[i].value, qs[i + 1].value});
      ++i;
    } else {
      loose.push_back(qs[i].value);
    }
  }
  return out;
}

bool is_structural(std::string_view line) {
  static const std::regex structural(R"(^([\{\}\[\]\(\),;]*|\w+\s*=\s*[\{\[]|\d+\s*:\s*[\{\[]|```\w*)$)");
  return std::regex_match(line.begin(), line.end(), structural);
}

// "12." / "12)" numbering; returns the rest or nullopt if not numbered.
std::optional<std::string_view> numbered(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) return std::nullopt;
  return text::trim(line.substr(i + 1));
}

std::string unquote(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (s.back() == ',' || s.back() == ';')) s = text::trim(s.substr(0, s.size() - 1));
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    s = s.substr(1, s.size() - 2);
  return std::string(text::trim(s));
}

std::optional<std::pair<std::string, std::string>> split_separated(std::string_view line) {
  bool strong = line.find("|||") != std::string_view::npos || line.find('\t') != std::string_view::npos;
  auto body = numbered(line);
  if (!body && !strong) return std::nullopt;
  std::string_view rest = body ? *body : line;
  for (std::string_view sep : {"|||", "\t", " - ", ":", "-"}) {
    auto pos = rest.find(sep);
    if (pos == std::string_view::npos) continue;
    auto a = unquote(rest.substr(0, pos));
    auto b = unquote(rest.substr(pos + sep.size()));
    if (a.empty() || b.empty()) return std::nullopt;
    return std::pair{a, b};
  }
  return std::nullopt;
}

}  // namespace

ParsedGeneration parse_bilingual_generation(const std::string& llm_output, const LangCode& src, const LangCode& tgt,
                                            IdGenerator& ids) {
  ParsedGeneration out;
  auto is_key = [](const std::string& k, const LangCode& l) {
    auto f = text::casefold(text::trim(k));
    return f == l.code() || f == text::casefold(l.display_name());
  };
  std::optional<std::string> pending_src, pending_tgt;
  auto emit = [&](const std::string& s, const std::string& t) {
    try {
      RawUnit raw{s, t, src, tgt, Origin::SyntheticLm, std::nullopt, std::nullopt};
      out.units.push_back(validate_unit(raw, ids));
    } catch (const Error&) {
      ++out.skipped;
    }
  };

  for (const auto& raw_line : text::split_lines(llm_output)) {
    auto line_view = text::trim(raw_line);
    if (line_view.empty() || is_structural(line_view)) continue;
    std::string line(line_view);

    auto qs = quoted_strings(line);
    std::vector<std::string> loose;
    auto kvs = key_values(line, qs, loose);

    std::optional<std::string> s, t;
    bool lang_keyed = false;
    for (const auto& kv : kvs) {
      if (is_key(kv.key, src)) {
        s = kv.value;
        lang_keyed = true;
      } else if (is_key(kv.key, tgt)) {
        t = kv.value;
        lang_keyed = true;
      }
    }
    if (lang_keyed) {
      if (s && t) {
        emit(*s, *t);
        pending_src.reset();
        pending_tgt.reset();
      } else {
        // Dictionary spread over several lines.
        if (s) pending_src = s;
        if (t) pending_tgt = t;
        if (pending_src && pending_tgt) {
          emit(*pending_src, *pending_tgt);
          pending_src.reset();
          pending_tgt.reset();
        }
      }
      continue;
    }
    if (kvs.size() == 1 && loose.empty()) {
      emit(kvs[0].key, kvs[0].value);
      continue;
    }
    if (kvs.size() >= 2) {
      emit(kvs[0].value, kvs[1].value);
      continue;
    }
    if (kvs.empty() && loose.size() == 2) {
      emit(loose[0], loose[1]);
      continue;
    }
    if (auto pair = split_separated(line_view)) {
      emit(pair->first, pair->second);
      continue;
    }
    ++out.skipped;
  }
  if (out.units.empty())
    throw Error(ErrorCode::NoValidRecords, "no bilingual pairs found (" + std::to_string(out.skipped) + " lines skipped)");
  return out;
}

double score_to_exp(double x) {
  if (std::isnan(x)) throw Error(ErrorCode::InvalidArgument, "score is NaN");
  if (x < 0) throw Error(ErrorCode::NegativeInput, "negative log-probability must be >= 0");
  return std::exp(-x);
}

void to_json(nlohmann::json& j, const FilterReport& r) {
  j = nlohmann::json{{"input", r.input}, {"kept", r.kept}, {"dropped_by_rule", r.dropped_by_rule}};
}

void from_json(const nlohmann::json& j, FilterConfig& c) {
  c.max_len_words = j.value("max_len_words", c.max_len_words);
  c.max_ratio = j.value("max_ratio", c.max_ratio);
  c.sem_threshold = j.value("sem_threshold", c.sem_threshold);
  c.lid_threshold = j.value("lid_threshold", c.lid_threshold);
  c.drop_html = j.value("drop_html", c.drop_html);
  c.validate();
}

}  // namespace amt
