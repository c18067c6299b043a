#include "amt/terminology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "amt/text.hpp"

namespace amt {

namespace {

// Strips "12." / "12)" / "-" / "*" list markers.
std::string_view strip_numbering(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) return text::trim(line.substr(i + 1));
  if (!line.empty() && (line[0] == '*' || line[0] == '-') && line.size() > 1 && line[1] == ' ')
    return text::trim(line.substr(2));
  return line;
}

std::string join_folded_words(const std::string& s) {
  auto words = text::word_tokenize(s);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += text::casefold(words[i]);
  }
  return out;
}

bool is_stopword(const std::string& term, const StopwordSet& stopwords) {
  return stopwords.count(text::casefold(term)) > 0;
}

// True if the token sequence `inner` occurs contiguously in `outer`.
bool contains_tokens(const std::vector<std::string>& outer, const std::vector<std::string>& inner) {
  if (inner.empty() || inner.size() >= outer.size()) return false;
  return std::search(outer.begin(), outer.end(), inner.begin(), inner.end()) != outer.end();
}

void check_glossary(const std::vector<TermPair>& entries, const GlossaryOptions& opts) {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.source_term()).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate glossary source '" + e.source_term() + "'");
    if (e.frequency() < opts.min_frequency)
      throw Error(ErrorCode::InvalidArgument, "glossary entry '" + e.source_term() + "' below min frequency");
    if (e.src_ngram_len() > opts.max_ngram)
      throw Error(ErrorCode::InvalidArgument, "glossary entry '" + e.source_term() + "' exceeds max n-gram");
  }
}

std::u32string fold32(const std::string& s) { return text::to_u32(text::casefold(text::nfc(s))); }

bool word_boundary_find(const std::u32string& hay, const std::u32string& needle) {
  if (needle.empty()) return false;
  for (std::size_t pos = hay.find(needle); pos != std::u32string::npos; pos = hay.find(needle, pos + 1)) {
    bool left_ok = pos == 0 || !text::is_word_char(hay[pos - 1]);
    std::size_t end = pos + needle.size();
    bool right_ok = end == hay.size() || !text::is_word_char(hay[end]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

}  // namespace

ExtractedTerms parse_extracted_terms(const std::string& llm_output, const std::string& separator) {
  if (separator.empty()) throw Error(ErrorCode::InvalidArgument, "separator is empty");
  ExtractedTerms out;
  for (const auto& raw : text::split_lines(llm_output)) {
    auto line = text::trim(raw);
    if (line.empty()) continue;
    line = strip_numbering(line);
    auto pos = line.find(separator);
    if (pos == std::string_view::npos) {
      ++out.skipped;
      continue;
    }
    auto src = text::trim(line.substr(0, pos));
    auto tgt = text::trim(line.substr(pos + separator.size()));
    if (src.empty() || tgt.empty()) {
      ++out.skipped;
      continue;
    }
    out.terms.emplace_back(std::string(src), std::string(tgt));
  }
  if (out.terms.empty()) throw Error(ErrorCode::NoTermsParsed, "no '" + separator + "'-separated term pairs found");
  return out;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.insert(text::casefold(t));
  }
  return out;
}

StopwordSet load_stopwords_for(const std::filesystem::path& dir, const LangCode& lang) {
  auto path = dir / (lang.code() + ".txt");
  if (!std::filesystem::exists(path)) return {};
  return load_stopwords(path);
}

bool glossary_order(const TermPair& a, const TermPair& b) {
  if (a.src_ngram_len() != b.src_ngram_len()) return a.src_ngram_len() > b.src_ngram_len();
  if (a.frequency() != b.frequency()) return a.frequency() > b.frequency();
  return a.source_term() < b.source_term();
}

Glossary::Glossary(LangCode src, LangCode tgt, std::vector<TermPair> entries, const GlossaryOptions& opts)
    : src_(std::move(src)), tgt_(std::move(tgt)), entries_(std::move(entries)) {
  check_glossary(entries_, opts);
  std::sort(entries_.begin(), entries_.end(), glossary_order);
}

Glossary compile_glossary(const std::vector<TermPair>& occurrences, const StopwordSet& stopwords,
                          const LangCode& src, const LangCode& tgt, const GlossaryOptions& opts) {
  std::map<std::pair<std::string, std::string>, std::uint64_t> counts;
  for (const auto& o : occurrences) counts[{o.source_term(), o.target_term()}] += o.frequency();

  // Best target per source: highest count, then smaller target. std::map
  // iterates targets ascending, so a strict > keeps the smaller on ties.
  std::map<std::string, std::pair<std::string, std::uint64_t>> best;
  for (const auto& [key, n] : counts) {
    const auto& [s, t] = key;
    if (is_stopword(s, stopwords) || is_stopword(t, stopwords)) continue;
    if (text::split_whitespace(s).size() > opts.max_ngram) continue;
    auto it = best.find(s);
    if (it == best.end() || n > it->second.second) best[s] = {t, n};
  }

  std::vector<TermPair> entries;
  for (const auto& [s, tn] : best)
    if (tn.second >= opts.min_frequency) entries.emplace_back(s, tn.first, tn.second);

  if (opts.drop_overlapping) {
    std::vector<std::vector<std::string>> toks;
    for (const auto& e : entries) toks.push_back(text::split_whitespace(text::casefold(e.source_term())));
    std::vector<TermPair> kept;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      bool inside = false;
      for (std::size_t j = 0; j < entries.size() && !inside; ++j) inside = contains_tokens(toks[j], toks[i]);
      if (!inside) kept.push_back(entries[i]);
    }
    entries = std::move(kept);
  }
  return Glossary(src, tgt, std::move(entries), opts);
}

void save_glossary_tsv(const Glossary& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& e : g.entries())
    out << e.source_term() << '\t' << e.target_term() << '\t' << e.frequency() << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Glossary load_glossary_tsv(const std::filesystem::path& path, const LangCode& src, const LangCode& tgt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::vector<TermPair> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw Error(ErrorCode::Io, path.string() + ":" + std::to_string(line_no) + ": expected 3 columns");
    std::uint64_t freq = 0;
    try {
      freq = std::stoull(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::Io, path.string() + ":" + std::to_string(line_no) + ": bad frequency");
    }
    entries.emplace_back(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), freq);
  }
  return Glossary(src, tgt, std::move(entries));
}

std::unordered_set<std::string> word_ngrams(const std::string& s, std::size_t max_n) {
  auto words = text::word_tokenize(s);
  for (auto& w : words) w = text::casefold(w);
  std::unordered_set<std::string> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::string gram;
    for (std::size_t n = 1; n <= max_n && i + n <= words.size(); ++n) {
      if (n > 1) gram += ' ';
      gram += words[i + n - 1];
      out.insert(gram);
    }
  }
  return out;
}

std::vector<TermPair> match_terms(const std::string& source, const std::vector<TermPair>& terms,
                                  std::size_t max_terms) {
  if (max_terms == 0) throw Error(ErrorCode::InvalidArgument, "max_terms must be >= 1");
  std::vector<TermPair> out;
  if (terms.empty()) return out;
  auto grams = word_ngrams(source, 5);
  for (const auto& t : terms) {
    if (out.size() == max_terms) break;
    if (grams.count(join_folded_words(t.source_term()))) out.push_back(t);
  }
  return out;
}

std::vector<TermPair> match_terms(const std::string& source, const Glossary& glossary, std::size_t max_terms) {
  return match_terms(source, glossary.entries(), max_terms);
}

bool term_used(const std::string& translation, const TermPair& term, TermMatchMode mode) {
  if (text::trim(translation).empty()) throw Error(ErrorCode::InvalidArgument, "translation is empty");
  if (mode == TermMatchMode::Exact) return translation.find(term.target_term()) != std::string::npos;
  if (mode == TermMatchMode::Auto)
    mode = text::is_non_spaced(term.target_term()) ? TermMatchMode::Substring : TermMatchMode::WordBoundary;
  auto hay = fold32(translation);
  auto needle = fold32(term.target_term());
  if (mode == TermMatchMode::Substring) return hay.find(needle) != std::u32string::npos;
  return word_boundary_find(hay, needle);
}

std::vector<TermPair> missing_terms(const std::string& translation, const std::vector<TermPair>& terms,
                                    TermMatchMode mode) {
  std::vector<TermPair> out;
  for (const auto& t : terms)
    if (!term_used(translation, t, mode)) out.push_back(t);
  return out;
}

double round_half_up(double x, int decimals) {
  double scale = std::pow(10.0, decimals);
  return std::floor(x * scale + 0.5 + 1e-9) / scale;
}

double TermUsageReport::pair_avg(const std::string& system, const std::string& lang_pair) const {
  for (const auto& p : pairs)
    if (p.system == system && p.lang_pair == lang_pair) return p.avg_pct;
  throw Error(ErrorCode::NotFound, "no row for " + system + " / " + lang_pair);
}

double TermUsageReport::system_avg(const std::string& system) const {
  for (const auto& s : systems)
    if (s.system == system) return s.avg_pct;
  throw Error(ErrorCode::NotFound, "no system " + system);
}

TermUsageReport usage_report(const std::vector<UsageCount>& rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no usage rows");
  TermUsageReport r;
  r.rows = rows;
  // (system, pair) -> percentages per term set, in first-appearance order.
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<double>> pct;
  for (const auto& row : rows) {
    if (row.total == 0)
      throw Error(ErrorCode::InconsistentCounts, row.system + "/" + row.lang_pair + "/" + row.term_set + ": total is 0");
    if (row.used > row.total)
      throw Error(ErrorCode::InconsistentCounts, row.system + "/" + row.lang_pair + "/" + row.term_set + ": used > total");
    std::pair key{row.system, row.lang_pair};
    if (!pct.count(key)) order.push_back(key);
    pct[key].push_back(100.0 * static_cast<double>(row.used) / static_cast<double>(row.total));
  }
  std::vector<std::string> systems;
  std::map<std::string, std::vector<double>> per_system;
  for (const auto& key : order) {
    const auto& v = pct[key];
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    r.pairs.push_back({key.first, key.second, round_half_up(mean), mean});
    if (!per_system.count(key.first)) systems.push_back(key.first);
    per_system[key.first].push_back(mean);
  }
  for (const auto& s : systems) {
    const auto& v = per_system[s];
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    r.systems.push_back({s, round_half_up(mean)});
  }
  return r;
}

std::vector<UsageCount> count_usage(const std::vector<TermEvalItem>& items, const std::string& system,
                                    const std::string& lang_pair, TermMatchMode mode) {
  std::vector<UsageCount> out;
  auto row_for = [&](const std::string& label) -> UsageCount& {
    for (auto& r : out)
      if (r.term_set == label) return r;
    out.push_back({system, lang_pair, label, 0, 0});
    return out.back();
  };
  for (const auto& item : items) {
    auto& row = row_for(item.term_set_label);
    row.total += item.term_set.size();
    if (text::trim(item.translation).empty()) continue;
    for (const auto& t : item.term_set)
      if (term_used(item.translation, t, mode)) ++row.used;
  }
  return out;
}

void to_json(nlohmann::json& j, const Glossary& g) {
  j = nlohmann::json{{"src_lang", g.src_lang()}, {"tgt_lang", g.tgt_lang()}, {"entries", g.entries()}};
}

void to_json(nlohmann::json& j, const UsageCount& v) {
  j = nlohmann::json{{"system", v.system},
                     {"lang_pair", v.lang_pair},
                     {"term_set", v.term_set},
                     {"total", v.total},
                     {"used", v.used}};
}

void from_json(const nlohmann::json& j, UsageCount& v) {
  v.system = j.value("system", std::string("system"));
  v.lang_pair = j.value("lang_pair", std::string("pair"));
  v.term_set = j.value("term_set", std::string("terms"));
  auto total = j.at("total").get<std::int64_t>();
  auto used = j.at("used").get<std::int64_t>();
  if (total < 0 || used < 0) throw Error(ErrorCode::InconsistentCounts, "negative count");
  v.total = static_cast<std::uint64_t>(total);
  v.used = static_cast<std::uint64_t>(used);
}

void to_json(nlohmann::json& j, const TermUsageReport& r) {
  j = nlohmann::json::object();
  j["rows"] = r.rows;
  auto& pairs = j["pairs"] = nlohmann::json::array();
  for (const auto& p : r.pairs)
    pairs.push_back({{"system", p.system}, {"lang_pair", p.lang_pair}, {"avg_pct", p.avg_pct}});
  auto& systems = j["systems"] = nlohmann::json::array();
  for (const auto& s : r.systems) systems.push_back({{"system", s.system}, {"avg_pct", s.avg_pct}});
}

}  // namespace amt
