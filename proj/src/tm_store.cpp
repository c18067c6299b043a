#include "amt/tm_store.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "amt/text.hpp"

namespace amt {

Project::Project(std::string id, std::string name, LangCode src_lang, LangCode tgt_lang,
                 IdGenerator& ids)
    : id_(std::move(id)),
      name_(std::move(name)),
      src_lang_(std::move(src_lang)),
      tgt_lang_(std::move(tgt_lang)),
      ids_(ids) {
  if (id_.empty()) throw Error(ErrorCode::InvalidArgument, "project id is empty");
  if (src_lang_ == tgt_lang_)
    throw Error(ErrorCode::SameLanguage, "project languages must differ");
}

std::optional<std::string> Project::glossary_ref() const {
  std::shared_lock lock(mu_);
  return glossary_ref_;
}

void Project::set_glossary_ref(std::string ref) {
  std::unique_lock lock(mu_);
  glossary_ref_ = std::move(ref);
}

std::string Project::pair_key(std::string_view s, std::string_view t) {
  std::string key;
  key.reserve(s.size() + t.size() + 1);
  key.append(s);
  key.push_back('\x1f');
  key.append(t);
  return key;
}

std::size_t Project::add_units(const std::vector<TranslationUnit>& units) {
  for (const auto& u : units) {
    if (!(u.src_lang() == src_lang_) || !(u.tgt_lang() == tgt_lang_))
      throw Error(ErrorCode::LanguageMismatch,
                  "unit " + u.id() + " is " + u.src_lang().code() + "-" + u.tgt_lang().code() +
                      ", project is " + src_lang_.code() + "-" + tgt_lang_.code());
  }
  std::unique_lock lock(mu_);
  std::size_t added = 0;
  for (const auto& u : units) {
    auto [it, inserted] = by_pair_.try_emplace(pair_key(u.source(), u.target()), tm_.size());
    if (!inserted) continue;
    tm_.push_back(u);
    ++source_counts_[u.source()];
    ++added;
  }
  return added;
}

TranslationUnit Project::approve_edit(std::string_view source, std::string_view edited_target) {
  std::string s(text::trim(source));
  std::string t(text::trim(edited_target));
  if (s.empty() || t.empty()) throw Error(ErrorCode::EmptySide, "approved edit needs source and target");
  std::unique_lock lock(mu_);
  auto key = pair_key(s, t);
  if (auto it = by_pair_.find(key); it != by_pair_.end()) return tm_[it->second];
  RawUnit raw{s, t, src_lang_, tgt_lang_, Origin::ApprovedEdit, std::nullopt, std::nullopt};
  TranslationUnit unit = validate_unit(raw, ids_);
  by_pair_.emplace(std::move(key), tm_.size());
  tm_.push_back(unit);
  ++source_counts_[unit.source()];
  return unit;
}

std::size_t Project::size() const {
  std::shared_lock lock(mu_);
  return tm_.size();
}

std::vector<TranslationUnit> Project::units() const {
  std::shared_lock lock(mu_);
  return tm_;
}

std::vector<TranslationUnit> Project::units_from(std::size_t from) const {
  std::shared_lock lock(mu_);
  if (from >= tm_.size()) return {};
  return {tm_.begin() + static_cast<std::ptrdiff_t>(from), tm_.end()};
}

TranslationUnit Project::unit_at(std::size_t pos) const {
  std::shared_lock lock(mu_);
  if (pos >= tm_.size()) throw Error(ErrorCode::NotFound, "no unit at position " + std::to_string(pos));
  return tm_[pos];
}

std::size_t Project::count_source(std::string_view source) const {
  std::shared_lock lock(mu_);
  auto it = source_counts_.find(std::string(source));
  return it == source_counts_.end() ? 0 : it->second;
}

// Corpus IO ------------------------------------------------------------

CorpusFormat format_for(const std::filesystem::path& path) {
  auto name = path.filename().string();
  if (name.size() >= 6 && name.substr(name.size() - 6) == ".jsonl") return CorpusFormat::JsonlUnits;
  return CorpusFormat::TsvBitext;
}

LoadResult parse_corpus(std::string_view content, CorpusFormat format, const LangCode& src,
                        const LangCode& tgt, IdGenerator& ids, Origin origin) {
  LoadResult result;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) {
      if (format == CorpusFormat::TsvBitext) result.skipped.push_back({line_no, "blank line"});
      continue;
    }
    try {
      if (format == CorpusFormat::JsonlUnits) {
        auto unit = nlohmann::json::parse(line).get<TranslationUnit>();
        if (!(unit.src_lang() == src) || !(unit.tgt_lang() == tgt)) {
          result.skipped.push_back({line_no, "language pair mismatch"});
          continue;
        }
        result.units.push_back(std::move(unit));
      } else {
        auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
          result.skipped.push_back({line_no, "expected exactly one tab"});
          continue;
        }
        RawUnit raw{line.substr(0, tab), line.substr(tab + 1), src, tgt, origin, std::nullopt,
                    std::nullopt};
        result.units.push_back(validate_unit(raw, ids));
      }
    } catch (const Error& e) {
      result.skipped.push_back({line_no, e.what()});
    } catch (const nlohmann::json::exception& e) {
      result.skipped.push_back({line_no, e.what()});
    }
  }
  if (result.units.empty()) throw Error(ErrorCode::NoValidRecords, "no valid records");
  return result;
}

LoadResult load_corpus(CorpusFile& file, const LangCode& src, const LangCode& tgt,
                       IdGenerator& ids, Origin origin) {
  std::ifstream in(file.path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + file.path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "read failed: " + file.path.string());
  auto result = parse_corpus(buf.str(), file.format, src, tgt, ids, origin);
  file.count = result.units.size();
  return result;
}

namespace {

void write_units(const std::filesystem::path& path, const std::vector<TranslationUnit>& units,
                 std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& u : units) out << nlohmann::json(u).dump() << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace

void save_units_jsonl(const std::filesystem::path& path, const std::vector<TranslationUnit>& units) {
  write_units(path, units, std::ios::binary | std::ios::trunc);
}

void append_units_jsonl(const std::filesystem::path& path, const std::vector<TranslationUnit>& units) {
  write_units(path, units, std::ios::binary | std::ios::app);
}

void save_tsv(const std::filesystem::path& path, const std::vector<TranslationUnit>& units) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& u : units) out << u.source() << '\t' << u.target() << '\n';
}

}  // namespace amt
