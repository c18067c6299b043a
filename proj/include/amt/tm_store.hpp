#pragma once

// Per-project translation memory: append-only, deduplicated by exact
// (source, target) pair, single writer / many readers.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "amt/domain.hpp"

namespace amt {

class Project {
 public:
  Project(std::string id, std::string name, LangCode src_lang, LangCode tgt_lang,
          IdGenerator& ids = default_id_generator());

  Project(const Project&) = delete;
  Project& operator=(const Project&) = delete;

  const std::string& id() const noexcept { return id_; }
  const std::string& name() const noexcept { return name_; }
  const LangCode& src_lang() const noexcept { return src_lang_; }
  const LangCode& tgt_lang() const noexcept { return tgt_lang_; }

  std::optional<std::string> glossary_ref() const;
  void set_glossary_ref(std::string ref);

  // Appends in order, skipping units whose (source, target) pair is
  // already stored. Throws LanguageMismatch before appending anything if
  // any unit has the wrong language pair.
  std::size_t add_units(const std::vector<TranslationUnit>& units);

  // Appends an approved_edit unit, or returns the stored unit with the
  // same (source, target) pair. Throws EmptySide.
  TranslationUnit approve_edit(std::string_view source, std::string_view edited_target);

  std::size_t size() const;
  std::vector<TranslationUnit> units() const;
  // Units with position >= from, in TM order.
  std::vector<TranslationUnit> units_from(std::size_t from) const;
  TranslationUnit unit_at(std::size_t pos) const;
  // Number of stored units whose source equals `source` exactly.
  std::size_t count_source(std::string_view source) const;

 private:
  static std::string pair_key(std::string_view s, std::string_view t);

  std::string id_;
  std::string name_;
  LangCode src_lang_;
  LangCode tgt_lang_;
  IdGenerator& ids_;

  mutable std::shared_mutex mu_;
  std::vector<TranslationUnit> tm_;
  std::unordered_map<std::string, std::size_t> by_pair_;
  std::unordered_map<std::string, std::size_t> source_counts_;
  std::optional<std::string> glossary_ref_;
};

enum class CorpusFormat { JsonlUnits, TsvBitext };

struct CorpusFile {
  std::filesystem::path path;
  CorpusFormat format = CorpusFormat::TsvBitext;
  std::size_t count = 0;  // filled by load_corpus
};

// Guesses the format from the file name (*.jsonl -> units, else TSV).
CorpusFormat format_for(const std::filesystem::path& path);

struct SkippedLine {
  std::size_t line_no;  // 1-based
  std::string reason;
};

struct LoadResult {
  std::vector<TranslationUnit> units;
  std::vector<SkippedLine> skipped;
};

// Reads a corpus file. Malformed lines are reported, not fatal. Throws Io
// when the file cannot be read and NoValidRecords when nothing parses.
// For TSV, ids come from `ids` and the origin is `origin`.
LoadResult load_corpus(CorpusFile& file, const LangCode& src, const LangCode& tgt,
                       IdGenerator& ids = default_id_generator(),
                       Origin origin = Origin::Authentic);

// Parses corpus text already in memory (same rules as load_corpus).
LoadResult parse_corpus(std::string_view content, CorpusFormat format, const LangCode& src,
                        const LangCode& tgt, IdGenerator& ids = default_id_generator(),
                        Origin origin = Origin::Authentic);

void save_units_jsonl(const std::filesystem::path& path, const std::vector<TranslationUnit>& units);
void append_units_jsonl(const std::filesystem::path& path, const std::vector<TranslationUnit>& units);
void save_tsv(const std::filesystem::path& path, const std::vector<TranslationUnit>& units);

}  // namespace amt
