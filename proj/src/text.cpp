#include "amt/text.hpp"

#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>

#include <memory>
#include <stdexcept>

namespace amt::text {

namespace {

icu::UnicodeString from_utf8(std::string_view s) {
  return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_hyphen(char32_t c) { return c == U'-' || c == U'‐' || c == U'‑'; }

}  // namespace

std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString out = norm->normalize(from_utf8(s), status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  return utf8(out);
}

std::string casefold(std::string_view s) {
  icu::UnicodeString u = from_utf8(s);
  u.foldCase(U_FOLD_CASE_DEFAULT);
  return utf8(u);
}

std::string to_lower(std::string_view s) {
  icu::UnicodeString u = from_utf8(s);
  u.toLower(icu::Locale::getRoot());
  return utf8(u);
}

std::string to_upper(std::string_view s) {
  icu::UnicodeString u = from_utf8(s);
  u.toUpper(icu::Locale::getRoot());
  return utf8(u);
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  for (const auto& tok : split_whitespace(s)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < s.size()) out.emplace_back(s.substr(start));
      break;
    }
    std::string_view line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
    start = nl + 1;
  }
  return out;
}

std::u32string to_u32(std::string_view s) {
  icu::UnicodeString u = from_utf8(s);
  std::u32string out;
  out.reserve(static_cast<std::size_t>(u.length()));
  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    out.push_back(static_cast<char32_t>(c));
    i += U16_LENGTH(c);
  }
  return out;
}

std::string to_utf8(std::u32string_view s) {
  icu::UnicodeString u;
  for (char32_t c : s) u.append(static_cast<UChar32>(c));
  return utf8(u);
}

bool is_non_spaced(std::string_view s) {
  std::size_t letters = 0;
  std::size_t non_spaced = 0;
  for (char32_t c : to_u32(s)) {
    if (!u_isalpha(static_cast<UChar32>(c))) continue;
    ++letters;
    UErrorCode status = U_ZERO_ERROR;
    UScriptCode sc = uscript_getScript(static_cast<UChar32>(c), &status);
    switch (sc) {
      case USCRIPT_HAN:
      case USCRIPT_HIRAGANA:
      case USCRIPT_KATAKANA:
      case USCRIPT_THAI:
      case USCRIPT_LAO:
      case USCRIPT_KHMER:
      case USCRIPT_MYANMAR:
      case USCRIPT_TIBETAN:
        ++non_spaced;
        break;
      default:
        break;
    }
  }
  return letters > 0 && 2 * non_spaced > letters;
}

LetterCase first_letter_case(std::string_view s) {
  for (char32_t c : to_u32(s)) {
    auto cp = static_cast<UChar32>(c);
    if (!u_isalpha(cp)) continue;
    if (u_isupper(cp) || u_istitle(cp)) return LetterCase::Upper;
    if (u_islower(cp)) return LetterCase::Lower;
    return LetterCase::Uncased;
  }
  return LetterCase::NoLetter;
}

bool is_word_char(char32_t c) {
  auto cp = static_cast<UChar32>(c);
  return u_isalnum(cp) || u_charType(cp) == U_NON_SPACING_MARK ||
         u_charType(cp) == U_COMBINING_SPACING_MARK || c == U'_';
}

std::vector<std::string> word_tokenize(std::string_view s) {
  std::vector<std::string> words;
  if (s.empty()) return words;
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<icu::BreakIterator> it(
      icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
  if (U_FAILURE(status)) throw std::runtime_error("ICU word break iterator unavailable");
  icu::UnicodeString u = from_utf8(s);
  it->setText(u);

  // Collect segments with their word/non-word status, then glue
  // word-hyphen-word runs that have no intervening whitespace.
  struct Segment {
    icu::UnicodeString text;
    bool is_word;
  };
  std::vector<Segment> segs;
  int32_t start = it->first();
  for (int32_t end = it->next(); end != icu::BreakIterator::DONE; start = end, end = it->next()) {
    icu::UnicodeString piece(u, start, end - start);
    bool word = it->getRuleStatus() != UBRK_WORD_NONE;
    if (!word) {
      // Segments like "_" or combining-only runs still count when they
      // contain an alphanumeric character.
      for (int32_t i = 0; i < piece.length(); ++i) {
        if (u_isalnum(piece.char32At(i))) {
          word = true;
          break;
        }
      }
    }
    segs.push_back({piece, word});
  }

  std::size_t i = 0;
  while (i < segs.size()) {
    if (!segs[i].is_word) {
      ++i;
      continue;
    }
    icu::UnicodeString acc = segs[i].text;
    std::size_t j = i + 1;
    while (j + 1 < segs.size() && !segs[j].is_word && segs[j].text.length() == 1 &&
           is_hyphen(static_cast<char32_t>(segs[j].text.char32At(0))) && segs[j + 1].is_word) {
      acc += segs[j].text;
      acc += segs[j + 1].text;
      j += 2;
    }
    words.push_back(utf8(acc));
    i = j;
  }
  return words;
}

std::size_t word_count(std::string_view s) {
  if (is_non_spaced(s)) {
    std::size_t cps = 0;
    for (char32_t c : to_u32(s)) {
      if (!u_isUWhiteSpace(static_cast<UChar32>(c))) ++cps;
    }
    return (cps + 1) / 2;
  }
  return split_whitespace(s).size();
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

}  // namespace amt::text
