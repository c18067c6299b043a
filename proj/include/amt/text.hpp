#pragma once

// Unicode helpers shared across modules. All strings are UTF-8.

#include <string>
#include <string_view>
#include <vector>

namespace amt::text {

std::string nfc(std::string_view s);

// Full Unicode case folding (locale independent).
std::string casefold(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

std::string_view trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

std::u32string to_u32(std::string_view s);
std::string to_utf8(std::u32string_view s);

// True when most letters belong to scripts written without spaces between
// words (Han, Kana, Thai, Lao, Khmer, Myanmar, Tibetan).
bool is_non_spaced(std::string_view s);

enum class LetterCase { Upper, Lower, Uncased, NoLetter };

// Case of the first letter in `s`, skipping digits and punctuation.
LetterCase first_letter_case(std::string_view s);

bool is_word_char(char32_t c);

// Word-level segmentation following the Unicode word-break rules, with
// punctuation-only segments removed and hyphenated compounds kept whole.
std::vector<std::string> word_tokenize(std::string_view s);

// Whitespace tokens for spaced scripts; ceil(code points / 2) otherwise.
std::size_t word_count(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

}  // namespace amt::text
