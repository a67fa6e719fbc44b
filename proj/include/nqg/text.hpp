// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nqg {

/// A token and its byte range in the text it was cut from.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct TextRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Whitespace split, then each of . , ! ? ; : " ' ( ) - becomes its own
/// token. Offsets are relative to `text` plus `base`.
std::vector<Token> tokenize(std::string_view text, std::size_t base = 0);
std::vector<std::string> tokenize_words(std::string_view text);

/**
 * Sentence boundaries: a run of [.!?] followed by whitespace and then an
 * ASCII uppercase letter or digit. A period ending one of mr. mrs. dr. st.
 * no. u.s. (case-insensitive) never closes a sentence. Returned ranges are
 * trimmed of surrounding whitespace.
 */
std::vector<TextRange> split_sentences(std::string_view text);

/// ASCII lowercase; other bytes pass through.
std::string to_lower(std::string_view s);

/// Byte offset of the code point at `char_offset` in UTF-8 text, or npos if
/// the text is shorter.
std::size_t utf8_byte_offset(std::string_view text, std::size_t char_offset);

enum class CaseTag { Lower = 0, Title = 1, Upper = 2, Mixed = 3, Other = 4 };

/// Classification of the surface form: no ASCII letters -> other; all
/// lowercase -> lower; uppercase first letter then lowercase -> title; all
/// uppercase -> upper; anything else -> mixed.
CaseTag case_feature(std::string_view token);
std::string_view case_name(CaseTag tag);
/// Inverse of case_name; unknown names map to Other.
CaseTag parse_case(std::string_view name);

enum class BioTag { O = 0, B = 1, I = 2 };

/// B at `start`, I through `end - 1`, O elsewhere. Throws ContractError
/// unless 0 <= start < end <= length.
std::vector<BioTag> bio_tag(std::size_t length, std::size_t start,
                            std::size_t end);
char bio_letter(BioTag tag);

} // namespace nqg
