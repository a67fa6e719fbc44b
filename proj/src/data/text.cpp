// SPDX-License-Identifier: Apache-2.0
#include "nqg/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "nqg/error.hpp"

namespace nqg {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_detached(char c) {
  switch (c) {
  case '.': case ',': case '!': case '?': case ';': case ':':
  case '"': case '\'': case '(': case ')': case '-':
    return true;
  default:
    return false;
  }
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

constexpr std::array<std::string_view, 6> kAbbreviations = {
    "mr.", "mrs.", "dr.", "st.", "no.", "u.s."};

bool ends_with_abbreviation(std::string_view text, std::size_t period) {
  std::size_t start = period;
  while (start > 0 && !is_space(text[start - 1]))
    --start;
  const std::string word = to_lower(text.substr(start, period - start + 1));
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) !=
         kAbbreviations.end();
}

} // namespace

std::vector<Token> tokenize(std::string_view text, std::size_t base) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j]))
      ++j;
    std::size_t k = i;
    while (k < j) {
      if (is_detached(text[k])) {
        tokens.push_back({std::string(1, text[k]), base + k, base + k + 1});
        ++k;
        continue;
      }
      std::size_t w = k;
      while (w < j && !is_detached(text[w]))
        ++w;
      tokens.push_back({std::string(text.substr(k, w - k)), base + k, base + w});
      k = w;
    }
    i = j;
  }
  return tokens;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  for (auto &t : tokenize(text))
    words.push_back(std::move(t.text));
  return words;
}

std::vector<TextRange> split_sentences(std::string_view text) {
  std::vector<TextRange> out;
  auto push_trimmed = [&](std::size_t b, std::size_t e) {
    while (b < e && is_space(text[b]))
      ++b;
    while (e > b && is_space(text[e - 1]))
      --e;
    if (b < e)
      out.push_back({b, e});
  };
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end + 1 < text.size() && is_terminal(text[run_end + 1]))
      ++run_end;
    std::size_t next = run_end + 1;
    if (next >= text.size() || !is_space(text[next])) {
      i = run_end + 1;
      continue;
    }
    while (next < text.size() && is_space(text[next]))
      ++next;
    const bool starts_sentence =
        next < text.size() && (is_upper(text[next]) || is_digit(text[next]));
    const bool protected_period =
        text[run_end] == '.' && ends_with_abbreviation(text, run_end);
    if (starts_sentence && !protected_period) {
      push_trimmed(start, run_end + 1);
      start = next;
    }
    i = next;
  }
  push_trimmed(start, text.size());
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto &c : out)
    if (is_upper(c))
      c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::size_t utf8_byte_offset(std::string_view text, std::size_t char_offset) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto byte = static_cast<unsigned char>(text[i]);
    if ((byte & 0xC0u) == 0x80u)
      continue;
    if (chars == char_offset)
      return i;
    ++chars;
  }
  return chars == char_offset ? text.size() : std::string_view::npos;
}

CaseTag case_feature(std::string_view token) {
  bool any_letter = false, any_upper = false, any_lower = false;
  bool rest_lower = true;
  bool first_letter_upper = false;
  bool seen_first = false;
  for (char c : token) {
    if (!is_upper(c) && !is_lower(c))
      continue;
    any_letter = true;
    any_upper = any_upper || is_upper(c);
    any_lower = any_lower || is_lower(c);
    if (!seen_first) {
      first_letter_upper = is_upper(c);
      seen_first = true;
    } else if (is_upper(c)) {
      rest_lower = false;
    }
  }
  if (!any_letter)
    return CaseTag::Other;
  if (!any_upper)
    return CaseTag::Lower;
  if (first_letter_upper && rest_lower)
    return CaseTag::Title;
  if (!any_lower)
    return CaseTag::Upper;
  return CaseTag::Mixed;
}

std::string_view case_name(CaseTag tag) {
  switch (tag) {
  case CaseTag::Lower: return "lower";
  case CaseTag::Title: return "title";
  case CaseTag::Upper: return "upper";
  case CaseTag::Mixed: return "mixed";
  case CaseTag::Other: return "other";
  }
  return "other";
}

CaseTag parse_case(std::string_view name) {
  for (auto tag : {CaseTag::Lower, CaseTag::Title, CaseTag::Upper,
                   CaseTag::Mixed})
    if (case_name(tag) == name)
      return tag;
  return CaseTag::Other;
}

std::vector<BioTag> bio_tag(std::size_t length, std::size_t start,
                            std::size_t end) {
  if (!(start < end && end <= length))
    throw ContractError("bio_tag: span [" + std::to_string(start) + ", " +
                        std::to_string(end) + ") invalid for length " +
                        std::to_string(length));
  std::vector<BioTag> tags(length, BioTag::O);
  tags[start] = BioTag::B;
  for (std::size_t i = start + 1; i < end; ++i)
    tags[i] = BioTag::I;
  return tags;
}

char bio_letter(BioTag tag) {
  switch (tag) {
  case BioTag::B: return 'B';
  case BioTag::I: return 'I';
  case BioTag::O: return 'O';
  }
  return 'O';
}

} // namespace nqg
