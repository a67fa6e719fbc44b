// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nqg {

/**
 * Word vocabulary shared by encoder and decoder.
 *
 * Ids 0..3 are PAD, UNK, SOS, EOS. Remaining tokens are ranked by corpus
 * frequency; equal counts keep the order of first occurrence in the stream.
 */
class Vocabulary {
public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kSos = 2;
  static constexpr std::size_t kEos = 3;
  static constexpr std::size_t kSpecials = 4;

  /// Specials only; not frozen.
  Vocabulary();

  /// Top `cap` tokens of the streams. The result is frozen.
  static Vocabulary build(std::span<const std::vector<std::string>> streams,
                          std::size_t cap = 20000);
  /// Reads "token<TAB>count" lines in rank order, keeping the first `cap`.
  static Vocabulary load(std::istream &in, std::size_t cap = 20000);
  /// Rebuilds from a full id -> token list (specials included).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  /// Appends an unseen token. Throws ContractError once frozen.
  std::size_t add(std::string_view token, std::size_t count = 0);
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  /// UNK for unknown tokens.
  std::size_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string &token(std::size_t id) const;
  std::size_t count(std::size_t id) const { return counts_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string> &tokens() const { return tokens_; }

  /// Non-special entries as "token<TAB>count", rank order.
  void save(std::ostream &out) const;

private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
  bool frozen_ = false;
};

/// Open tag set (POS or NER) with UNK at id 0; tags ranked like Vocabulary.
class TagSet {
public:
  static constexpr std::size_t kUnk = 0;

  TagSet();
  static TagSet build(std::span<const std::vector<std::string>> streams);
  static TagSet from_tags(std::vector<std::string> tags);

  std::size_t id(std::string_view tag) const;
  const std::string &tag(std::size_t id) const { return tags_.at(id); }
  std::size_t size() const { return tags_.size(); }
  const std::vector<std::string> &tags() const { return tags_; }

private:
  std::vector<std::string> tags_;
  std::unordered_map<std::string, std::size_t> index_;
};

} // namespace nqg
