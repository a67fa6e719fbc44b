// SPDX-License-Identifier: Apache-2.0
#include "nqg/vocab.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "nqg/error.hpp"

namespace nqg {

namespace {

const std::vector<std::string> kSpecialTokens = {"<pad>", "<unk>", "<s>",
                                                 "</s>"};

struct Ranked {
  std::string token;
  std::size_t count;
  std::size_t first_seen;
};

// Frequency descending, then first occurrence.
std::vector<Ranked>
rank_tokens(std::span<const std::vector<std::string>> streams,
            const std::vector<std::string> &skip) {
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<Ranked> ranked;
  for (const auto &stream : streams)
    for (const auto &tok : stream) {
      if (std::find(skip.begin(), skip.end(), tok) != skip.end())
        continue;
      auto [it, inserted] = slot.try_emplace(tok, ranked.size());
      if (inserted)
        ranked.push_back({tok, 0, ranked.size()});
      ++ranked[it->second].count;
    }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked &a, const Ranked &b) {
                     return a.count > b.count;
                   });
  return ranked;
}

} // namespace

Vocabulary::Vocabulary() {
  for (const auto &s : kSpecialTokens)
    add(s);
}

std::size_t Vocabulary::add(std::string_view token, std::size_t count) {
  if (frozen_)
    throw ContractError("vocabulary is frozen");
  std::string key(token);
  if (index_.count(key))
    throw ContractError("duplicate vocabulary token '" + key + "'");
  const std::size_t id = tokens_.size();
  index_.emplace(key, id);
  tokens_.push_back(std::move(key));
  counts_.push_back(count);
  return id;
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> streams,
                             std::size_t cap) {
  Vocabulary v;
  const auto ranked = rank_tokens(streams, kSpecialTokens);
  for (std::size_t i = 0; i < ranked.size() && i < cap; ++i)
    v.add(ranked[i].token, ranked[i].count);
  v.freeze();
  return v;
}

Vocabulary Vocabulary::load(std::istream &in, std::size_t cap) {
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (v.size() < cap + kSpecials && std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0)
      throw FormatError("vocab line " + std::to_string(line_no) +
                        ": expected token<TAB>count");
    std::size_t count = 0;
    try {
      count = std::stoull(line.substr(tab + 1));
    } catch (const std::exception &) {
      throw FormatError("vocab line " + std::to_string(line_no) +
                        ": bad count");
    }
    const std::string token = line.substr(0, tab);
    if (v.contains(token))
      throw FormatError("vocab line " + std::to_string(line_no) +
                        ": duplicate token '" + token + "'");
    v.add(token, count);
  }
  v.freeze();
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kSpecials ||
      !std::equal(kSpecialTokens.begin(), kSpecialTokens.end(),
                  tokens.begin()))
    throw FormatError("vocabulary token list must start with the specials");
  Vocabulary v;
  for (std::size_t i = kSpecials; i < tokens.size(); ++i)
    v.add(tokens[i]);
  v.freeze();
  return v;
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

const std::string &Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size())
    throw LookupError("vocabulary id " + std::to_string(id) + " outside " +
                      std::to_string(tokens_.size()) + " entries");
  return tokens_[id];
}

void Vocabulary::save(std::ostream &out) const {
  for (std::size_t i = kSpecials; i < tokens_.size(); ++i)
    out << tokens_[i] << '\t' << counts_[i] << '\n';
}

TagSet::TagSet() {
  tags_.push_back("<unk>");
  index_.emplace("<unk>", kUnk);
}

TagSet TagSet::build(std::span<const std::vector<std::string>> streams) {
  TagSet t;
  for (const auto &r : rank_tokens(streams, {"<unk>"})) {
    t.index_.emplace(r.token, t.tags_.size());
    t.tags_.push_back(r.token);
  }
  return t;
}

TagSet TagSet::from_tags(std::vector<std::string> tags) {
  if (tags.empty() || tags.front() != "<unk>")
    throw FormatError("tag list must start with <unk>");
  TagSet t;
  for (std::size_t i = 1; i < tags.size(); ++i) {
    t.index_.emplace(tags[i], t.tags_.size());
    t.tags_.push_back(tags[i]);
  }
  return t;
}

std::size_t TagSet::id(std::string_view tag) const {
  auto it = index_.find(std::string(tag));
  return it == index_.end() ? kUnk : it->second;
}

} // namespace nqg
