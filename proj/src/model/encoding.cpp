// SPDX-License-Identifier: Apache-2.0
#include "nqg/encoding.hpp"

#include <algorithm>

#include "nqg/error.hpp"
#include "nqg/text.hpp"

namespace nqg {

Lexicon build_lexicon(const std::vector<Triple> &triples,
                      std::size_t vocab_cap) {
  std::vector<std::vector<std::string>> words, pos, ner;
  words.reserve(2 * triples.size());
  for (const auto &t : triples) {
    words.push_back(t.sentence);
    words.push_back(t.question);
    pos.push_back(t.pos);
    ner.push_back(t.ner);
  }
  Lexicon lex;
  lex.words = Vocabulary::build(words, vocab_cap);
  lex.pos = TagSet::build(pos);
  lex.ner = TagSet::build(ner);
  return lex;
}

Example encode_example(const Triple &triple, const Lexicon &lexicon,
                       const ModelConfig &config) {
  triple.validate();
  const auto &f = config.features;
  if (f.pos && triple.pos.empty())
    throw ConfigError("model uses POS tags but the triple has none");
  if (f.ner && triple.ner.empty())
    throw ConfigError("model uses NER tags but the triple has none");

  Example ex;
  ex.source_tokens = triple.sentence;
  const auto bio =
      bio_tag(triple.sentence.size(), triple.answer_start, triple.answer_end);
  ex.source.resize(triple.sentence.size());
  for (std::size_t i = 0; i < triple.sentence.size(); ++i) {
    TokenFeatures &t = ex.source[i];
    t.word = lexicon.words.id(triple.sentence[i]);
    if (f.answer)
      t.bio = static_cast<std::size_t>(bio[i]);
    if (f.pos)
      t.pos = lexicon.pos.id(triple.pos[i]);
    if (f.ner)
      t.ner = lexicon.ner.id(triple.ner[i]);
    if (f.casing)
      t.casing = triple.casing.empty()
                     ? static_cast<std::size_t>(case_feature(triple.sentence[i]))
                     : static_cast<std::size_t>(parse_case(triple.casing[i]));
  }

  if (!triple.question.empty()) {
    for (const auto &w : triple.question) {
      const std::size_t id = lexicon.words.id(w);
      ex.target.push_back(id);
      std::optional<std::size_t> copy;
      if (id == Vocabulary::kUnk) {
        auto it = std::find(triple.sentence.begin(), triple.sentence.end(), w);
        if (it != triple.sentence.end())
          copy = static_cast<std::size_t>(it - triple.sentence.begin());
      }
      ex.copy_source.push_back(copy);
    }
    ex.target.push_back(Vocabulary::kEos);
    ex.copy_source.push_back(std::nullopt);
  }
  return ex;
}

std::vector<Example> encode_examples(const std::vector<Triple> &triples,
                                     const Lexicon &lexicon,
                                     const ModelConfig &config) {
  std::vector<Example> out;
  out.reserve(triples.size());
  for (const auto &t : triples)
    out.push_back(encode_example(t, lexicon, config));
  return out;
}

} // namespace nqg
