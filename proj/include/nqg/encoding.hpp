// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nqg/model.hpp"
#include "nqg/triple.hpp"
#include "nqg/vocab.hpp"

namespace nqg {

/// Everything needed to map text to model ids.
struct Lexicon {
  Vocabulary words;
  TagSet pos;
  TagSet ner;
};

/// A triple in id space.
struct Example {
  std::vector<TokenFeatures> source;
  /// Source tokens as stored in the triple; copy emissions come from here.
  std::vector<std::string> source_tokens;
  /// Question ids terminated by EOS; empty when the triple has no question.
  std::vector<std::size_t> target;
  /// Per target position: first source position holding the gold token when
  /// that token is out of vocabulary, otherwise nullopt.
  std::vector<std::optional<std::size_t>> copy_source;
};

/// Word vocabulary over sentences and questions (capped), tag sets over
/// the annotations.
Lexicon build_lexicon(const std::vector<Triple> &triples,
                      std::size_t vocab_cap = 20000);

/// Throws ConfigError when the model needs POS/NER tags the triple lacks.
Example encode_example(const Triple &triple, const Lexicon &lexicon,
                       const ModelConfig &config);
std::vector<Example> encode_examples(const std::vector<Triple> &triples,
                                     const Lexicon &lexicon,
                                     const ModelConfig &config);

} // namespace nqg
