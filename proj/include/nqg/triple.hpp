// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nqg/tensor.hpp"
#include "nqg/vocab.hpp"

namespace nqg {

/// One sentence-answer-question instance. Sentence and question tokens are
/// lowercased; `casing` was computed on the original surface forms.
/// Annotation lists are either empty (absent) or sentence-length.
struct Triple {
  std::vector<std::string> sentence;
  std::size_t answer_start = 0;
  std::size_t answer_end = 0;
  std::vector<std::string> question;
  std::vector<std::string> pos;
  std::vector<std::string> ner;
  std::vector<std::string> casing;

  /// Throws ContractError when the span or annotation lengths are invalid.
  void validate() const;
  std::vector<std::string> answer_tokens() const;

  friend bool operator==(const Triple &, const Triple &) = default;
};

/// JSON-lines: one object per triple with fields sentence, answer_start,
/// answer_end, question, pos, ner, case.
void write_triples(std::ostream &out, const std::vector<Triple> &triples);
/// `source` names the stream in error messages. The question field may be
/// absent (generation inputs).
std::vector<Triple> read_triples(std::istream &in,
                                 const std::string &source = "<stream>");
std::vector<Triple> read_triples_file(const std::string &path);
void write_triples_file(const std::string &path,
                        const std::vector<Triple> &triples);

/**
 * Fills POS and NER tags.
 *
 * The fallback tags every token pos=X, ner=O and never fails. The
 * file-backed annotator reads CoNLL-style blocks (token<TAB>pos<TAB>ner per
 * line, blank line between sentences), one block per triple in order.
 */
class Annotator {
public:
  static Annotator fallback();
  static Annotator from_conll(std::istream &in,
                              const std::string &source = "<stream>");
  static Annotator from_conll_file(const std::string &path);

  bool is_fallback() const { return fallback_; }
  /// Throws AlignmentError (with the block's first line number) when a
  /// block's tokens disagree with the sentence.
  void apply(std::vector<Triple> &triples) const;

private:
  struct Line {
    std::string token, pos, ner;
  };
  struct Block {
    std::size_t first_line = 0;
    std::vector<Line> lines;
  };
  bool fallback_ = true;
  std::string source_;
  std::vector<Block> blocks_;
};

void annotate(std::vector<Triple> &triples, const Annotator &annotator);

/// Seeded shuffle, then the first ceil(n/2) go to dev, the rest to test.
std::pair<std::vector<Triple>, std::vector<Triple>>
split_dev_test(const std::vector<Triple> &dev, std::uint64_t seed);

/**
 * Overwrites rows of `matrix` for vocabulary tokens found in a GloVe-style
 * text file ("token v1 ... vk"). Returns the number of distinct rows
 * replaced. Throws FormatError (with line number) if a line's width differs
 * from matrix.cols().
 */
std::size_t load_pretrained_embeddings(std::istream &in,
                                       const Vocabulary &vocab,
                                       Tensor &matrix,
                                       const std::string &source = "<stream>");
/// Vector width of the first non-empty line, 0 for an empty file.
std::size_t pretrained_width(const std::string &path);

} // namespace nqg
