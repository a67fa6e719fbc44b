// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nqg/triple.hpp"

namespace nqg {

/// Why a question-answer pair produced no triple.
struct SkippedQa {
  std::string qa_id;
  std::string reason; // no-answer, offset-mismatch, cross-sentence,
                      // no-token-overlap, empty-question
};

struct Extraction {
  std::vector<Triple> triples;
  std::vector<SkippedQa> skipped;
};

/**
 * SQuAD v1 JSON (data -> paragraphs -> context + qas) to triples.
 *
 * For each question the first answer is located by its character offset;
 * the sentence holding it is tokenised and the overlapping tokens become
 * the answer span. Case tags are taken before lowercasing. POS/NER are
 * left empty for a later annotate() pass.
 */
Extraction extract_triples(const std::string &squad_json);
Extraction extract_triples_file(const std::string &path);

} // namespace nqg
