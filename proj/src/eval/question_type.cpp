// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>

#include "nqg/error.hpp"
#include "nqg/eval.hpp"
#include "nqg/text.hpp"

namespace nqg {

std::string_view type_name(QuestionType type) {
  switch (type) {
  case QuestionType::What:
    return "WHAT";
  case QuestionType::How:
    return "HOW";
  case QuestionType::Who:
    return "WHO";
  case QuestionType::When:
    return "WHEN";
  case QuestionType::Which:
    return "WHICH";
  case QuestionType::Where:
    return "WHERE";
  case QuestionType::Why:
    return "WHY";
  case QuestionType::Other:
    break;
  }
  return "OTHER";
}

namespace {

constexpr std::array<std::string_view, 5> kPlaceNouns = {
    "country", "place", "city", "state", "nation"};
constexpr std::array<std::string_view, 6> kTimeNouns = {
    "time", "year", "day", "date", "century", "decade"};

bool in(std::string_view w, std::span<const std::string_view> set) {
  return std::find(set.begin(), set.end(), w) != set.end();
}

} // namespace

QuestionType classify_question_type(std::span<const std::string> tokens) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string w = to_lower(tokens[i]);
    if (w == "what") {
      if (i + 1 < tokens.size()) {
        const std::string next = to_lower(tokens[i + 1]);
        if (in(next, kPlaceNouns))
          return QuestionType::Where;
        if (in(next, kTimeNouns))
          return QuestionType::When;
      }
      return QuestionType::What;
    }
    if (w == "how")
      return QuestionType::How;
    if (w == "who" || w == "whom" || w == "whose")
      return QuestionType::Who;
    if (w == "when")
      return QuestionType::When;
    if (w == "which")
      return QuestionType::Which;
    if (w == "where")
      return QuestionType::Where;
    if (w == "why")
      return QuestionType::Why;
  }
  return QuestionType::Other;
}

std::vector<TypeScore> type_precision_recall(std::span<const Sentence> generated,
                                             std::span<const Sentence> gold) {
  if (generated.size() != gold.size())
    throw AlignmentError("type analysis: " + std::to_string(generated.size()) +
                         " generated vs " + std::to_string(gold.size()) +
                         " gold questions");
  std::vector<TypeScore> table;
  for (QuestionType t : kQuestionTypes) {
    TypeScore s;
    s.type = t;
    table.push_back(s);
  }
  const auto slot = [&](QuestionType t) -> TypeScore & {
    return table[static_cast<std::size_t>(t)];
  };
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const QuestionType g = classify_question_type(generated[i]);
    const QuestionType r = classify_question_type(gold[i]);
    ++slot(g).generated;
    ++slot(r).gold;
    if (g == r)
      ++slot(g).matched;
  }
  for (auto &s : table) {
    if (s.generated > 0)
      s.precision = static_cast<double>(s.matched) / static_cast<double>(s.generated);
    if (s.gold > 0)
      s.recall = static_cast<double>(s.matched) / static_cast<double>(s.gold);
  }
  return table;
}

} // namespace nqg
