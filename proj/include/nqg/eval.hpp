// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nqg/triple.hpp"

namespace nqg {

using Sentence = std::vector<std::string>;

// ---------------------------------------------------------------- BLEU

/// Sufficient statistics for corpus BLEU-4. Shards merge by summation.
struct BleuStats {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;

  BleuStats &operator+=(const BleuStats &other);
};

/// Clipped n-gram counts of one hypothesis against its references. The
/// effective reference length is the closest one (shorter on ties).
BleuStats bleu_stats(const Sentence &hypothesis,
                     std::span<const Sentence> references);

struct BleuScore {
  double bleu = 0;  // 0..100
  std::array<double, 4> precisions{};
  double brevity_penalty = 0;
};

/// Geometric mean of the four corpus precisions times the brevity penalty,
/// scaled to [0,100]; 0 when any precision is 0.
BleuScore bleu_from_stats(const BleuStats &stats);

/// Corpus BLEU-4 with no smoothing. Throws ContractError if the lists
/// differ in length or are empty.
double bleu4(std::span<const Sentence> hypotheses,
             std::span<const std::vector<Sentence>> references);
/// Single-reference convenience overload.
double bleu4(std::span<const Sentence> hypotheses,
             std::span<const Sentence> references);

/// Sentence-level diagnostic with add-one smoothing on orders 2..4.
double sentence_bleu_smoothed(const Sentence &hypothesis,
                              std::span<const Sentence> references);

// ------------------------------------------------------ question types

enum class QuestionType { What, How, Who, When, Which, Where, Why, Other };
inline constexpr std::array<QuestionType, 8> kQuestionTypes = {
    QuestionType::What,  QuestionType::How,   QuestionType::Who,
    QuestionType::When,  QuestionType::Which, QuestionType::Where,
    QuestionType::Why,   QuestionType::Other};

std::string_view type_name(QuestionType type);

/// First interrogative word decides the type (whom/whose count as WHO).
/// "what" directly followed by country/place/city/state/nation is WHERE and
/// by time/year/day/date/century/decade is WHEN. No keyword: OTHER.
QuestionType classify_question_type(std::span<const std::string> tokens);

struct TypeScore {
  QuestionType type = QuestionType::Other;
  std::size_t matched = 0;   // generated type == gold type == T
  std::size_t generated = 0; // generated type == T
  std::size_t gold = 0;      // gold type == T
  /// Undefined (nullopt) when the denominator is zero.
  std::optional<double> precision;
  std::optional<double> recall;
};

/// One row per type, in kQuestionTypes order.
std::vector<TypeScore> type_precision_recall(std::span<const Sentence> generated,
                                             std::span<const Sentence> gold);

// --------------------------------------------------------- agreement

/// Items x categories count table; every row sums to the rater count.
class RatingMatrix {
public:
  RatingMatrix(std::vector<std::vector<std::size_t>> counts,
               std::size_t raters);
  /// From per-item score lists (one score per rater, 1..categories).
  static RatingMatrix from_scores(const std::vector<std::vector<int>> &scores,
                                  std::size_t categories = 3);

  const std::vector<std::vector<std::size_t>> &counts() const {
    return counts_;
  }
  std::size_t raters() const { return raters_; }
  std::size_t items() const { return counts_.size(); }

private:
  std::vector<std::vector<std::size_t>> counts_;
  std::size_t raters_;
};

/// (P - Pe) / (1 - Pe); 1 when Pe == 1.
double fleiss_kappa(const RatingMatrix &matrix);

// ------------------------------------------------------------ rating

struct RatingRow {
  std::size_t id = 0;
  std::string sentence;
  std::string answer;
  std::string question;
  std::optional<int> score;
};

/// Seeded sample without replacement of `n` generated questions, in
/// shuffled order. Throws ContractError if n exceeds the corpus.
std::vector<RatingRow> sample_for_rating(const std::vector<Triple> &inputs,
                                         const std::vector<std::string> &generated,
                                         std::size_t n, std::uint64_t seed);

/// CSV with header "id,sentence,answer,question,score".
void write_rating_sheet(std::ostream &out, const std::vector<RatingRow> &rows);
std::vector<RatingRow> read_rating_sheet(std::istream &in,
                                         const std::string &source = "<stream>");

struct RatingSummary {
  double average_score = 0;
  double kappa = 0;
  std::size_t items = 0;
  std::size_t raters = 0;
};

/// Filled sheets from >= 2 raters covering the same ids; scores in {1,2,3}.
RatingSummary aggregate_ratings(const std::vector<std::vector<RatingRow>> &sheets);

} // namespace nqg
