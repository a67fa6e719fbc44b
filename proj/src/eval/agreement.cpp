// SPDX-License-Identifier: Apache-2.0
#include <numeric>

#include "nqg/error.hpp"
#include "nqg/eval.hpp"

namespace nqg {

RatingMatrix::RatingMatrix(std::vector<std::vector<std::size_t>> counts,
                           std::size_t raters)
    : counts_(std::move(counts)), raters_(raters) {
  if (raters_ < 2)
    throw ContractError("rating matrix needs at least 2 raters per item");
  if (counts_.empty())
    throw ContractError("rating matrix has no items");
  const std::size_t k = counts_.front().size();
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i].size() != k)
      throw ContractError("rating matrix row " + std::to_string(i) + " has " +
                          std::to_string(counts_[i].size()) + " categories, expected " +
                          std::to_string(k));
    const std::size_t sum =
        std::accumulate(counts_[i].begin(), counts_[i].end(), std::size_t{0});
    if (sum != raters_)
      throw ContractError("rating matrix row " + std::to_string(i) + " sums to " +
                          std::to_string(sum) + ", expected " +
                          std::to_string(raters_));
  }
}

RatingMatrix RatingMatrix::from_scores(const std::vector<std::vector<int>> &scores,
                                       std::size_t categories) {
  if (scores.empty())
    throw ContractError("no rated items");
  std::vector<std::vector<std::size_t>> counts;
  const std::size_t n = scores.front().size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::vector<std::size_t> row(categories, 0);
    for (int s : scores[i]) {
      if (s < 1 || static_cast<std::size_t>(s) > categories)
        throw ContractError("item " + std::to_string(i) + ": score " +
                            std::to_string(s) + " outside 1.." +
                            std::to_string(categories));
      ++row[static_cast<std::size_t>(s - 1)];
    }
    if (scores[i].size() != n)
      throw ContractError("item " + std::to_string(i) + " has " +
                          std::to_string(scores[i].size()) + " ratings, expected " +
                          std::to_string(n));
    counts.push_back(std::move(row));
  }
  return RatingMatrix(std::move(counts), n);
}

double fleiss_kappa(const RatingMatrix &matrix) {
  const auto &counts = matrix.counts();
  const double n = static_cast<double>(matrix.raters());
  const double items = static_cast<double>(matrix.items());
  const std::size_t k = counts.front().size();

  std::vector<double> column(k, 0.0);
  double p_bar = 0;
  for (const auto &row : counts) {
    double agree = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const double c = static_cast<double>(row[j]);
      agree += c * (c - 1);
      column[j] += c;
    }
    p_bar += agree / (n * (n - 1));
  }
  p_bar /= items;
  double p_e = 0;
  for (double c : column) {
    const double pj = c / (items * n);
    p_e += pj * pj;
  }
  if (p_e == 1.0)
    return 1.0;
  return (p_bar - p_e) / (1.0 - p_e);
}

} // namespace nqg
