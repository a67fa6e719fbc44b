// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "nqg/error.hpp"
#include "nqg/eval.hpp"

namespace nqg {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const Sentence &s, std::size_t n) {
  NgramCounts counts;
  if (s.size() < n)
    return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i)
    ++counts[Sentence(s.begin() + static_cast<std::ptrdiff_t>(i),
                      s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

} // namespace

BleuStats &BleuStats::operator+=(const BleuStats &other) {
  for (std::size_t n = 0; n < 4; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  hypothesis_length += other.hypothesis_length;
  reference_length += other.reference_length;
  return *this;
}

BleuStats bleu_stats(const Sentence &hypothesis,
                     std::span<const Sentence> references) {
  if (references.empty())
    throw ContractError("bleu: hypothesis without references");
  BleuStats s;
  s.hypothesis_length = hypothesis.size();
  std::size_t best = references.front().size();
  for (const auto &r : references) {
    const auto diff = [&](std::size_t len) {
      return len > hypothesis.size() ? len - hypothesis.size()
                                     : hypothesis.size() - len;
    };
    if (diff(r.size()) < diff(best) ||
        (diff(r.size()) == diff(best) && r.size() < best))
      best = r.size();
  }
  s.reference_length = best;

  for (std::size_t n = 1; n <= 4; ++n) {
    const NgramCounts hyp = count_ngrams(hypothesis, n);
    NgramCounts max_ref;
    for (const auto &r : references)
      for (const auto &[gram, c] : count_ngrams(r, n)) {
        auto &m = max_ref[gram];
        m = std::max(m, c);
      }
    for (const auto &[gram, c] : hyp) {
      auto it = max_ref.find(gram);
      if (it != max_ref.end())
        s.matches[n - 1] += std::min(c, it->second);
      s.totals[n - 1] += c;
    }
  }
  return s;
}

BleuScore bleu_from_stats(const BleuStats &stats) {
  BleuScore score;
  double log_sum = 0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    if (stats.totals[n] == 0 || stats.matches[n] == 0) {
      zero = true;
      continue;
    }
    score.precisions[n] = static_cast<double>(stats.matches[n]) /
                          static_cast<double>(stats.totals[n]);
    log_sum += std::log(score.precisions[n]);
  }
  if (stats.hypothesis_length == 0) {
    score.brevity_penalty = 0;
    return score;
  }
  score.brevity_penalty =
      stats.hypothesis_length < stats.reference_length
          ? std::exp(1.0 - static_cast<double>(stats.reference_length) /
                               static_cast<double>(stats.hypothesis_length))
          : 1.0;
  if (zero)
    return score;
  score.bleu = 100.0 * score.brevity_penalty * std::exp(log_sum / 4.0);
  return score;
}

double bleu4(std::span<const Sentence> hypotheses,
             std::span<const std::vector<Sentence>> references) {
  if (hypotheses.size() != references.size())
    throw ContractError("bleu: " + std::to_string(hypotheses.size()) +
                        " hypotheses vs " + std::to_string(references.size()) +
                        " reference sets");
  if (hypotheses.empty())
    throw ContractError("bleu: empty corpus");
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i)
    total += bleu_stats(hypotheses[i], references[i]);
  return bleu_from_stats(total).bleu;
}

double bleu4(std::span<const Sentence> hypotheses,
             std::span<const Sentence> references) {
  std::vector<std::vector<Sentence>> wrapped;
  wrapped.reserve(references.size());
  for (const auto &r : references)
    wrapped.push_back({r});
  return bleu4(hypotheses, wrapped);
}

double sentence_bleu_smoothed(const Sentence &hypothesis,
                              std::span<const Sentence> references) {
  const BleuStats s = bleu_stats(hypothesis, references);
  if (s.hypothesis_length == 0)
    return 0;
  double log_sum = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    const double add = n == 0 ? 0.0 : 1.0;
    const double m = static_cast<double>(s.matches[n]) + add;
    const double t = static_cast<double>(s.totals[n]) + add;
    if (m == 0)
      return 0;
    log_sum += std::log(m / t);
  }
  const double bp =
      s.hypothesis_length < s.reference_length
          ? std::exp(1.0 - static_cast<double>(s.reference_length) /
                               static_cast<double>(s.hypothesis_length))
          : 1.0;
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

} // namespace nqg
