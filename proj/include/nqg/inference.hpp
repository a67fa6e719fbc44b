// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nqg/encoding.hpp"
#include "nqg/model.hpp"
#include "nqg/vocab.hpp"

namespace nqg {

/// One output decision: the id fed back to the decoder and, for a copy,
/// the source position it came from.
struct Decision {
  std::size_t id = 0;
  std::optional<std::size_t> copy;
  double log_prob = 0;
};

struct Hypothesis {
  /// Fed-back ids; ends with EOS when the hypothesis stopped on its own.
  std::vector<std::size_t> ids;
  std::vector<std::optional<std::size_t>> copies;
  double log_prob = 0;
  bool final = false;
};

/// Distributions produced by one decoder step, as plain values.
struct StepDistribution {
  Tensor state;
  Tensor context;
  Tensor attention;
  Tensor log_gen; // log of the generation distribution
  std::optional<double> copy_prob;
  std::optional<double> log_copy;    // log p
  std::optional<double> log_no_copy; // log (1 - p)
};

/**
 * Encodes one input once and runs decoder steps against the stored memory.
 * Each step builds a short-lived graph, so long decodes stay bounded in
 * memory. Parameters must outlive the decoder.
 */
class StepDecoder {
public:
  StepDecoder(const Parameters &params, const ModelConfig &config,
              const Example &example);

  struct State {
    Tensor state;
    Tensor context;
  };
  State initial() const;
  StepDistribution step(const State &state, std::size_t prev_word) const;

  const Example &example() const { return example_; }
  const ModelConfig &config() const { return config_; }

private:
  const Parameters &params_;
  ModelConfig config_;
  Example example_;
  Tensor memory_states_;
  Tensor memory_states_t_;
  Tensor memory_projected_;
  Tensor initial_state_;
};

/// All decisions available after one step, in index order: copies by
/// source position when p > 0.5, otherwise generation by vocabulary id with
/// UNK replaced by a copy of the attention argmax. Without copy, every id.
std::vector<Decision> step_decisions(const StepDistribution &dist,
                                     const Example &example);

/// Highest-scoring decision of step_decisions (lowest index on ties).
Decision resolve_copy(const StepDistribution &dist, const Example &example);

Hypothesis greedy_decode(const Parameters &params, const ModelConfig &config,
                         const Example &example, std::size_t max_len);

struct BeamOptions {
  std::size_t beam = 12;
  std::size_t max_len = 40;
  /// Finished scores are divided by length^alpha when alpha > 0.
  double length_penalty = 0;
};

/// Finished hypotheses best first, at most `beam` of them.
std::vector<Hypothesis> beam_search(const Parameters &params,
                                    const ModelConfig &config,
                                    const Example &example,
                                    const BeamOptions &options);

/// Replays a hypothesis' decisions and sums their log-probabilities.
double rescore(const Parameters &params, const ModelConfig &config,
               const Example &example, const Hypothesis &hypothesis);

/// Surface tokens of a hypothesis (EOS dropped, copies resolved).
std::vector<std::string> hypothesis_tokens(const Hypothesis &hypothesis,
                                           const Example &example,
                                           const Vocabulary &vocab);

/// beam == 1 runs greedy decoding.
std::vector<std::string> generate(const Parameters &params,
                                  const ModelConfig &config,
                                  const Lexicon &lexicon,
                                  const Example &example,
                                  const BeamOptions &options);

} // namespace nqg
