// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nqg/encoding.hpp"
#include "nqg/eval.hpp"
#include "nqg/model.hpp"
#include "nqg/trainer.hpp"

namespace nqg::testing {

/// Small model: vocab 20, word 8, features 4, hidden 8, no dropout.
ModelConfig tiny_config();

/// Random source of `n` tokens with every enabled feature filled and a
/// random target of `target_len` decisions ending in EOS. Roughly a third
/// of the targets are copy targets when `with_copies` is set.
Example random_example(const ModelConfig &config, std::size_t n,
                       std::size_t target_len, Rng &rng,
                       bool with_copies = true);

/// Parameters with every weight drawn uniformly from [-scale, scale]
/// (biases included), so gradient checks exercise all paths.
Parameters random_parameters(const ModelConfig &config, std::uint64_t seed,
                             double scale = 0.5);

struct GradCheck {
  double max_relative_error = 0;
  std::string worst; // "name[index]"
  std::size_t checked = 0;
};
/// Compares accumulate_gradients with central differences of step_loss
/// for every coordinate of every parameter. Relative error is
/// |a - n| / max(|a|, |n|, 1e-6).
GradCheck gradient_check(Parameters &params, const ModelConfig &config,
                         const std::vector<Example> &batch, double eps = 1e-5);

/// Runs `steps` teacher-forced decoder steps through the graph model and
/// the plain-loop oracle; returns the largest absolute difference over
/// alpha, c, s, r, m, gen and p.
double decoder_oracle_gap(const Parameters &params, const ModelConfig &config,
                          const Example &example, std::size_t steps);

struct BleuCase {
  std::string name;
  std::vector<Sentence> hypotheses;
  std::vector<std::vector<Sentence>> references;
};
/// 25 constructed corpora: identity, brevity, clipping, multi-reference,
/// zero-precision and random cases.
std::vector<BleuCase> bleu_cases();

/// Triples over a tiny closed vocabulary: "what is X ?" style questions.
std::vector<Triple> toy_triples(std::size_t count, std::uint64_t seed);

std::string temp_path(const std::string &name);

// ------------------------------------------------------------- oracles

/// Plain-loop recomputation of the model, sharing no code with
/// the graph implementation.
namespace oracle {

using Vec = std::vector<double>;

struct Encoded {
  std::vector<Vec> states; // h_i = [fwd; bwd]
  Vec initial_state;       // s_0
};

struct Step {
  Vec scores, alpha, context, state, readout, maxout, logits, gen;
  std::optional<double> copy_prob;
};

Encoded encode(const Parameters &p, const ModelConfig &c,
               const std::vector<TokenFeatures> &source);
Step decoder_step(const Parameters &p, const ModelConfig &c,
                  const Encoded &enc, std::size_t prev_word,
                  const Vec &prev_context, const Vec &prev_state);
/// Teacher-forced mean token loss of a batch.
double batch_loss(const Parameters &p, const ModelConfig &c,
                  const std::vector<Example> &batch);

/// Corpus BLEU-4 by direct counting.
double naive_bleu(const std::vector<Sentence> &hyps,
                  const std::vector<std::vector<Sentence>> &refs);

struct Enumerated {
  std::vector<std::size_t> ids;
  double log_prob;
};
/// Best complete sequence over all decision paths of length <= max_len
/// with copy disabled.
Enumerated enumerate_best(const Parameters &p, const ModelConfig &c,
                          const Example &example, std::size_t max_len);

struct ScheduleTrace {
  std::vector<std::string> phases; // after each metric
  std::vector<double> lrs;
};
/// Counter simulation written independently from advance_schedule.
ScheduleTrace simulate_schedule(const std::vector<double> &metrics,
                                std::size_t adam_patience,
                                std::size_t sgd_patience, double adam_lr,
                                double sgd_lr);

} // namespace oracle

} // namespace nqg::testing
