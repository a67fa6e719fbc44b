// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "nqg/error.hpp"
#include "nqg/ops.hpp"
#include "nqg/trainer.hpp"

namespace nqg {

double token_nll(std::span<const double> gen_dist, std::size_t gold,
                 std::optional<double> copy_prob,
                 std::span<const double> attention,
                 std::optional<std::size_t> copy_position) {
  if (gold >= gen_dist.size())
    throw LookupError("gold id " + std::to_string(gold) + " outside vocabulary of " +
                      std::to_string(gen_dist.size()));
  if (!copy_prob)
    return -std::log(gen_dist[gold]);
  if (copy_position) {
    if (*copy_position >= attention.size())
      throw LookupError("copy position " + std::to_string(*copy_position) +
                        " outside sentence of " + std::to_string(attention.size()));
    return -std::log(attention[*copy_position]) - std::log(*copy_prob);
  }
  return -std::log(gen_dist[gold]) - std::log1p(-*copy_prob);
}

Var token_loss(const DecoderStepOutput &step, std::size_t gold,
               std::optional<std::size_t> copy_position) {
  if (!step.copy_logit)
    return ops::neg(ops::pick(ops::log_softmax(step.logits), gold));
  if (copy_position)
    return ops::neg(ops::add(
        ops::pick(ops::log_softmax(step.attention_scores), *copy_position),
        ops::log_sigmoid(*step.copy_logit)));
  return ops::neg(ops::add(ops::pick(ops::log_softmax(step.logits), gold),
                           ops::log_sigmoid(ops::neg(*step.copy_logit))));
}

Var sequence_loss(const BoundModel &model, const Example &example,
                  const RunMode &mode) {
  if (example.target.empty())
    throw ContractError("example has no target question");
  const EncoderOutput enc = encode_source(model, example.source, mode);
  const AttentionMemory memory = attention_memory(model, enc);
  Var state = init_decoder_state(model, enc);
  Var context = initial_context(model);
  std::size_t prev = Vocabulary::kSos;
  std::vector<Var> terms;
  terms.reserve(example.target.size());
  for (std::size_t t = 0; t < example.target.size(); ++t) {
    const DecoderStepOutput out =
        decoder_step(model, memory, prev, context, state, mode);
    terms.push_back(token_loss(out, example.target[t], example.copy_source[t]));
    state = out.state;
    context = out.context;
    prev = example.target[t];
  }
  return ops::sum(ops::concat(terms));
}

namespace {

std::size_t count_tokens(std::span<const Example> batch) {
  if (batch.empty())
    throw ContractError("empty batch");
  std::size_t total = 0;
  for (const auto &ex : batch) {
    if (ex.target.empty())
      throw ContractError("example has no target question");
    total += ex.target.size();
  }
  return total;
}

} // namespace

double step_loss(const Parameters &params, const ModelConfig &config,
                 std::span<const Example> batch) {
  const std::size_t tokens = count_tokens(batch);
  double total = 0;
  for (const auto &ex : batch) {
    Graph g;
    const BoundModel m = bind_const(g, params, config);
    total += sequence_loss(m, ex, RunMode{})[0];
  }
  return total / static_cast<double>(tokens);
}

double accumulate_gradients(Parameters &params, const ModelConfig &config,
                            std::span<const Example> batch,
                            const RunMode &mode) {
  const std::size_t tokens = count_tokens(batch);
  const double inv = 1.0 / static_cast<double>(tokens);
  double total = 0;
  for (const auto &ex : batch) {
    Graph g;
    const BoundModel m = bind(g, params, config);
    const Var loss = sequence_loss(m, ex, mode);
    total += loss[0];
    g.backward(ops::scale(loss, inv));
  }
  return total * inv;
}

} // namespace nqg
