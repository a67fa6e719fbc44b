// SPDX-License-Identifier: Apache-2.0
#include "nqg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nqg/error.hpp"
#include "nqg/ops.hpp"

namespace nqg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best])
      best = i;
  return best;
}

double log_sigmoid(double z) {
  return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

double safe_log(double x) { return x > 0 ? std::log(x) : kNegInf; }

double finished_score(const Hypothesis &h, double alpha) {
  if (alpha <= 0)
    return h.log_prob;
  return h.log_prob / std::pow(static_cast<double>(std::max<std::size_t>(h.ids.size(), 1)), alpha);
}

} // namespace

StepDecoder::StepDecoder(const Parameters &params, const ModelConfig &config,
                         const Example &example)
    : params_(params), config_(config), example_(example) {
  if (example_.source.empty())
    throw ContractError("cannot decode an empty sentence");
  Graph g;
  const BoundModel m = bind_const(g, params_, config_);
  const EncoderOutput enc = encode_source(m, example_.source, RunMode{});
  const AttentionMemory mem = attention_memory(m, enc);
  memory_states_ = mem.states.value();
  memory_states_t_ = mem.states_t.value();
  memory_projected_ = mem.projected.value();
  initial_state_ = init_decoder_state(m, enc).value();
}

StepDecoder::State StepDecoder::initial() const {
  return State{initial_state_, Tensor::zeros({2 * config_.hidden_dim})};
}

StepDistribution StepDecoder::step(const State &state,
                                   std::size_t prev_word) const {
  Graph g;
  const BoundModel m = bind_const(g, params_, config_);
  AttentionMemory mem;
  mem.states = g.bind(memory_states_, {});
  mem.states_t = g.bind(memory_states_t_, {});
  mem.projected = g.bind(memory_projected_, {});
  mem.length = example_.source.size();
  const DecoderStepOutput out =
      decoder_step(m, mem, prev_word, g.bind(state.context, {}),
                   g.bind(state.state, {}), RunMode{});

  StepDistribution d;
  d.state = out.state.value();
  d.context = out.context.value();
  d.attention = out.attention.value();
  d.log_gen = ops::log_softmax(out.logits).value();
  if (out.copy_logit) {
    const double z = (*out.copy_logit)[0];
    d.copy_prob = (*out.copy_prob)[0];
    d.log_copy = log_sigmoid(z);
    d.log_no_copy = log_sigmoid(-z);
  }
  return d;
}

std::vector<Decision> step_decisions(const StepDistribution &dist,
                                     const Example &example) {
  std::vector<Decision> out;
  const auto log_gen = dist.log_gen.values();
  if (!dist.copy_prob) {
    out.reserve(log_gen.size());
    for (std::size_t y = 0; y < log_gen.size(); ++y)
      out.push_back(Decision{y, std::nullopt, log_gen[y]});
    return out;
  }
  const auto alpha = dist.attention.values();
  if (*dist.copy_prob > 0.5) {
    out.reserve(alpha.size());
    for (std::size_t j = 0; j < alpha.size(); ++j)
      out.push_back(Decision{example.source[j].word, j,
                             *dist.log_copy + safe_log(alpha[j])});
    return out;
  }
  const std::size_t focus = argmax(alpha);
  out.reserve(log_gen.size());
  for (std::size_t y = 0; y < log_gen.size(); ++y) {
    const double lp = *dist.log_no_copy + log_gen[y];
    if (y == Vocabulary::kUnk)
      out.push_back(Decision{example.source[focus].word, focus, lp});
    else
      out.push_back(Decision{y, std::nullopt, lp});
  }
  return out;
}

Decision resolve_copy(const StepDistribution &dist, const Example &example) {
  const std::vector<Decision> all = step_decisions(dist, example);
  std::size_t best = 0;
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].log_prob > all[best].log_prob)
      best = i;
  return all[best];
}

Hypothesis greedy_decode(const Parameters &params, const ModelConfig &config,
                         const Example &example, std::size_t max_len) {
  if (max_len == 0)
    throw ContractError("max_len must be at least 1");
  const StepDecoder decoder(params, config, example);
  StepDecoder::State state = decoder.initial();
  Hypothesis h;
  std::size_t prev = Vocabulary::kSos;
  while (h.ids.size() < max_len) {
    const StepDistribution d = decoder.step(state, prev);
    const Decision pick = resolve_copy(d, example);
    h.ids.push_back(pick.id);
    h.copies.push_back(pick.copy);
    h.log_prob += pick.log_prob;
    if (pick.id == Vocabulary::kEos && !pick.copy)
      break;
    state = StepDecoder::State{d.state, d.context};
    prev = pick.id;
  }
  h.final = true;
  return h;
}

std::vector<Hypothesis> beam_search(const Parameters &params,
                                    const ModelConfig &config,
                                    const Example &example,
                                    const BeamOptions &options) {
  if (options.beam == 0)
    throw ContractError("beam size must be at least 1");
  if (options.max_len == 0)
    throw ContractError("max_len must be at least 1");
  const StepDecoder decoder(params, config, example);

  struct Live {
    Hypothesis hyp;
    StepDecoder::State state;
  };
  std::vector<Live> live{{Hypothesis{}, decoder.initial()}};
  std::vector<Hypothesis> finished;

  while (!live.empty()) {
    struct Expansion {
      double score;
      std::size_t parent;
      Decision decision;
    };
    std::vector<Expansion> expansions;
    std::vector<StepDistribution> dists;
    dists.reserve(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      const Hypothesis &h = live[i].hyp;
      const std::size_t prev = h.ids.empty() ? Vocabulary::kSos : h.ids.back();
      dists.push_back(decoder.step(live[i].state, prev));
      for (const Decision &d : step_decisions(dists.back(), example))
        expansions.push_back({h.log_prob + d.log_prob, i, d});
    }
    std::stable_sort(expansions.begin(), expansions.end(),
                     [](const Expansion &a, const Expansion &b) {
                       return a.score > b.score;
                     });
    if (expansions.size() > options.beam)
      expansions.resize(options.beam);

    std::vector<Live> next;
    for (const Expansion &e : expansions) {
      Hypothesis h = live[e.parent].hyp;
      h.ids.push_back(e.decision.id);
      h.copies.push_back(e.decision.copy);
      h.log_prob = e.score;
      const bool eos = e.decision.id == Vocabulary::kEos && !e.decision.copy;
      if (eos || h.ids.size() >= options.max_len) {
        h.final = true;
        finished.push_back(std::move(h));
      } else {
        const StepDistribution &d = dists[e.parent];
        next.push_back({std::move(h), StepDecoder::State{d.state, d.context}});
      }
    }
    live = std::move(next);

    // Log-probabilities only fall, so no live hypothesis can overtake.
    if (options.length_penalty <= 0 && !finished.empty() && !live.empty()) {
      double best_finished = kNegInf;
      for (const auto &h : finished)
        best_finished = std::max(best_finished, h.log_prob);
      double best_live = kNegInf;
      for (const auto &l : live)
        best_live = std::max(best_live, l.hyp.log_prob);
      if (best_finished >= best_live)
        break;
    }
  }

  std::stable_sort(finished.begin(), finished.end(),
                   [&](const Hypothesis &a, const Hypothesis &b) {
                     return finished_score(a, options.length_penalty) >
                            finished_score(b, options.length_penalty);
                   });
  if (finished.size() > options.beam)
    finished.resize(options.beam);
  return finished;
}

double rescore(const Parameters &params, const ModelConfig &config,
               const Example &example, const Hypothesis &hypothesis) {
  const StepDecoder decoder(params, config, example);
  StepDecoder::State state = decoder.initial();
  std::size_t prev = Vocabulary::kSos;
  double total = 0;
  for (std::size_t t = 0; t < hypothesis.ids.size(); ++t) {
    const StepDistribution d = decoder.step(state, prev);
    const std::vector<Decision> options = step_decisions(d, example);
    const Decision *match = nullptr;
    for (const Decision &o : options)
      if (o.id == hypothesis.ids[t] && o.copy == hypothesis.copies[t]) {
        match = &o;
        break;
      }
    if (!match)
      throw ContractError("decision " + std::to_string(t) +
                          " is not available to the model at that step");
    total += match->log_prob;
    state = StepDecoder::State{d.state, d.context};
    prev = hypothesis.ids[t];
  }
  return total;
}

std::vector<std::string> hypothesis_tokens(const Hypothesis &hypothesis,
                                           const Example &example,
                                           const Vocabulary &vocab) {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < hypothesis.ids.size(); ++t) {
    if (hypothesis.copies[t]) {
      out.push_back(example.source_tokens.at(*hypothesis.copies[t]));
      continue;
    }
    if (hypothesis.ids[t] == Vocabulary::kEos)
      break;
    out.push_back(vocab.token(hypothesis.ids[t]));
  }
  return out;
}

std::vector<std::string> generate(const Parameters &params,
                                  const ModelConfig &config,
                                  const Lexicon &lexicon,
                                  const Example &example,
                                  const BeamOptions &options) {
  if (options.beam == 1)
    return hypothesis_tokens(
        greedy_decode(params, config, example, options.max_len), example,
        lexicon.words);
  const auto best = beam_search(params, config, example, options);
  if (best.empty())
    return {};
  return hypothesis_tokens(best.front(), example, lexicon.words);
}

} // namespace nqg
