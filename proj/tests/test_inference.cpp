// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "nqg/error.hpp"
#include "nqg/inference.hpp"
#include "support.hpp"

using namespace nqg;
using namespace nqg::testing;

namespace {

StepDistribution make_dist(std::vector<double> gen, std::vector<double> alpha,
                           std::optional<double> p) {
  StepDistribution d;
  for (double &g : gen)
    g = std::log(g);
  d.log_gen = Tensor::vector(gen);
  d.attention = Tensor::vector(alpha);
  if (p) {
    d.copy_prob = *p;
    d.log_copy = std::log(*p);
    d.log_no_copy = std::log1p(-*p);
  }
  return d;
}

Example source_of(std::vector<std::string> tokens, std::vector<std::size_t> ids) {
  Example ex;
  ex.source_tokens = std::move(tokens);
  for (auto id : ids) {
    TokenFeatures t;
    t.word = id;
    ex.source.push_back(t);
  }
  return ex;
}

// Readout is a positive constant, so the output row of `favoured` wins.
Parameters steered(const ModelConfig &c, std::size_t favoured, double margin) {
  Parameters p = random_parameters(c, 3);
  for (double &v : p.decoder_embedding().values())
    v = 1.0;
  for (double &v : p.readout_word.values())
    v = 1.0;
  for (double &v : p.readout_context.values())
    v = 0.0;
  for (double &v : p.readout_state.values())
    v = 0.0;
  for (double &v : p.output_weight.values())
    v = 0.0;
  for (std::size_t j = 0; j < c.hidden_dim; ++j)
    p.output_weight.at(favoured, j) = margin;
  for (double &v : p.copy_state.values())
    v = 0.0;
  for (double &v : p.copy_context.values())
    v = 0.0;
  p.copy_bias[0] = -40.0;
  return p;
}

Vocabulary numbered_vocab(std::size_t size) {
  std::vector<std::string> tokens{"<pad>", "<unk>", "<s>", "</s>"};
  for (std::size_t i = Vocabulary::kSpecials; i < size; ++i)
    tokens.push_back("w" + std::to_string(i));
  return Vocabulary::from_tokens(tokens);
}

} // namespace

TEST_CASE("copy resolution rule") {
  const Example ex = source_of({"a", "b", "c", "zorvath"}, {4, 5, 6, Vocabulary::kUnk});
  const std::vector<double> gen{0.05, 0.05, 0.05, 0.05, 0.6, 0.2};

  SUBCASE("high switch copies the attention peak") {
    const Decision d = resolve_copy(make_dist(gen, {0.1, 0.1, 0.1, 0.7}, 0.9), ex);
    CHECK(d.copy == std::optional<std::size_t>(3));
    CHECK(d.id == Vocabulary::kUnk);
    CHECK(d.log_prob == doctest::Approx(std::log(0.9) + std::log(0.7)));
  }
  SUBCASE("low switch generates") {
    const Decision d = resolve_copy(make_dist(gen, {0.1, 0.1, 0.1, 0.7}, 0.1), ex);
    CHECK_FALSE(d.copy.has_value());
    CHECK(d.id == 4);
  }
  SUBCASE("generated unk falls back to the attention peak") {
    const std::vector<double> unk_heavy{0.05, 0.7, 0.05, 0.05, 0.1, 0.05};
    const Decision d = resolve_copy(make_dist(unk_heavy, {0.6, 0.2, 0.1, 0.1}, 0.1), ex);
    CHECK(d.copy == std::optional<std::size_t>(0));
    CHECK(d.id == 4);
    CHECK(d.log_prob == doctest::Approx(std::log(0.9) + std::log(0.7)));
  }
  SUBCASE("switch exactly one half generates") {
    const Decision d = resolve_copy(make_dist(gen, {0.1, 0.1, 0.1, 0.7}, 0.5), ex);
    CHECK_FALSE(d.copy.has_value());
  }
  SUBCASE("ties go to the lowest index") {
    const Decision d = resolve_copy(make_dist(gen, {0.4, 0.4, 0.1, 0.1}, 0.9), ex);
    CHECK(d.copy == std::optional<std::size_t>(0));
  }
  SUBCASE("without copy every id is a candidate") {
    const std::vector<double> unk_heavy{0.05, 0.7, 0.05, 0.05, 0.1, 0.05};
    const auto all = step_decisions(make_dist(unk_heavy, {1, 0, 0, 0}, std::nullopt), ex);
    CHECK(all.size() == 6);
    CHECK(resolve_copy(make_dist(unk_heavy, {1, 0, 0, 0}, std::nullopt), ex).id ==
          Vocabulary::kUnk);
  }
}

TEST_CASE("greedy stops on eos and respects max_len") {
  const ModelConfig c = tiny_config();
  Rng rng(1);
  const Example ex = random_example(c, 4, 2, rng);
  const Vocabulary vocab = numbered_vocab(c.vocab_size);

  const Parameters eos = steered(c, Vocabulary::kEos, 10.0);
  const Hypothesis h = greedy_decode(eos, c, ex, 5);
  CHECK(h.ids == std::vector<std::size_t>{Vocabulary::kEos});
  CHECK(hypothesis_tokens(h, ex, vocab).empty());

  const Parameters never = steered(c, 7, 10.0);
  const Hypothesis g = greedy_decode(never, c, ex, 3);
  CHECK(hypothesis_tokens(g, ex, vocab) == std::vector<std::string>{"w7", "w7", "w7"});
  CHECK(g.final);
  CHECK_THROWS_AS(greedy_decode(never, c, ex, 0), ContractError);
}

TEST_CASE("beam of one equals greedy") {
  for (bool copy : {true, false}) {
    ModelConfig c = tiny_config();
    c.copy_enabled = copy;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const Parameters p = random_parameters(c, 100 + seed, 1.0);
      Rng rng(seed);
      const Example ex = random_example(c, 3 + seed % 4, 2, rng);
      const Hypothesis g = greedy_decode(p, c, ex, 8);
      const auto beam = beam_search(p, c, ex, BeamOptions{1, 8, 0.0});
      REQUIRE(beam.size() == 1);
      CHECK(beam[0].ids == g.ids);
      CHECK(beam[0].copies == g.copies);
      CHECK(beam[0].log_prob == doctest::Approx(g.log_prob).epsilon(1e-12));
    }
  }
}

TEST_CASE("wide beam equals exhaustive enumeration") {
  ModelConfig c = tiny_config();
  c.vocab_size = 5;
  c.copy_enabled = false;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Parameters p = random_parameters(c, 200 + seed, 1.5);
    Rng rng(seed);
    const Example ex = random_example(c, 4, 2, rng, false);
    const auto best = oracle::enumerate_best(p, c, ex, 3);
    const auto beam = beam_search(p, c, ex, BeamOptions{125, 3, 0.0});
    REQUIRE_FALSE(beam.empty());
    CHECK(beam[0].ids == best.ids);
    CHECK(std::abs(beam[0].log_prob - best.log_prob) < 1e-9);
  }
}

TEST_CASE("beam scores are exact sums and rescoring reproduces them") {
  const ModelConfig c = tiny_config();
  const Parameters p = random_parameters(c, 55, 1.0);
  Rng rng(9);
  const Example ex = random_example(c, 6, 2, rng);
  const auto nbest = beam_search(p, c, ex, BeamOptions{4, 6, 0.0});
  REQUIRE_FALSE(nbest.empty());
  CHECK(nbest.size() <= 4);
  for (std::size_t i = 0; i + 1 < nbest.size(); ++i)
    CHECK(nbest[i].log_prob >= nbest[i + 1].log_prob);
  for (const auto &h : nbest) {
    CHECK(h.final);
    CHECK(std::abs(rescore(p, c, ex, h) - h.log_prob) < 1e-9);
  }
  Hypothesis bogus = nbest[0];
  bogus.copies[0] = 99;
  CHECK_THROWS_AS(rescore(p, c, ex, bogus), ContractError);
}

TEST_CASE("length penalty reorders finished hypotheses") {
  const ModelConfig c = tiny_config();
  const Parameters p = random_parameters(c, 66, 1.0);
  Rng rng(2);
  const Example ex = random_example(c, 5, 2, rng);
  const auto ranked = beam_search(p, c, ex, BeamOptions{6, 6, 1.0});
  for (std::size_t i = 0; i + 1 < ranked.size(); ++i)
    CHECK(ranked[i].log_prob / static_cast<double>(ranked[i].ids.size()) >=
          ranked[i + 1].log_prob / static_cast<double>(ranked[i + 1].ids.size()));
}

TEST_CASE("copy-enabled decoding never surfaces unk") {
  const ModelConfig c = tiny_config();
  const Vocabulary vocab = numbered_vocab(c.vocab_size);
  Rng rng(77);
  for (std::uint64_t trial = 0; trial < 60; ++trial) {
    const Parameters p = random_parameters(c, 1000 + trial, 2.0);
    const Example ex = random_example(c, 2 + trial % 6, 2, rng);
    const auto tokens = generate(p, c, Lexicon{vocab, {}, {}}, ex,
                                 BeamOptions{trial % 2 ? 3u : 1u, 8, 0.0});
    for (const auto &t : tokens)
      CHECK(t != "<unk>");
  }
}

TEST_CASE("decoding is deterministic and independent of other inputs") {
  const ModelConfig c = tiny_config();
  const Parameters p = random_parameters(c, 12, 1.0);
  Rng rng(4);
  const Example a = random_example(c, 5, 2, rng);
  const Example b = random_example(c, 7, 2, rng);
  const auto first = beam_search(p, c, a, BeamOptions{5, 8, 0.0});
  beam_search(p, c, b, BeamOptions{5, 8, 0.0});
  const auto again = beam_search(p, c, a, BeamOptions{5, 8, 0.0});
  REQUIRE(first.size() == again.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].ids == again[i].ids);
    CHECK(first[i].log_prob == again[i].log_prob);
  }
}

TEST_CASE("decoder rejects empty input and zero beam") {
  const ModelConfig c = tiny_config();
  const Parameters p = random_parameters(c, 1);
  CHECK_THROWS_AS(greedy_decode(p, c, Example{}, 3), ContractError);
  Rng rng(1);
  const Example ex = random_example(c, 3, 2, rng);
  CHECK_THROWS_AS(beam_search(p, c, ex, BeamOptions{0, 3, 0.0}), ContractError);
}
