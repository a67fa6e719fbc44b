// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nqg/checkpoint.hpp"
#include "nqg/error.hpp"
#include "nqg/inference.hpp"
#include "nqg/trainer.hpp"
#include "support.hpp"

using namespace nqg;
using namespace nqg::testing;

namespace {

struct Toy {
  ModelConfig model;
  Lexicon lexicon;
  TrainData data;
};

Toy toy_setup(std::size_t n, std::uint64_t seed) {
  Toy t;
  const auto triples = toy_triples(n, seed);
  t.lexicon = build_lexicon(triples);
  t.model = tiny_config();
  t.model.vocab_size = t.lexicon.words.size();
  t.model.pos_tags = t.lexicon.pos.size();
  t.model.ner_tags = t.lexicon.ner.size();
  t.data.train = encode_examples(triples, t.lexicon, t.model);
  t.data.dev = t.data.train;
  for (const auto &tr : triples)
    t.data.dev_references.push_back(tr.question);
  return t;
}

bool same_params(const Parameters &a, const Parameters &b) {
  bool same = true;
  std::vector<Tensor> left;
  a.for_each([&](const std::string &, const Tensor &t) { left.push_back(t); });
  std::size_t i = 0;
  b.for_each([&](const std::string &, const Tensor &t) {
    same = same && i < left.size() && left[i] == t;
    ++i;
  });
  return same && i == left.size();
}

} // namespace

TEST_CASE("token loss examples") {
  const std::vector<double> uniform(4, 0.25);
  CHECK(token_nll(uniform, 2) == doctest::Approx(std::log(4.0)));
  const std::vector<double> certain{0, 0, 1, 0};
  CHECK(token_nll(certain, 2) == 0.0);
  // Copy mixture: generation keeps 1-p, copying pays p and attention.
  const std::vector<double> gen{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> alpha{0.25, 0.75};
  CHECK(token_nll(gen, 3, 0.2) == doctest::Approx(-std::log(0.4) - std::log(0.8)));
  CHECK(token_nll(gen, 1, 0.2, alpha, 1) == doctest::Approx(-std::log(0.75) - std::log(0.2)));
  // Two-token mean: (ln 4 + (-ln 0.4 - ln 0.8)) / 2.
  const double two = (token_nll(uniform, 0) + token_nll(gen, 3, 0.2)) / 2;
  CHECK(two == doctest::Approx((std::log(4.0) - std::log(0.4) - std::log(0.8)) / 2));
  CHECK_THROWS_AS(token_nll(gen, 9), LookupError);
}

TEST_CASE("step loss equals the plain-loop loss and is non-negative") {
  for (bool copy : {true, false}) {
    ModelConfig c = tiny_config();
    c.copy_enabled = copy;
    const Parameters p = random_parameters(c, 40, 0.7);
    Rng rng(3);
    std::vector<Example> batch;
    for (int i = 0; i < 4; ++i)
      batch.push_back(random_example(c, 3 + i, 2 + i, rng));
    const double got = step_loss(p, c, batch);
    CHECK(got == doctest::Approx(oracle::batch_loss(p, c, batch)).epsilon(1e-12));
    CHECK(got > 0.0);
  }
  CHECK_THROWS_AS(step_loss(random_parameters(tiny_config(), 1), tiny_config(), {}),
                  ContractError);
}

TEST_CASE("adam first step, zero gradients and missing gradients") {
  ModelConfig c = tiny_config();
  Parameters p = random_parameters(c, 5);
  p.enable_grad();
  p.zero_grad();
  const Parameters before = p;
  AdamOptimizer adam;
  adam.step(p);
  CHECK(same_params(p, before));

  p.zero_grad();
  p.copy_bias.grad()[0] = 1.0;
  const double b0 = p.copy_bias[0];
  AdamOptimizer fresh;
  fresh.step(p);
  CHECK(p.copy_bias[0] - b0 == doctest::Approx(-0.001 / (1 + 1e-8)).epsilon(1e-12));

  p.zero_grad();
  std::map<std::string, Tensor> moments;
  fresh.save(moments);
  const double m_before = moments.at("adam.m.copy.bias")[0];
  fresh.step(p);
  moments.clear();
  fresh.save(moments);
  CHECK(moments.at("adam.m.copy.bias")[0] == doctest::Approx(0.9 * m_before));

  Parameters raw = random_parameters(c, 6);
  CHECK_THROWS_AS(adam.step(raw), ContractError);
  CHECK_THROWS_AS(sgd_step(raw, 0.1), ContractError);
}

TEST_CASE("sgd and clipping arithmetic") {
  ModelConfig c = tiny_config();
  Parameters p = random_parameters(c, 5);
  p.enable_grad();
  p.zero_grad();
  p.copy_bias[0] = 1.0;
  p.copy_bias.grad()[0] = 0.5;
  sgd_step(p, 0.5);
  CHECK(p.copy_bias[0] == 0.75);
  sgd_step(p, 0.0);
  CHECK(p.copy_bias[0] == 0.75);

  std::vector<double> g{7, -6, 3, -5, 5};
  clip_gradients(g);
  CHECK(g == std::vector<double>{5, -5, 3, -5, 5});
}

TEST_CASE("two identical training runs are bitwise equal") {
  const Toy toy = toy_setup(6, 1);
  TrainConfig tc;
  tc.batch_size = 3;
  tc.schedule_enabled = false;
  tc.max_epochs = 2;
  tc.eval_every_batches = 2;
  ModelConfig m = toy.model;
  m.dropout_p = 0.3;
  Rng r1(7), r2(7);
  Trainer a(m, tc, toy.lexicon, Parameters::initialize(m, r1));
  Trainer b(m, tc, toy.lexicon, Parameters::initialize(m, r2));
  std::vector<std::string> log_a, log_b;
  a.run(toy.data, {[&](const MetricRow &r) { log_a.push_back(format_metric(r)); }, {}, {}});
  b.run(toy.data, {[&](const MetricRow &r) { log_b.push_back(format_metric(r)); }, {}, {}});
  CHECK(log_a == log_b);
  CHECK(log_a.size() == 2);
  CHECK(same_params(a.params(), b.params()));
}

TEST_CASE("schedule examples") {
  TrainConfig tc;
  ScheduleState s;
  const std::vector<double> falling{10, 9, 8, 7, 6, 5, 4};
  for (std::size_t i = 0; i < falling.size(); ++i) {
    const ScheduleEvent e = advance_schedule(s, falling[i], tc);
    CHECK(e.switched_to_sgd == (i == 6));
  }
  CHECK(s.phase == Phase::Sgd);
  CHECK(s.current_sgd_lr == 0.5);
  CHECK(s.consecutive_drops == 0);

  advance_schedule(s, 3.0, tc);
  for (int i = 0; i < 11; ++i)
    CHECK_FALSE(advance_schedule(s, 1.0, tc).lr_halved);
  CHECK(advance_schedule(s, 1.0, tc).lr_halved);
  CHECK(s.current_sgd_lr == 0.25);

  ScheduleState r;
  advance_schedule(r, 5, tc);
  advance_schedule(r, 4, tc);
  advance_schedule(r, 3, tc);
  CHECK(r.consecutive_drops == 2);
  CHECK(advance_schedule(r, 5, tc).improved);
  CHECK(r.consecutive_drops == 0);
}

TEST_CASE("schedule matches an independent counter simulation") {
  TrainConfig tc;
  Rng rng(2024);
  for (int seq = 0; seq < 40; ++seq) {
    std::vector<double> metrics;
    double level = 5.0;
    const std::size_t len = 20 + rng() % 80;
    for (std::size_t i = 0; i < len; ++i) {
      const int move = static_cast<int>(rng() % 10);
      level += move < 3 ? 0.5 : (move < 4 ? 0.0 : -0.3);
      metrics.push_back(std::round(level * 2) / 2);
    }
    const auto want = oracle::simulate_schedule(metrics, 6, 12, tc.adam.lr, 0.5);
    ScheduleState s;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      advance_schedule(s, metrics[i], tc);
      CAPTURE(seq);
      CAPTURE(i);
      CHECK(std::string(phase_name(s.phase)) == want.phases[i]);
      const double lr = s.phase == Phase::Adam ? tc.adam.lr : s.current_sgd_lr;
      CHECK(lr == want.lrs[i]);
    }
  }
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  CHECK_NOTHROW(tc.validate());
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = {};
  tc.clip_lo = 5;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = {};
  tc.adam_patience = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
}

TEST_CASE("tiny model overfits ten triples") {
  const Toy toy = toy_setup(10, 3);
  TrainConfig tc;
  tc.batch_size = 10;
  tc.schedule_enabled = false;
  tc.adam.lr = 0.01;
  tc.max_epochs = 600;
  tc.target_loss = 0.02;
  tc.eval_every_batches = 1000000;
  ModelConfig m = toy.model;
  m.hidden_dim = 16;
  m.word_dim = 16;
  Rng rng(1);
  Trainer t(m, tc, toy.lexicon, Parameters::initialize(m, rng));
  t.run(toy.data);
  CHECK(t.last_epoch_loss() < 0.05);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < toy.data.train.size(); ++i) {
    const auto out = generate(t.params(), m, toy.lexicon, toy.data.train[i],
                              BeamOptions{1, 12, 0.0});
    exact += out == toy.data.dev_references[i];
  }
  CHECK(exact >= 9);
}

TEST_CASE("checkpoint round trip and resume are bitwise") {
  const Toy toy = toy_setup(8, 5);
  TrainConfig tc;
  tc.batch_size = 3;
  tc.eval_every_batches = 2;
  tc.max_batches = 4;
  tc.max_epochs = 5;
  ModelConfig m = toy.model;
  m.dropout_p = 0.2;
  Rng rng(9);
  Trainer first(m, tc, toy.lexicon, Parameters::initialize(m, rng));
  first.run(toy.data);
  const std::string path = temp_path("resume.ckpt");
  save_checkpoint(path, first.checkpoint());

  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.config == m);
  CHECK(loaded.lexicon.words.tokens() == toy.lexicon.words.tokens());
  CHECK(same_params(loaded.params, first.params()));

  TrainConfig more = tc;
  more.max_batches = 7;
  Trainer resumed = Trainer::resume(loaded, more);
  Trainer cont = Trainer::resume(first.checkpoint(), more);
  resumed.run(toy.data);
  cont.run(toy.data);
  CHECK(same_params(resumed.params(), cont.params()));

  Trainer straight(m, more, toy.lexicon, [&] {
    Rng again(9);
    return Parameters::initialize(m, again);
  }());
  straight.run(toy.data);
  CHECK(same_params(straight.params(), resumed.params()));
  CHECK(straight.schedule().batches_seen == 7);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint load rejects damaged files") {
  const Toy toy = toy_setup(4, 1);
  Rng rng(1);
  Checkpoint ck;
  ck.config = toy.model;
  ck.lexicon = toy.lexicon;
  ck.params = Parameters::initialize(toy.model, rng);
  const std::string path = temp_path("bad.ckpt");
  save_checkpoint(path, ck);
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    bytes.resize(bytes.size() / 2);
    std::ofstream(path, std::ios::binary) << bytes;
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  std::ofstream(path) << "hello\n";
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ckpt")), IoError);
  std::filesystem::remove(path);
}
