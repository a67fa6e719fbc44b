// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <map>

#include "nqg/error.hpp"
#include "nqg/model.hpp"
#include "support.hpp"

using namespace nqg;
using namespace nqg::testing;

namespace {

std::map<std::string, Shape> shapes(const Parameters &p) {
  std::map<std::string, Shape> out;
  p.for_each([&](const std::string &n, const Tensor &t) { out[n] = t.shape(); });
  return out;
}

} // namespace

TEST_CASE("encoder input width is word plus enabled feature blocks") {
  ModelConfig c;
  CHECK(c.encoder_input_dim() == 428);
  c.features.answer = false;
  CHECK(c.encoder_input_dim() == 396);
  c.features = {false, false, false, false};
  CHECK(c.encoder_input_dim() == 300);
}

TEST_CASE("config validation and key value round trip") {
  ModelConfig c = tiny_config();
  c.dropout_p = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.dropout_p = 0.3;
  c.hidden_dim = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  ModelConfig d = tiny_config();
  d.features.ner = false;
  d.copy_enabled = false;
  d.share_embeddings = true;
  std::map<std::string, std::string> kv;
  for (const auto &[k, v] : d.to_key_values())
    kv[k] = v;
  CHECK(ModelConfig::from_key_values(kv) == d);
}

TEST_CASE("full-size parameter shapes") {
  ModelConfig c;
  c.vocab_size = 50;
  Rng rng(1);
  const auto s = shapes(Parameters::initialize(c, rng));
  CHECK(s.at("enc.word_emb") == Shape{50, 300});
  CHECK(s.at("dec.word_emb") == Shape{50, 300});
  CHECK(s.at("enc.bio_emb") == Shape{3, 32});
  CHECK(s.at("enc.fwd.input_weight") == Shape{1536, 428});
  CHECK(s.at("enc.fwd.gate_weight") == Shape{1024, 512});
  CHECK(s.at("dec.gru.input_weight") == Shape{1536, 300 + 1024});
  CHECK(s.at("dec.init_weight") == Shape{512, 512});
  CHECK(s.at("att.memory") == Shape{512, 1024});
  CHECK(s.at("readout.context") == Shape{1024, 1024});
  CHECK(s.at("output.weight") == Shape{50, 512});
  CHECK(s.at("copy.context") == Shape{1, 1024});
}

TEST_CASE("each ablation removes one feature block and nothing else") {
  const ModelConfig base = tiny_config();
  Rng rng(3);
  const auto full = shapes(Parameters::initialize(base, rng));
  const std::vector<std::pair<std::string, bool FeatureToggles::*>> ablations = {
      {"enc.bio_emb", &FeatureToggles::answer},
      {"enc.pos_emb", &FeatureToggles::pos},
      {"enc.ner_emb", &FeatureToggles::ner},
      {"enc.case_emb", &FeatureToggles::casing}};
  for (const auto &[table, flag] : ablations) {
    CAPTURE(table);
    ModelConfig c = base;
    c.features.*flag = false;
    CHECK(base.encoder_input_dim() - c.encoder_input_dim() == base.feature_dim);
    const auto ab = shapes(Parameters::initialize(c, rng));
    CHECK(ab.count(table) == 0);
    CHECK(ab.size() + 1 == full.size());
    for (const auto &[name, shape] : ab) {
      CAPTURE(name);
      if (name == "enc.fwd.input_weight" || name == "enc.bwd.input_weight") {
        CHECK(shape[0] == full.at(name)[0]);
        CHECK(full.at(name)[1] - shape[1] == base.feature_dim);
      } else {
        CHECK(shape == full.at(name));
      }
    }
  }
}

TEST_CASE("shared embeddings use one matrix") {
  ModelConfig c = tiny_config();
  c.share_embeddings = true;
  Rng rng(2);
  Parameters p = Parameters::initialize(c, rng);
  const auto s = shapes(p);
  CHECK(s.count("word_emb") == 1);
  CHECK(s.count("enc.word_emb") == 0);
  CHECK(s.count("dec.word_emb") == 0);
  p.encoder_embedding().at(5, 1) = 42.0;
  CHECK(p.decoder_embedding().at(5, 1) == 42.0);
}

TEST_CASE("biases start at zero") {
  Rng rng(9);
  const Parameters p = Parameters::initialize(tiny_config(), rng);
  for (double v : p.encoder_forward.bias.values())
    CHECK(v == 0.0);
  for (double v : p.init_bias.values())
    CHECK(v == 0.0);
  CHECK(p.copy_bias[0] == 0.0);
}

TEST_CASE("input lookup errors name the table") {
  const ModelConfig c = tiny_config();
  Rng rng(4);
  const Parameters p = Parameters::initialize(c, rng);
  Graph g;
  const BoundModel m = bind_const(g, p, c);
  TokenFeatures t{5, 0, 0, 0, 0};
  CHECK(build_input_vector(m, t).size() == c.encoder_input_dim());
  t.pos = 99;
  try {
    build_input_vector(m, t);
    FAIL("expected LookupError");
  } catch (const LookupError &e) {
    CHECK(std::string(e.what()).find("pos") != std::string::npos);
  }
  t.pos = 0;
  t.word = 20;
  CHECK_THROWS_AS(build_input_vector(m, t), LookupError);
  CHECK_THROWS_AS(encode(m, {}), ContractError);
}

TEST_CASE("gru cell rejects mismatched widths") {
  const ModelConfig c = tiny_config();
  Rng rng(4);
  const Parameters p = Parameters::initialize(c, rng);
  Graph g;
  const BoundModel m = bind_const(g, p, c);
  const Var x = g.constant(Tensor({3}));
  const Var h = g.constant(Tensor({c.hidden_dim}));
  CHECK_THROWS_AS(gru_cell(m.encoder_forward, x, h), DimensionError);
}

TEST_CASE("decoder step matches a plain-loop recomputation") {
  for (bool copy : {true, false}) {
    ModelConfig c = tiny_config();
    c.copy_enabled = copy;
    const Parameters p = random_parameters(c, 17);
    Rng rng(5);
    const Example ex = random_example(c, 5, 4, rng);
    CHECK(decoder_oracle_gap(p, c, ex, 4) < 1e-10);
  }
}

TEST_CASE("decoder step outputs are proper distributions") {
  const ModelConfig c = tiny_config();
  const Parameters p = random_parameters(c, 8);
  Rng rng(6);
  const Example ex = random_example(c, 6, 3, rng);
  Graph g;
  const BoundModel m = bind_const(g, p, c);
  const EncoderOutput enc = encode_source(m, ex.source, RunMode{});
  const AttentionMemory mem = attention_memory(m, enc);
  const DecoderStepOutput out = decoder_step(m, mem, Vocabulary::kSos,
                                             initial_context(m),
                                             init_decoder_state(m, enc), RunMode{});
  double sa = 0, sg = 0;
  for (double v : out.attention.value().values())
    sa += v;
  for (double v : out.gen_dist.value().values())
    sg += v;
  CHECK(sa == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sg == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(out.copy_prob.has_value());
  CHECK((*out.copy_prob)[0] > 0.0);
  CHECK((*out.copy_prob)[0] < 1.0);
  CHECK(out.maxout.size() == c.hidden_dim);
  CHECK(out.readout.size() == 2 * c.hidden_dim);
}

TEST_CASE("step loss gradient matches finite differences on a tiny model") {
  const ModelConfig c = tiny_config();
  Parameters p = random_parameters(c, 23, 0.3);
  Rng rng(7);
  std::vector<Example> batch{random_example(c, 5, 4, rng),
                             random_example(c, 4, 3, rng)};
  const GradCheck r = gradient_check(p, c, batch);
  CAPTURE(r.worst);
  CHECK(r.checked == p.count());
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("gradient check without copy and with shared embeddings") {
  ModelConfig c = tiny_config();
  c.copy_enabled = false;
  c.share_embeddings = true;
  c.features.ner = false;
  Parameters p = random_parameters(c, 29, 0.3);
  Rng rng(8);
  std::vector<Example> batch{random_example(c, 4, 3, rng)};
  const GradCheck r = gradient_check(p, c, batch);
  CAPTURE(r.worst);
  CHECK(r.max_relative_error < 1e-4);
}
