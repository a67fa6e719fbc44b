// SPDX-License-Identifier: Apache-2.0
#include "nqg/model.hpp"

#include <sstream>

#include "nqg/error.hpp"
#include "nqg/ops.hpp"

namespace nqg {

namespace {

std::string to_text(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::size_t to_size(const std::string &key, const std::string &v) {
  try {
    std::size_t pos = 0;
    const auto n = std::stoull(v, &pos);
    if (pos != v.size())
      throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception &) {
    throw ConfigError("config key '" + key + "': not an integer: " + v);
  }
}

bool to_bool(const std::string &key, const std::string &v) {
  if (v == "1" || v == "true")
    return true;
  if (v == "0" || v == "false")
    return false;
  throw ConfigError("config key '" + key + "': not a boolean: " + v);
}

GruParams make_gru(std::size_t input, std::size_t hidden, Rng &rng) {
  GruParams g;
  g.input_weight = xavier_init({3 * hidden, input}, rng);
  g.gate_weight = xavier_init({2 * hidden, hidden}, rng);
  g.candidate_weight = xavier_init({hidden, hidden}, rng);
  g.bias = Tensor({3 * hidden});
  return g;
}

template <typename P, typename F> void visit(P &p, F &&f) {
  if (p.shares_embeddings()) {
    f("word_emb", p.encoder_embedding());
  } else {
    f("enc.word_emb", p.encoder_embedding());
    f("dec.word_emb", p.decoder_embedding());
  }
  auto opt = [&](const char *name, auto &t) {
    if (!t.empty())
      f(name, t);
  };
  opt("enc.bio_emb", p.bio_embedding);
  opt("enc.pos_emb", p.pos_embedding);
  opt("enc.ner_emb", p.ner_embedding);
  opt("enc.case_emb", p.case_embedding);
  auto gru = [&](const std::string &prefix, auto &g) {
    f(prefix + ".input_weight", g.input_weight);
    f(prefix + ".gate_weight", g.gate_weight);
    f(prefix + ".candidate_weight", g.candidate_weight);
    f(prefix + ".bias", g.bias);
  };
  gru("enc.fwd", p.encoder_forward);
  gru("enc.bwd", p.encoder_backward);
  gru("dec.gru", p.decoder);
  f("dec.init_weight", p.init_weight);
  f("dec.init_bias", p.init_bias);
  f("att.state", p.attention_state);
  f("att.memory", p.attention_memory);
  f("att.vector", p.attention_vector);
  f("readout.word", p.readout_word);
  f("readout.context", p.readout_context);
  f("readout.state", p.readout_state);
  f("output.weight", p.output_weight);
  f("copy.state", p.copy_state);
  f("copy.context", p.copy_context);
  f("copy.bias", p.copy_bias);
}

BoundGru bind_gru(Graph &g, GruParams &p) {
  return {g.bind(p.input_weight), g.bind(p.gate_weight),
          g.bind(p.candidate_weight), g.bind(p.bias)};
}

BoundGru bind_gru_const(Graph &g, const GruParams &p) {
  return {g.bind(p.input_weight, {}), g.bind(p.gate_weight, {}),
          g.bind(p.candidate_weight, {}), g.bind(p.bias, {})};
}

Var lookup(const std::optional<Var> &table, std::size_t id,
           const char *name) {
  const auto rows = table->value().rows();
  if (id >= rows)
    throw LookupError(std::string(name) + " table: id " + std::to_string(id) +
                      " outside " + std::to_string(rows) + " rows");
  return ops::row(*table, id);
}

} // namespace

std::size_t ModelConfig::encoder_input_dim() const {
  std::size_t width = word_dim;
  if (features.answer)
    width += feature_dim;
  if (features.pos)
    width += feature_dim;
  if (features.ner)
    width += feature_dim;
  if (features.casing)
    width += feature_dim;
  return width;
}

void ModelConfig::validate() const {
  if (vocab_size == 0 || word_dim == 0 || feature_dim == 0 ||
      hidden_dim == 0 || max_decode_len == 0 || pos_tags == 0 ||
      ner_tags == 0)
    throw ConfigError("model dimensions must be positive");
  if (!(dropout_p >= 0 && dropout_p < 1))
    throw ConfigError("dropout_p must lie in [0,1), got " + to_text(dropout_p));
}

std::vector<std::pair<std::string, std::string>>
ModelConfig::to_key_values() const {
  return {
      {"vocab_size", std::to_string(vocab_size)},
      {"word_dim", std::to_string(word_dim)},
      {"feature_dim", std::to_string(feature_dim)},
      {"hidden_dim", std::to_string(hidden_dim)},
      {"dropout_p", to_text(dropout_p)},
      {"feature.answer", features.answer ? "1" : "0"},
      {"feature.pos", features.pos ? "1" : "0"},
      {"feature.ner", features.ner ? "1" : "0"},
      {"feature.case", features.casing ? "1" : "0"},
      {"copy_enabled", copy_enabled ? "1" : "0"},
      {"share_embeddings", share_embeddings ? "1" : "0"},
      {"pretrained_embeddings_path", pretrained_embeddings_path},
      {"max_decode_len", std::to_string(max_decode_len)},
      {"pos_tags", std::to_string(pos_tags)},
      {"ner_tags", std::to_string(ner_tags)},
  };
}

ModelConfig
ModelConfig::from_key_values(const std::map<std::string, std::string> &kv) {
  ModelConfig c;
  auto get = [&](const char *key) -> const std::string * {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("vocab_size"))
    c.vocab_size = to_size("vocab_size", *v);
  if (auto v = get("word_dim"))
    c.word_dim = to_size("word_dim", *v);
  if (auto v = get("feature_dim"))
    c.feature_dim = to_size("feature_dim", *v);
  if (auto v = get("hidden_dim"))
    c.hidden_dim = to_size("hidden_dim", *v);
  if (auto v = get("dropout_p")) {
    try {
      c.dropout_p = std::stod(*v);
    } catch (const std::exception &) {
      throw ConfigError("config key 'dropout_p': not a number: " + *v);
    }
  }
  if (auto v = get("feature.answer"))
    c.features.answer = to_bool("feature.answer", *v);
  if (auto v = get("feature.pos"))
    c.features.pos = to_bool("feature.pos", *v);
  if (auto v = get("feature.ner"))
    c.features.ner = to_bool("feature.ner", *v);
  if (auto v = get("feature.case"))
    c.features.casing = to_bool("feature.case", *v);
  if (auto v = get("copy_enabled"))
    c.copy_enabled = to_bool("copy_enabled", *v);
  if (auto v = get("share_embeddings"))
    c.share_embeddings = to_bool("share_embeddings", *v);
  if (auto v = get("pretrained_embeddings_path"))
    c.pretrained_embeddings_path = *v;
  if (auto v = get("max_decode_len"))
    c.max_decode_len = to_size("max_decode_len", *v);
  if (auto v = get("pos_tags"))
    c.pos_tags = to_size("pos_tags", *v);
  if (auto v = get("ner_tags"))
    c.ner_tags = to_size("ner_tags", *v);
  return c;
}

Parameters Parameters::initialize(const ModelConfig &config, Rng &rng) {
  config.validate();
  const std::size_t d = config.hidden_dim;
  const std::size_t w = config.word_dim;
  const std::size_t f = config.feature_dim;
  const std::size_t v = config.vocab_size;

  Parameters p;
  p.shared_ = config.share_embeddings;
  p.encoder_embedding_ = xavier_init({v, w}, rng);
  if (!p.shared_)
    p.decoder_embedding_ = xavier_init({v, w}, rng);
  if (config.features.answer)
    p.bio_embedding = xavier_init({ModelConfig::kBioTags, f}, rng);
  if (config.features.pos)
    p.pos_embedding = xavier_init({config.pos_tags, f}, rng);
  if (config.features.ner)
    p.ner_embedding = xavier_init({config.ner_tags, f}, rng);
  if (config.features.casing)
    p.case_embedding = xavier_init({ModelConfig::kCaseTags, f}, rng);
  p.encoder_forward = make_gru(config.encoder_input_dim(), d, rng);
  p.encoder_backward = make_gru(config.encoder_input_dim(), d, rng);
  p.decoder = make_gru(w + 2 * d, d, rng);
  p.init_weight = xavier_init({d, d}, rng);
  p.init_bias = Tensor({d});
  p.attention_state = xavier_init({d, d}, rng);
  p.attention_memory = xavier_init({d, 2 * d}, rng);
  p.attention_vector = xavier_init({d}, rng);
  p.readout_word = xavier_init({2 * d, w}, rng);
  p.readout_context = xavier_init({2 * d, 2 * d}, rng);
  p.readout_state = xavier_init({2 * d, d}, rng);
  p.output_weight = xavier_init({v, d}, rng);
  p.copy_state = xavier_init({1, d}, rng);
  p.copy_context = xavier_init({1, 2 * d}, rng);
  p.copy_bias = Tensor({1});
  return p;
}

void Parameters::for_each(
    const std::function<void(const std::string &, Tensor &)> &f) {
  visit(*this, f);
}

void Parameters::for_each(
    const std::function<void(const std::string &, const Tensor &)> &f) const {
  visit(*this, f);
}

Tensor *Parameters::find(const std::string &name) {
  Tensor *found = nullptr;
  for_each([&](const std::string &n, Tensor &t) {
    if (n == name)
      found = &t;
  });
  return found;
}

void Parameters::enable_grad() {
  for_each([](const std::string &, Tensor &t) { t.enable_grad(); });
}

void Parameters::zero_grad() {
  for_each([](const std::string &, Tensor &t) { t.zero_grad(); });
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  for_each([&](const std::string &, const Tensor &t) { n += t.size(); });
  return n;
}

BoundModel bind(Graph &g, Parameters &p, const ModelConfig &config) {
  BoundModel m;
  m.graph = &g;
  m.config = &config;
  m.encoder_embedding = g.bind(p.encoder_embedding());
  m.decoder_embedding = p.shares_embeddings() ? m.encoder_embedding
                                              : g.bind(p.decoder_embedding());
  if (config.features.answer)
    m.bio = g.bind(p.bio_embedding);
  if (config.features.pos)
    m.pos = g.bind(p.pos_embedding);
  if (config.features.ner)
    m.ner = g.bind(p.ner_embedding);
  if (config.features.casing)
    m.casing = g.bind(p.case_embedding);
  m.encoder_forward = bind_gru(g, p.encoder_forward);
  m.encoder_backward = bind_gru(g, p.encoder_backward);
  m.decoder = bind_gru(g, p.decoder);
  m.init_weight = g.bind(p.init_weight);
  m.init_bias = g.bind(p.init_bias);
  m.attention_state = g.bind(p.attention_state);
  m.attention_memory = g.bind(p.attention_memory);
  m.attention_vector = g.bind(p.attention_vector);
  m.readout_word = g.bind(p.readout_word);
  m.readout_context = g.bind(p.readout_context);
  m.readout_state = g.bind(p.readout_state);
  m.output_weight = g.bind(p.output_weight);
  m.copy_state = g.bind(p.copy_state);
  m.copy_context = g.bind(p.copy_context);
  m.copy_bias = g.bind(p.copy_bias);
  return m;
}

BoundModel bind_const(Graph &g, const Parameters &p,
                      const ModelConfig &config) {
  BoundModel m;
  m.graph = &g;
  m.config = &config;
  m.encoder_embedding = g.bind(p.encoder_embedding(), {});
  m.decoder_embedding = p.shares_embeddings()
                            ? m.encoder_embedding
                            : g.bind(p.decoder_embedding(), {});
  if (config.features.answer)
    m.bio = g.bind(p.bio_embedding, {});
  if (config.features.pos)
    m.pos = g.bind(p.pos_embedding, {});
  if (config.features.ner)
    m.ner = g.bind(p.ner_embedding, {});
  if (config.features.casing)
    m.casing = g.bind(p.case_embedding, {});
  m.encoder_forward = bind_gru_const(g, p.encoder_forward);
  m.encoder_backward = bind_gru_const(g, p.encoder_backward);
  m.decoder = bind_gru_const(g, p.decoder);
  m.init_weight = g.bind(p.init_weight, {});
  m.init_bias = g.bind(p.init_bias, {});
  m.attention_state = g.bind(p.attention_state, {});
  m.attention_memory = g.bind(p.attention_memory, {});
  m.attention_vector = g.bind(p.attention_vector, {});
  m.readout_word = g.bind(p.readout_word, {});
  m.readout_context = g.bind(p.readout_context, {});
  m.readout_state = g.bind(p.readout_state, {});
  m.output_weight = g.bind(p.output_weight, {});
  m.copy_state = g.bind(p.copy_state, {});
  m.copy_context = g.bind(p.copy_context, {});
  m.copy_bias = g.bind(p.copy_bias, {});
  return m;
}

Var build_input_vector(const BoundModel &model, const TokenFeatures &token) {
  const auto &features = model.config->features;
  const auto vocab = model.encoder_embedding.value().rows();
  if (token.word >= vocab)
    throw LookupError("word table: id " + std::to_string(token.word) +
                      " outside " + std::to_string(vocab) + " rows");
  std::vector<Var> parts{ops::row(model.encoder_embedding, token.word)};
  if (features.answer)
    parts.push_back(lookup(model.bio, token.bio, "answer"));
  if (features.pos)
    parts.push_back(lookup(model.pos, token.pos, "pos"));
  if (features.ner)
    parts.push_back(lookup(model.ner, token.ner, "ner"));
  if (features.casing)
    parts.push_back(lookup(model.casing, token.casing, "case"));
  return parts.size() == 1 ? parts.front() : ops::concat(parts);
}

Var gru_cell(const BoundGru &gru, Var input, Var state) {
  const std::size_t d = state.size();
  if (gru.gate_weight.value().rows() != 2 * d ||
      gru.input_weight.value().cols() != input.size())
    throw DimensionError(
        "gru_cell: input " + shape_string(input.shape()) + " / state " +
        shape_string(state.shape()) + " do not fit weights " +
        shape_string(gru.input_weight.value().shape()));
  const Var x_proj =
      ops::add(ops::matmul(gru.input_weight, input), gru.bias); // 3d
  const Var h_proj = ops::matmul(gru.gate_weight, state);        // 2d
  const Var gates =
      ops::sigmoid(ops::add(ops::slice(x_proj, 0, 2 * d), h_proj));
  const Var update = ops::slice(gates, 0, d);
  const Var reset = ops::slice(gates, d, d);
  const Var candidate = ops::tanh(
      ops::add(ops::slice(x_proj, 2 * d, d),
               ops::matmul(gru.candidate_weight, ops::mul(reset, state))));
  return ops::add(ops::mul(ops::one_minus(update), state),
                  ops::mul(update, candidate));
}

EncoderOutput encode(const BoundModel &model, const std::vector<Var> &inputs) {
  if (inputs.empty())
    throw ContractError("encode: empty input sequence");
  Graph &g = *model.graph;
  const std::size_t n = inputs.size();
  const std::size_t d = model.config->hidden_dim;

  EncoderOutput out;
  out.forward_states.resize(n);
  out.backward_states.resize(n);
  Var state = g.constant(Tensor({d}));
  for (std::size_t i = 0; i < n; ++i) {
    state = gru_cell(model.encoder_forward, inputs[i], state);
    out.forward_states[i] = state;
  }
  state = g.constant(Tensor({d}));
  for (std::size_t i = n; i-- > 0;) {
    state = gru_cell(model.encoder_backward, inputs[i], state);
    out.backward_states[i] = state;
  }
  out.states.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.states.push_back(
        ops::concat({out.forward_states[i], out.backward_states[i]}));
  out.backward_first_state = out.backward_states.front();
  return out;
}

EncoderOutput encode_source(const BoundModel &model,
                            const std::vector<TokenFeatures> &tokens,
                            const RunMode &mode) {
  std::vector<Var> inputs;
  inputs.reserve(tokens.size());
  for (const auto &t : tokens)
    inputs.push_back(ops::dropout(build_input_vector(model, t),
                                  model.config->dropout_p, mode.train,
                                  mode.rng));
  return encode(model, inputs);
}

Var init_decoder_state(const BoundModel &model, const EncoderOutput &enc) {
  return ops::tanh(ops::add(
      ops::matmul(model.init_weight, enc.backward_first_state),
      model.init_bias));
}

AttentionMemory attention_memory(const BoundModel &model,
                                 const EncoderOutput &enc) {
  AttentionMemory m;
  m.length = enc.states.size();
  m.states = ops::stack_rows(enc.states);
  m.states_t = ops::transpose(m.states);
  m.projected = ops::transpose(ops::matmul(model.attention_memory, m.states_t));
  return m;
}

Attention attend(const BoundModel &model, const AttentionMemory &memory,
                 Var prev_state) {
  Attention a;
  const Var query = ops::matmul(model.attention_state, prev_state);
  const Var hidden = ops::tanh(ops::add_rows(memory.projected, query));
  a.scores = ops::matmul(hidden, model.attention_vector);
  a.weights = ops::softmax(a.scores);
  a.context = ops::matmul(memory.states_t, a.weights);
  return a;
}

Var initial_context(const BoundModel &model) {
  return model.graph->constant(Tensor({2 * model.config->hidden_dim}));
}

DecoderStepOutput decoder_step(const BoundModel &model,
                               const AttentionMemory &memory,
                               std::size_t prev_word, Var prev_context,
                               Var prev_state, const RunMode &mode) {
  const ModelConfig &config = *model.config;
  const auto vocab = model.decoder_embedding.value().rows();
  if (prev_word >= vocab)
    throw LookupError("word table: id " + std::to_string(prev_word) +
                      " outside " + std::to_string(vocab) + " rows");

  DecoderStepOutput out;
  const Attention att = attend(model, memory, prev_state);
  out.attention_scores = att.scores;
  out.attention = att.weights;
  out.context = att.context;

  const Var word = ops::row(model.decoder_embedding, prev_word);
  out.state =
      gru_cell(model.decoder, ops::concat({word, prev_context}), prev_state);

  out.readout = ops::add(
      ops::add(ops::matmul(model.readout_word, word),
               ops::matmul(model.readout_context, out.context)),
      ops::matmul(model.readout_state, out.state));
  out.maxout = ops::maxout(out.readout);
  out.logits = ops::matmul(
      model.output_weight,
      ops::dropout(out.maxout, config.dropout_p, mode.train, mode.rng));
  out.gen_dist = ops::softmax(out.logits);

  if (config.copy_enabled) {
    out.copy_logit =
        ops::add(ops::add(ops::matmul(model.copy_state, out.state),
                          ops::matmul(model.copy_context, out.context)),
                 model.copy_bias);
    out.copy_prob = ops::sigmoid(*out.copy_logit);
  }
  return out;
}

} // namespace nqg
