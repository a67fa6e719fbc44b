// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nqg/graph.hpp"
#include "nqg/tensor.hpp"

namespace nqg {

/// Marks a lexical feature that is disabled for this model.
inline constexpr std::size_t kNoFeature =
    std::numeric_limits<std::size_t>::max();

struct FeatureToggles {
  bool answer = true;
  bool pos = true;
  bool ner = true;
  bool casing = true;

  friend bool operator==(const FeatureToggles &,
                         const FeatureToggles &) = default;
};

/// Architecture hyperparameters. Defaults are the full-scale setting.
struct ModelConfig {
  static constexpr std::size_t kBioTags = 3;
  static constexpr std::size_t kCaseTags = 5;

  std::size_t vocab_size = 20000;
  std::size_t word_dim = 300;
  std::size_t feature_dim = 32;
  std::size_t hidden_dim = 512;
  double dropout_p = 0.5;
  FeatureToggles features;
  bool copy_enabled = true;
  bool share_embeddings = false;
  std::string pretrained_embeddings_path;
  std::size_t max_decode_len = 40;
  /// Rows of the POS / NER embedding tables (open tag sets plus UNK).
  std::size_t pos_tags = 64;
  std::size_t ner_tags = 16;

  /// Width of one encoder input vector: word plus enabled feature blocks.
  std::size_t encoder_input_dim() const;
  /// Throws ConfigError on a non-positive dimension or dropout outside [0,1).
  void validate() const;

  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  /// Unknown keys are ignored; missing keys keep their defaults.
  static ModelConfig
  from_key_values(const std::map<std::string, std::string> &kv);

  friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

/// Stacked GRU weights: rows [0,d) update gate, [d,2d) reset gate,
/// [2d,3d) candidate.
struct GruParams {
  Tensor input_weight;     // 3d x in
  Tensor gate_weight;      // 2d x d   (update, reset)
  Tensor candidate_weight; // d x d
  Tensor bias;             // 3d
};

/**
 * Every learnable weight of the model.
 *
 * With share_embeddings the decoder resolves word vectors through the
 * encoder's matrix, so a write through either accessor is seen by both.
 */
class Parameters {
public:
  Parameters() = default;
  /// Xavier-initialised weights (biases start at zero). Disabled feature
  /// tables are left empty.
  static Parameters initialize(const ModelConfig &config, Rng &rng);

  bool shares_embeddings() const { return shared_; }
  Tensor &encoder_embedding() { return encoder_embedding_; }
  const Tensor &encoder_embedding() const { return encoder_embedding_; }
  Tensor &decoder_embedding() {
    return shared_ ? encoder_embedding_ : decoder_embedding_;
  }
  const Tensor &decoder_embedding() const {
    return shared_ ? encoder_embedding_ : decoder_embedding_;
  }

  Tensor bio_embedding;
  Tensor pos_embedding;
  Tensor ner_embedding;
  Tensor case_embedding;
  GruParams encoder_forward;
  GruParams encoder_backward;
  GruParams decoder;
  Tensor init_weight; // W_d
  Tensor init_bias;   // b
  Tensor attention_state;  // W_a, d x d
  Tensor attention_memory; // U_a, d x 2d
  Tensor attention_vector; // v_a, d
  Tensor readout_word;     // W_r, 2d x word_dim
  Tensor readout_context;  // U_r, 2d x 2d
  Tensor readout_state;    // V_r, 2d x d
  Tensor output_weight;    // W_o, vocab x d
  Tensor copy_state;       // W, 1 x d
  Tensor copy_context;     // U, 1 x 2d
  Tensor copy_bias;        // b, 1

  /// Visits every distinct non-empty tensor in a fixed order. A shared
  /// word matrix is visited once, as "word_emb".
  void for_each(const std::function<void(const std::string &, Tensor &)> &f);
  void for_each(const std::function<void(const std::string &, const Tensor &)>
                    &f) const;
  Tensor *find(const std::string &name);

  void enable_grad();
  void zero_grad();
  std::size_t count() const;

private:
  Tensor encoder_embedding_;
  Tensor decoder_embedding_;
  bool shared_ = false;
};

/// Per-position ids for one source token. Disabled features hold kNoFeature.
struct TokenFeatures {
  std::size_t word = 0;
  std::size_t bio = kNoFeature;
  std::size_t pos = kNoFeature;
  std::size_t ner = kNoFeature;
  std::size_t casing = kNoFeature;
};

struct RunMode {
  bool train = false;
  Rng *rng = nullptr;
};

struct BoundGru {
  Var input_weight, gate_weight, candidate_weight, bias;
};

/// Parameters bound as leaves of one graph.
struct BoundModel {
  Graph *graph = nullptr;
  const ModelConfig *config = nullptr;
  Var encoder_embedding, decoder_embedding;
  std::optional<Var> bio, pos, ner, casing;
  BoundGru encoder_forward, encoder_backward, decoder;
  Var init_weight, init_bias;
  Var attention_state, attention_memory, attention_vector;
  Var readout_word, readout_context, readout_state;
  Var output_weight;
  Var copy_state, copy_context, copy_bias;
};

/// Gradients flow into each parameter's grad slot (when enabled).
BoundModel bind(Graph &graph, Parameters &params, const ModelConfig &config);
/// Read-only binding for inference.
BoundModel bind_const(Graph &graph, const Parameters &params,
                      const ModelConfig &config);

struct EncoderOutput {
  /// h_i = [forward_i ; backward_i], each of length 2d.
  std::vector<Var> states;
  std::vector<Var> forward_states;
  std::vector<Var> backward_states;
  /// Backward scan's state at position 0, after reading the whole sentence.
  Var backward_first_state;
};

/// Encoder states arranged for attention: H (n x 2d), H^T, and U_a H^T
/// stored row-wise (n x d).
struct AttentionMemory {
  Var states;
  Var states_t;
  Var projected;
  std::size_t length = 0;
};

struct Attention {
  Var scores;  // e_t
  Var weights; // alpha_t
  Var context; // c_t
};

struct DecoderStepOutput {
  Var state;            // s_t
  Var context;          // c_t
  Var attention_scores; // e_t
  Var attention;        // alpha_t
  Var readout;          // r_t
  Var maxout;           // m_t
  Var logits;           // W_o m_t
  Var gen_dist;
  std::optional<Var> copy_logit;
  std::optional<Var> copy_prob;
};

/// [word; answer; pos; ner; case], enabled blocks only.
Var build_input_vector(const BoundModel &model, const TokenFeatures &token);

/// Standard GRU: z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br),
/// h~ = tanh(Wh x + Uh (r*h) + bh), h' = (1-z)*h + z*h~.
Var gru_cell(const BoundGru &gru, Var input, Var state);

EncoderOutput encode(const BoundModel &model, const std::vector<Var> &inputs);
/// Builds input vectors, applies input dropout, and runs encode().
EncoderOutput encode_source(const BoundModel &model,
                            const std::vector<TokenFeatures> &tokens,
                            const RunMode &mode);

/// s_0 = tanh(W_d <-h_1 + b).
Var init_decoder_state(const BoundModel &model, const EncoderOutput &enc);

AttentionMemory attention_memory(const BoundModel &model,
                                 const EncoderOutput &enc);

/// e_i = v_a^T tanh(W_a s + U_a h_i); alpha = softmax(e); c = sum alpha_i h_i.
Attention attend(const BoundModel &model, const AttentionMemory &memory,
                 Var prev_state);

/// Zero context of length 2d used before the first step.
Var initial_context(const BoundModel &model);

/**
 * One decoding step. Attention reads s_{t-1}; the GRU reads
 * [emb(w_{t-1}); c_{t-1}]; readout combines w_{t-1}, the new c_t and s_t.
 */
DecoderStepOutput decoder_step(const BoundModel &model,
                               const AttentionMemory &memory,
                               std::size_t prev_word, Var prev_context,
                               Var prev_state, const RunMode &mode);

} // namespace nqg
