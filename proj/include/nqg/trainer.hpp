// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nqg/checkpoint.hpp"
#include "nqg/encoding.hpp"
#include "nqg/eval.hpp"
#include "nqg/model.hpp"

namespace nqg {

// ------------------------------------------------------------- losses

/// Negative log-likelihood of one gold decision from plain distributions.
/// `copy_prob` is absent when the copy switch is off; `copy_position` marks
/// a copy target and then `attention` must be given.
double token_nll(std::span<const double> gen_dist, std::size_t gold,
                 std::optional<double> copy_prob = std::nullopt,
                 std::span<const double> attention = {},
                 std::optional<std::size_t> copy_position = std::nullopt);

/// Differentiable version of token_nll on a decoder step.
Var token_loss(const DecoderStepOutput &step, std::size_t gold,
               std::optional<std::size_t> copy_position);

/// Summed token loss of one example under teacher forcing.
Var sequence_loss(const BoundModel &model, const Example &example,
                  const RunMode &mode);

/// Mean per-token loss over a batch, no gradient. Throws ContractError on
/// an empty batch or an example without a target.
double step_loss(const Parameters &params, const ModelConfig &config,
                 std::span<const Example> batch);

/// Accumulates d(mean per-token loss)/d(params) into the parameters'
/// gradient slots and returns the loss. Gradient slots must be enabled.
double accumulate_gradients(Parameters &params, const ModelConfig &config,
                            std::span<const Example> batch,
                            const RunMode &mode);

// --------------------------------------------------------- optimizers

struct AdamSettings {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam with per-parameter moments keyed by name.
class AdamOptimizer {
public:
  explicit AdamOptimizer(AdamSettings settings = {}) : settings_(settings) {}

  /// Throws ContractError if a parameter has no gradient slot.
  void step(Parameters &params);

  const AdamSettings &settings() const { return settings_; }
  void set_lr(double lr) { settings_.lr = lr; }
  std::size_t steps() const { return t_; }

  /// Moments as "adam.m.<name>" / "adam.v.<name>" tensors.
  void save(std::map<std::string, Tensor> &out) const;
  void load(const std::map<std::string, Tensor> &in, std::size_t steps);

private:
  AdamSettings settings_;
  std::size_t t_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

/// p <- p - lr * g. Throws ContractError if a parameter has no gradient.
void sgd_step(Parameters &params, double lr);

void clip_gradients(std::span<double> grads, double lo = -5.0, double hi = 5.0);
void clip_gradients(Parameters &params, double lo = -5.0, double hi = 5.0);

// ------------------------------------------------------------ schedule

struct TrainConfig {
  std::size_t batch_size = 64;
  AdamSettings adam;
  double sgd_initial_lr = 0.5;
  double clip_lo = -5.0;
  double clip_hi = 5.0;
  std::size_t eval_every_batches = 1000;
  std::size_t adam_patience = 6;
  std::size_t sgd_patience = 12;
  std::uint64_t seed = 0;
  bool schedule_enabled = true;

  std::size_t max_epochs = 20;
  /// 0 means no limit.
  std::size_t max_batches = 0;
  /// Stop after an epoch whose mean per-token loss falls below this (0: off).
  double target_loss = 0;
  bool sgd_from_best = false;
  /// Beam width for dev decoding; 1 is greedy.
  std::size_t dev_beam = 1;
  /// Number of dev examples decoded at each evaluation (0: all).
  std::size_t dev_limit = 0;
  std::size_t max_decode_len = 40;

  /// Throws ConfigError.
  void validate() const;
  std::map<std::string, std::string> to_key_values() const;
};

enum class Phase { Adam, Sgd };
std::string_view phase_name(Phase phase);

struct ScheduleState {
  Phase phase = Phase::Adam;
  double best_dev_metric = -std::numeric_limits<double>::infinity();
  std::size_t consecutive_drops = 0;
  double current_sgd_lr = 0.5;
  std::size_t batches_seen = 0;
};

struct ScheduleEvent {
  bool improved = false;
  bool switched_to_sgd = false;
  bool lr_halved = false;
};

/// A drop is a metric strictly below the best seen in the current phase.
/// ADAM switches to SGD after adam_patience consecutive drops; SGD halves
/// its rate after sgd_patience. The best resets when the phase changes.
ScheduleEvent advance_schedule(ScheduleState &state, double metric,
                               const TrainConfig &config);

// ------------------------------------------------------------- trainer

struct MetricRow {
  std::size_t batches = 0;
  Phase phase = Phase::Adam;
  double lr = 0;
  double dev_bleu = 0;
  double train_loss = 0;
};

/// "batches,phase,lr,dev_bleu,train_loss"
std::string metric_header();
std::string format_metric(const MetricRow &row);

struct TrainData {
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Sentence> dev_references;
};

struct TrainCallbacks {
  std::function<void(const MetricRow &)> on_metric;
  /// Called after an evaluation that set a new best dev metric.
  std::function<void(const class Trainer &)> on_best;
  std::function<void(std::size_t epoch, double mean_loss)> on_epoch;
};

/**
 * Owns parameters, optimizer and schedule. All randomness (shuffling and
 * dropout) is derived from the seed, and the full state round-trips through
 * a checkpoint, so a resumed run continues bit-for-bit.
 */
class Trainer {
public:
  Trainer(ModelConfig model, TrainConfig config, Lexicon lexicon,
          Parameters params);
  /// Restores parameters and training state saved by checkpoint().
  static Trainer resume(const Checkpoint &ckpt, TrainConfig config);

  /// One optimizer step on a batch; returns its mean per-token loss.
  double train_batch(std::span<const Example> batch);

  /// Decodes the dev set and returns corpus BLEU-4.
  double dev_bleu(const TrainData &data) const;

  /// Runs until max_epochs, max_batches or target_loss.
  void run(const TrainData &data, const TrainCallbacks &callbacks = {});

  Checkpoint checkpoint() const;

  const Parameters &params() const { return params_; }
  Parameters &params() { return params_; }
  const ModelConfig &model_config() const { return model_; }
  const TrainConfig &train_config() const { return config_; }
  const Lexicon &lexicon() const { return lexicon_; }
  const ScheduleState &schedule() const { return schedule_; }
  double current_lr() const;
  std::size_t epoch() const { return epoch_; }
  double last_epoch_loss() const { return last_epoch_loss_; }

private:
  ModelConfig model_;
  TrainConfig config_;
  Lexicon lexicon_;
  Parameters params_;
  AdamOptimizer adam_;
  ScheduleState schedule_;
  Rng rng_;
  std::size_t epoch_ = 0;
  std::size_t batch_in_epoch_ = 0;
  double loss_since_eval_ = 0;
  std::size_t batches_since_eval_ = 0;
  double epoch_loss_ = 0;
  std::size_t epoch_batches_ = 0;
  double last_epoch_loss_ = std::numeric_limits<double>::infinity();
  std::optional<Parameters> best_params_;
};

/// Seeded permutation used for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                     std::size_t epoch);

} // namespace nqg
