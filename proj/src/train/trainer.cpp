// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>

#include "nqg/error.hpp"
#include "nqg/inference.hpp"
#include "nqg/trainer.hpp"

namespace nqg {

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string header_value(const Checkpoint &ckpt, const std::string &key) {
  auto it = ckpt.header.find(key);
  if (it == ckpt.header.end())
    throw FormatError("checkpoint has no training state '" + key + "'");
  return it->second;
}

double parse_double(const std::string &key, const std::string &s) {
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw FormatError("bad value for '" + key + "': " + s);
  return v;
}

std::size_t parse_size(const std::string &key, const std::string &s) {
  char *end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw FormatError("bad value for '" + key + "': " + s);
  return static_cast<std::size_t>(v);
}

} // namespace

std::string metric_header() { return "batches,phase,lr,dev_bleu,train_loss"; }

std::string format_metric(const MetricRow &row) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu,%s,%.6g,%.4f,%.6f", row.batches,
                std::string(phase_name(row.phase)).c_str(), row.lr,
                row.dev_bleu, row.train_loss);
  return buf;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                     std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  Rng rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Trainer::Trainer(ModelConfig model, TrainConfig config, Lexicon lexicon,
                 Parameters params)
    : model_(std::move(model)), config_(config), lexicon_(std::move(lexicon)),
      params_(std::move(params)), adam_(config.adam), rng_(config.seed) {
  model_.validate();
  config_.validate();
  schedule_.current_sgd_lr = config_.sgd_initial_lr;
  params_.enable_grad();
}

double Trainer::current_lr() const {
  if (!config_.schedule_enabled || schedule_.phase == Phase::Adam)
    return adam_.settings().lr;
  return schedule_.current_sgd_lr;
}

double Trainer::train_batch(std::span<const Example> batch) {
  params_.zero_grad();
  const double loss = accumulate_gradients(params_, model_, batch,
                                           RunMode{true, &rng_});
  clip_gradients(params_, config_.clip_lo, config_.clip_hi);
  if (!config_.schedule_enabled || schedule_.phase == Phase::Adam)
    adam_.step(params_);
  else
    sgd_step(params_, schedule_.current_sgd_lr);
  ++schedule_.batches_seen;
  return loss;
}

double Trainer::dev_bleu(const TrainData &data) const {
  if (data.dev.size() != data.dev_references.size())
    throw AlignmentError("dev examples and references differ in count");
  std::size_t n = data.dev.size();
  if (config_.dev_limit > 0)
    n = std::min(n, config_.dev_limit);
  if (n == 0)
    throw ContractError("no dev examples to evaluate");
  std::vector<Sentence> hyps;
  hyps.reserve(n);
  const BeamOptions options{config_.dev_beam, config_.max_decode_len, 0.0};
  for (std::size_t i = 0; i < n; ++i)
    hyps.push_back(generate(params_, model_, lexicon_, data.dev[i], options));
  return bleu4(std::span<const Sentence>(hyps),
               std::span<const Sentence>(data.dev_references.data(), n));
}

void Trainer::run(const TrainData &data, const TrainCallbacks &callbacks) {
  if (data.train.empty())
    throw ContractError("no training examples");
  const std::size_t n = data.train.size();
  const std::size_t per_epoch = (n + config_.batch_size - 1) / config_.batch_size;
  const bool can_eval = !data.dev.empty();

  while (epoch_ < config_.max_epochs) {
    const std::vector<std::size_t> order = epoch_order(n, config_.seed, epoch_);
    while (batch_in_epoch_ < per_epoch) {
      const std::size_t lo = batch_in_epoch_ * config_.batch_size;
      const std::size_t hi = std::min(n, lo + config_.batch_size);
      std::vector<Example> batch;
      batch.reserve(hi - lo);
      for (std::size_t k = lo; k < hi; ++k)
        batch.push_back(data.train[order[k]]);
      const double loss = train_batch(batch);
      ++batch_in_epoch_;
      loss_since_eval_ += loss;
      ++batches_since_eval_;
      epoch_loss_ += loss;
      ++epoch_batches_;

      if (can_eval && schedule_.batches_seen % config_.eval_every_batches == 0) {
        MetricRow row;
        row.batches = schedule_.batches_seen;
        row.phase = config_.schedule_enabled ? schedule_.phase : Phase::Adam;
        row.lr = current_lr();
        row.dev_bleu = dev_bleu(data);
        row.train_loss = loss_since_eval_ / static_cast<double>(batches_since_eval_);
        loss_since_eval_ = 0;
        batches_since_eval_ = 0;

        ScheduleEvent event;
        if (config_.schedule_enabled) {
          event = advance_schedule(schedule_, row.dev_bleu, config_);
        } else if (row.dev_bleu >= schedule_.best_dev_metric) {
          schedule_.best_dev_metric = row.dev_bleu;
          event.improved = true;
        }
        if (callbacks.on_metric)
          callbacks.on_metric(row);
        if (event.improved) {
          if (config_.sgd_from_best && schedule_.phase == Phase::Adam)
            best_params_ = params_;
          if (callbacks.on_best)
            callbacks.on_best(*this);
        }
        if (event.switched_to_sgd && config_.sgd_from_best && best_params_) {
          params_ = *best_params_;
          params_.enable_grad();
          best_params_.reset();
        }
      }
      if (config_.max_batches > 0 && schedule_.batches_seen >= config_.max_batches)
        return;
    }
    last_epoch_loss_ = epoch_loss_ / static_cast<double>(epoch_batches_);
    epoch_loss_ = 0;
    epoch_batches_ = 0;
    batch_in_epoch_ = 0;
    ++epoch_;
    if (callbacks.on_epoch)
      callbacks.on_epoch(epoch_, last_epoch_loss_);
    if (config_.target_loss > 0 && last_epoch_loss_ < config_.target_loss)
      return;
  }
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ckpt;
  ckpt.config = model_;
  ckpt.lexicon = lexicon_;
  ckpt.params = params_;
  auto &h = ckpt.header;
  h["train.seed"] = std::to_string(config_.seed);
  h["train.phase"] = std::string(phase_name(schedule_.phase));
  h["train.best"] = hex(schedule_.best_dev_metric);
  h["train.drops"] = std::to_string(schedule_.consecutive_drops);
  h["train.sgd_lr"] = hex(schedule_.current_sgd_lr);
  h["train.batches"] = std::to_string(schedule_.batches_seen);
  h["train.epoch"] = std::to_string(epoch_);
  h["train.batch_in_epoch"] = std::to_string(batch_in_epoch_);
  h["train.loss_since_eval"] = hex(loss_since_eval_);
  h["train.batches_since_eval"] = std::to_string(batches_since_eval_);
  h["train.epoch_loss"] = hex(epoch_loss_);
  h["train.epoch_batches"] = std::to_string(epoch_batches_);
  h["train.last_epoch_loss"] = hex(last_epoch_loss_);
  h["train.adam_steps"] = std::to_string(adam_.steps());
  std::ostringstream rng;
  rng << rng_;
  h["train.rng"] = rng.str();
  adam_.save(ckpt.tensors);
  if (best_params_)
    best_params_->for_each([&](const std::string &name, const Tensor &t) {
      ckpt.tensors["best." + name] = t;
    });
  return ckpt;
}

Trainer Trainer::resume(const Checkpoint &ckpt, TrainConfig config) {
  config.seed = parse_size("train.seed", header_value(ckpt, "train.seed"));
  Trainer t(ckpt.config, config, ckpt.lexicon, ckpt.params);
  const auto get = [&](const std::string &k) { return header_value(ckpt, k); };
  const std::string phase = get("train.phase");
  if (phase != "ADAM" && phase != "SGD")
    throw FormatError("bad training phase '" + phase + "'");
  t.schedule_.phase = phase == "ADAM" ? Phase::Adam : Phase::Sgd;
  t.schedule_.best_dev_metric = parse_double("train.best", get("train.best"));
  t.schedule_.consecutive_drops = parse_size("train.drops", get("train.drops"));
  t.schedule_.current_sgd_lr = parse_double("train.sgd_lr", get("train.sgd_lr"));
  t.schedule_.batches_seen = parse_size("train.batches", get("train.batches"));
  t.epoch_ = parse_size("train.epoch", get("train.epoch"));
  t.batch_in_epoch_ = parse_size("train.batch_in_epoch", get("train.batch_in_epoch"));
  t.loss_since_eval_ = parse_double("train.loss_since_eval", get("train.loss_since_eval"));
  t.batches_since_eval_ =
      parse_size("train.batches_since_eval", get("train.batches_since_eval"));
  t.epoch_loss_ = parse_double("train.epoch_loss", get("train.epoch_loss"));
  t.epoch_batches_ = parse_size("train.epoch_batches", get("train.epoch_batches"));
  t.last_epoch_loss_ = parse_double("train.last_epoch_loss", get("train.last_epoch_loss"));
  t.adam_.load(ckpt.tensors, parse_size("train.adam_steps", get("train.adam_steps")));
  std::istringstream rng(get("train.rng"));
  rng >> t.rng_;
  if (!rng)
    throw FormatError("bad RNG state in checkpoint");

  bool has_best = false;
  for (const auto &[k, v] : ckpt.tensors)
    has_best = has_best || k.rfind("best.", 0) == 0;
  if (has_best) {
    Parameters best = ckpt.params;
    best.for_each([&](const std::string &name, Tensor &p) {
      auto it = ckpt.tensors.find("best." + name);
      if (it == ckpt.tensors.end() || it->second.shape() != p.shape())
        throw FormatError("checkpoint best-parameter copy is incomplete at '" +
                          name + "'");
      p = it->second;
    });
    best.enable_grad();
    t.best_params_ = std::move(best);
  }
  return t;
}

} // namespace nqg
