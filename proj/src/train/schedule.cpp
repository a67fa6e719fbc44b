// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>

#include "nqg/error.hpp"
#include "nqg/trainer.hpp"

namespace nqg {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

std::string_view phase_name(Phase phase) {
  return phase == Phase::Adam ? "ADAM" : "SGD";
}

void TrainConfig::validate() const {
  if (batch_size == 0)
    throw ConfigError("batch_size must be positive");
  if (adam_patience == 0 || sgd_patience == 0)
    throw ConfigError("patience values must be positive");
  if (!(clip_lo < clip_hi))
    throw ConfigError("clip range [" + num(clip_lo) + ", " + num(clip_hi) +
                      "] is empty");
  if (!(adam.lr > 0) || !(sgd_initial_lr > 0))
    throw ConfigError("learning rates must be positive");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(adam.epsilon > 0))
    throw ConfigError("Adam epsilon must be positive");
  if (eval_every_batches == 0)
    throw ConfigError("eval_every must be positive");
  if (max_epochs == 0)
    throw ConfigError("max_epochs must be positive");
  if (dev_beam == 0)
    throw ConfigError("dev beam must be at least 1");
  if (max_decode_len == 0)
    throw ConfigError("max_decode_len must be positive");
  if (target_loss < 0)
    throw ConfigError("target_loss must be non-negative");
}

std::map<std::string, std::string> TrainConfig::to_key_values() const {
  return {
      {"batch_size", std::to_string(batch_size)},
      {"adam_lr", num(adam.lr)},
      {"adam_beta1", num(adam.beta1)},
      {"adam_beta2", num(adam.beta2)},
      {"adam_epsilon", num(adam.epsilon)},
      {"sgd_initial_lr", num(sgd_initial_lr)},
      {"clip_lo", num(clip_lo)},
      {"clip_hi", num(clip_hi)},
      {"eval_every", std::to_string(eval_every_batches)},
      {"adam_patience", std::to_string(adam_patience)},
      {"sgd_patience", std::to_string(sgd_patience)},
      {"seed", std::to_string(seed)},
      {"schedule", schedule_enabled ? "true" : "false"},
      {"max_epochs", std::to_string(max_epochs)},
      {"max_batches", std::to_string(max_batches)},
      {"target_loss", num(target_loss)},
      {"sgd_from_best", sgd_from_best ? "true" : "false"},
      {"dev_beam", std::to_string(dev_beam)},
      {"dev_limit", std::to_string(dev_limit)},
      {"max_decode_len", std::to_string(max_decode_len)},
  };
}

ScheduleEvent advance_schedule(ScheduleState &state, double metric,
                               const TrainConfig &config) {
  ScheduleEvent event;
  if (metric < state.best_dev_metric) {
    ++state.consecutive_drops;
  } else {
    event.improved = true;
    state.best_dev_metric = metric;
    state.consecutive_drops = 0;
    return event;
  }
  if (state.phase == Phase::Adam) {
    if (state.consecutive_drops >= config.adam_patience) {
      state.phase = Phase::Sgd;
      state.current_sgd_lr = config.sgd_initial_lr;
      state.consecutive_drops = 0;
      state.best_dev_metric = -std::numeric_limits<double>::infinity();
      event.switched_to_sgd = true;
    }
  } else if (state.consecutive_drops >= config.sgd_patience) {
    state.current_sgd_lr /= 2;
    state.consecutive_drops = 0;
    event.lr_halved = true;
  }
  return event;
}

} // namespace nqg
