// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nqg::cli {

/// What a command read and wrote; the dispatcher turns it into a manifest.
struct RunRecord {
  std::string manifest_path;
  std::vector<std::string> inputs;
  /// Relative to the manifest's directory.
  std::vector<std::string> outputs;
  std::map<std::string, std::string> resolved;
  std::optional<std::uint64_t> seed;
};

struct PreprocessOptions {
  std::string train;
  std::string dev;
  std::string train_annotations;
  std::string dev_annotations;
  std::string out;
  std::size_t vocab_size = 20000;
  std::uint64_t seed = 0;
};

struct TrainOptions {
  std::string train;
  std::string dev;
  std::string vocab;
  std::string out;
  std::string resume;
  std::string pretrain;
  std::size_t vocab_size = 20000;
  std::size_t word_dim = 300;
  std::size_t feature_dim = 32;
  std::size_t hidden_dim = 512;
  double dropout = 0.5;
  std::size_t max_decode_len = 40;
  bool no_answer = false;
  bool no_pos = false;
  bool no_ner = false;
  bool no_case = false;
  bool no_copy = false;
  bool share_embeddings = false;
  bool no_schedule = false;
  bool tiny = false;
  bool sgd_from_best = false;
  std::size_t batch_size = 64;
  double lr = 0.001;
  double sgd_lr = 0.5;
  std::size_t eval_every = 1000;
  std::size_t adam_patience = 6;
  std::size_t sgd_patience = 12;
  std::size_t max_epochs = 20;
  std::size_t max_batches = 0;
  double target_loss = 0;
  std::size_t dev_beam = 1;
  std::size_t dev_limit = 0;
  std::uint64_t seed = 0;
};

struct GenerateOptions {
  std::string checkpoint;
  std::string input;
  std::string out;
  std::size_t beam = 12;
  /// 0: the checkpoint's max_decode_len.
  std::size_t max_len = 0;
  double length_penalty = 0;
};

struct EvaluateOptions {
  std::string generations;
  std::string gold;
  std::string test_generations;
  std::string test_gold;
  std::string name = "NQG++";
  std::string out;
};

struct AnalyzeOptions {
  std::string generations;
  std::string gold;
  std::string out;
};

struct RateOptions {
  std::string input;
  std::string generations;
  std::vector<std::string> sheets;
  std::size_t sample = 100;
  std::uint64_t seed = 0;
  std::string out;
};

struct SynthCommandOptions {
  std::size_t questions = 2000;
  std::uint64_t seed = 1;
  std::size_t name_pool = 3000;
  std::string out;
};

RunRecord cmd_preprocess(const PreprocessOptions &o, std::ostream &log);
RunRecord cmd_train(const TrainOptions &o, std::ostream &log);
RunRecord cmd_generate(const GenerateOptions &o, std::ostream &log);
RunRecord cmd_evaluate(const EvaluateOptions &o, std::ostream &log);
RunRecord cmd_analyze(const AnalyzeOptions &o, std::ostream &log);
RunRecord cmd_rate(const RateOptions &o, std::ostream &log);
RunRecord cmd_synth(const SynthCommandOptions &o, std::ostream &log);

/// Manifest path for a command whose --out is a single file.
std::string manifest_beside(const std::string &file);

} // namespace nqg::cli
