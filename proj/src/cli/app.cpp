// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "nqg/cli.hpp"
#include "nqg/error.hpp"

namespace fs = std::filesystem;

namespace nqg::cli {

namespace {

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool given_on_command_line(const std::vector<std::string> &args,
                           const std::string &name) {
  const std::string flag = "--" + name;
  for (const auto &a : args)
    if (a == flag || a.starts_with(flag + "="))
      return true;
  return false;
}

/// Splices key=value lines of a --config file into the argument list,
/// skipping keys the command line already sets.
std::vector<std::string> expand_config(const std::vector<std::string> &args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].starts_with("--config="))
      path = args[i].substr(9);
  }
  if (path.empty() || args.empty())
    return args;

  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigBase().from_file(path);
  } catch (const CLI::Error &e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  std::vector<std::string> extra;
  for (const auto &item : items) {
    const std::string name = item.fullname();
    if (name == "config")
      throw ConfigError("config " + path + ": nested config key");
    if (given_on_command_line(args, name))
      continue;
    if (item.inputs.empty())
      extra.push_back("--" + name);
    for (const auto &v : item.inputs)
      extra.push_back("--" + name + "=" + v);
  }
  std::vector<std::string> merged{args.front()};
  merged.insert(merged.end(), extra.begin(), extra.end());
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

/// Every option of `sub` with its final value (defaults included).
std::vector<std::pair<std::string, std::vector<std::string>>>
materialize(const CLI::App &sub) {
  std::istringstream in(sub.config_to_str(true, false));
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for (const auto &item : CLI::ConfigBase().from_config(in)) {
    if (item.name == "config" || item.name == "help")
      continue;
    out.emplace_back(item.fullname(), item.inputs);
  }
  return out;
}

void finish(const RunRecord &r, const CLI::App &sub, std::ostream &out) {
  Manifest m;
  m.command = sub.get_name();
  m.arguments = materialize(sub);
  m.resolved = r.resolved;
  m.seed = r.seed;
  for (const auto &p : r.inputs)
    m.inputs.push_back({p, sha256_file(p)});
  const fs::path dir = fs::path(r.manifest_path).parent_path();
  for (const auto &name : r.outputs)
    m.outputs.push_back({name, sha256_file((dir / name).string())});
  m.timestamp = utc_timestamp();
  write_manifest(r.manifest_path, m);
  out << "manifest " << r.manifest_path << '\n';
}

std::string manifest_for(const std::string &command, const std::string &out) {
  if (command == "preprocess" || command == "train")
    return (fs::path(out) / "manifest.json").string();
  return manifest_beside(out);
}

int replay(const std::string &manifest_path, const std::string &new_out,
           bool verify, std::ostream &out, std::ostream &err) {
  const Manifest m = read_manifest(manifest_path);
  std::vector<std::string> args{m.command};
  for (const auto &[name, values] : m.arguments) {
    if (name == "out")
      continue;
    for (const auto &v : values)
      if (!v.empty())
        args.push_back("--" + name + "=" + v);
  }
  args.push_back("--out=" + new_out);
  const int code = run(args, out, err);
  if (code != kExitOk || !verify)
    return code;

  const Manifest again = read_manifest(manifest_for(m.command, new_out));
  if (again.outputs.size() != m.outputs.size())
    throw ContractError("replay wrote " + std::to_string(again.outputs.size()) +
                        " outputs, manifest lists " +
                        std::to_string(m.outputs.size()));
  for (std::size_t i = 0; i < m.outputs.size(); ++i)
    if (again.outputs[i].sha256 != m.outputs[i].sha256)
      throw ContractError("replay output " + again.outputs[i].path +
                          " differs from " + m.outputs[i].path);
  out << "replay reproduced " << m.outputs.size() << " outputs\n";
  return kExitOk;
}

} // namespace

int exit_code_for(const std::exception &e) {
  if (dynamic_cast<const ConfigError *>(&e) ||
      dynamic_cast<const CLI::Error *>(&e))
    return kExitConfig;
  if (dynamic_cast<const NumericError *>(&e) ||
      dynamic_cast<const DimensionError *>(&e))
    return kExitNumeric;
  if (dynamic_cast<const Error *>(&e))
    return kExitData;
  return kExitInternal;
}

int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"Neural question generation: preprocess, train, generate, "
               "evaluate, analyze, rate."};
  app.name("nqg");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  std::string config_path;
  const auto add_config = [&](CLI::App *sub) {
    sub->add_option("--config", config_path,
                    "File of key=value lines (long option names); command "
                    "line flags take precedence");
  };
  const auto add_seed = [](CLI::App *sub, std::uint64_t &seed) {
    sub->add_option("--seed", seed, "Random seed")->envname("NQG_SEED");
  };

  std::function<RunRecord(std::ostream &)> command;

  // preprocess
  PreprocessOptions pre;
  auto *p = app.add_subcommand("preprocess",
                               "SQuAD JSON to sentence-answer-question triples");
  add_config(p);
  p->add_option("--train", pre.train, "SQuAD v1.1 training JSON")->required();
  p->add_option("--dev", pre.dev,
                "SQuAD v1.1 dev JSON, halved into dev and test")
      ->required();
  p->add_option("--train-annotations", pre.train_annotations,
                "CoNLL token/POS/NER blocks for the training triples");
  p->add_option("--dev-annotations", pre.dev_annotations,
                "CoNLL token/POS/NER blocks for the dev triples");
  p->add_option("--vocab-size", pre.vocab_size, "Vocabulary cap");
  add_seed(p, pre.seed);
  p->add_option("--out", pre.out, "Output directory")->required();
  p->callback([&] { command = [&](std::ostream &o) { return cmd_preprocess(pre, o); }; });

  // train
  TrainOptions tr;
  auto *t = app.add_subcommand("train", "Train a model on triples");
  add_config(t);
  t->add_option("--train", tr.train, "Training triples (JSON lines)")->required();
  t->add_option("--dev", tr.dev, "Dev triples for BLEU evaluation");
  t->add_option("--vocab", tr.vocab, "Vocabulary file (token<TAB>count)");
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--resume", tr.resume, "Continue from a checkpoint");
  t->add_option("--pretrain", tr.pretrain, "GloVe text vectors for word embeddings");
  t->add_option("--vocab-size", tr.vocab_size, "Vocabulary cap");
  t->add_option("--word-dim", tr.word_dim, "Word embedding size");
  t->add_option("--feature-dim", tr.feature_dim, "Size of each feature embedding");
  t->add_option("--hidden-dim", tr.hidden_dim, "GRU hidden size");
  t->add_option("--dropout", tr.dropout, "Dropout probability");
  t->add_option("--max-decode-len", tr.max_decode_len, "Longest decoded question");
  t->add_flag("--no-answer", tr.no_answer, "Drop the answer position feature");
  t->add_flag("--no-pos", tr.no_pos, "Drop the POS feature");
  t->add_flag("--no-ner", tr.no_ner, "Drop the NER feature");
  t->add_flag("--no-case", tr.no_case, "Drop the word case feature");
  t->add_flag("--no-copy", tr.no_copy, "Disable the copy mechanism");
  t->add_flag("--share-embeddings", tr.share_embeddings,
              "One word matrix for encoder and decoder");
  t->add_flag("--no-schedule", tr.no_schedule,
              "Stay on Adam at a fixed rate");
  t->add_flag("--tiny", tr.tiny,
              "Desk-scale preset: dims 16/4/16, no dropout, batch 10, lr "
              "0.01, up to 600 epochs, stop below loss 0.02");
  t->add_flag("--sgd-from-best", tr.sgd_from_best,
              "Start the SGD phase from the best parameters");
  t->add_option("--batch-size", tr.batch_size, "Mini-batch size");
  t->add_option("--lr", tr.lr, "Adam learning rate");
  t->add_option("--sgd-lr", tr.sgd_lr, "Initial SGD learning rate");
  t->add_option("--eval-every", tr.eval_every, "Batches between dev evaluations");
  t->add_option("--adam-patience", tr.adam_patience,
                "Dev drops before switching to SGD");
  t->add_option("--sgd-patience", tr.sgd_patience,
                "Dev drops before halving the SGD rate");
  t->add_option("--max-epochs", tr.max_epochs, "Epoch limit");
  t->add_option("--max-batches", tr.max_batches, "Batch limit (0: none)");
  t->add_option("--target-loss", tr.target_loss,
                "Stop once an epoch's mean token loss is below this (0: off)");
  t->add_option("--dev-beam", tr.dev_beam, "Beam for dev decoding (1: greedy)");
  t->add_option("--dev-limit", tr.dev_limit,
                "Dev triples decoded per evaluation (0: all)");
  add_seed(t, tr.seed);
  t->callback([&] {
    if (tr.tiny) {
      // default_val also updates the bound field and the materialized config
      const auto preset = [&](const char *name, const char *value) {
        if (t->count(name) == 0)
          t->get_option(name)->default_val(value);
      };
      preset("--word-dim", "16");
      preset("--feature-dim", "4");
      preset("--hidden-dim", "16");
      preset("--dropout", "0");
      preset("--max-decode-len", "20");
      preset("--batch-size", "10");
      preset("--lr", "0.01");
      preset("--eval-every", "50");
      preset("--max-epochs", "600");
      preset("--target-loss", "0.02");
    }
    command = [&](std::ostream &o) { return cmd_train(tr, o); };
  });

  // generate
  GenerateOptions ge;
  auto *g = app.add_subcommand("generate", "Generate one question per triple");
  add_config(g);
  g->add_option("--checkpoint", ge.checkpoint, "Model checkpoint")->required();
  g->add_option("--input", ge.input, "Triples (JSON lines)")->required();
  g->add_option("--out", ge.out, "Output file, one question per line")->required();
  g->add_option("--beam", ge.beam, "Beam size (1: greedy)");
  g->add_option("--max-len", ge.max_len,
                "Longest question (0: the checkpoint's setting)");
  g->add_option("--length-penalty", ge.length_penalty,
                "Divide finished scores by length^alpha (0: off)");
  g->callback([&] { command = [&](std::ostream &o) { return cmd_generate(ge, o); }; });

  // evaluate
  EvaluateOptions ev;
  auto *e = app.add_subcommand("evaluate", "Corpus BLEU-4 report");
  add_config(e);
  e->add_option("--generations", ev.generations, "Dev generations");
  e->add_option("--gold", ev.gold, "Dev gold triples");
  e->add_option("--test-generations", ev.test_generations, "Test generations");
  e->add_option("--test-gold", ev.test_gold, "Test gold triples");
  e->add_option("--name", ev.name, "Model name in the report");
  e->add_option("--out", ev.out, "Report file")->required();
  e->callback([&] { command = [&](std::ostream &o) { return cmd_evaluate(ev, o); }; });

  // analyze
  AnalyzeOptions an;
  auto *a = app.add_subcommand("analyze", "Per question type precision and recall");
  add_config(a);
  a->add_option("--generations", an.generations, "Generated questions")->required();
  a->add_option("--gold", an.gold, "Gold triples")->required();
  a->add_option("--out", an.out, "Report file")->required();
  a->callback([&] { command = [&](std::ostream &o) { return cmd_analyze(an, o); }; });

  // rate
  RateOptions ra;
  auto *r = app.add_subcommand(
      "rate", "Write a rating sheet, or score filled sheets (--sheets)");
  add_config(r);
  r->add_option("--input", ra.input, "Triples the generations came from");
  r->add_option("--generations", ra.generations, "Generated questions");
  r->add_option("--sample", ra.sample, "Items on the sheet");
  r->add_option("--sheets", ra.sheets, "Filled sheets, one per rater");
  add_seed(r, ra.seed);
  r->add_option("--out", ra.out, "Sheet or summary file")->required();
  r->callback([&] { command = [&](std::ostream &o) { return cmd_rate(ra, o); }; });

  // synth
  SynthCommandOptions sy;
  auto *s = app.add_subcommand("synth", "Write a synthetic SQuAD-style JSON file");
  add_config(s);
  s->add_option("--questions", sy.questions, "Question-answer pairs");
  s->add_option("--name-pool", sy.name_pool, "Distinct names per entity kind");
  add_seed(s, sy.seed);
  s->add_option("--out", sy.out, "Output JSON")->required();
  s->callback([&] { command = [&](std::ostream &o) { return cmd_synth(sy, o); }; });

  // replay
  std::string manifest_path, replay_out;
  bool verify = false;
  auto *rp = app.add_subcommand("replay", "Rerun the command recorded in a manifest");
  rp->add_option("--manifest", manifest_path, "Manifest to replay")->required();
  rp->add_option("--out", replay_out, "Where the rerun writes")->required();
  rp->add_flag("--verify", verify,
               "Fail unless every output matches the recorded checksum");

  try {
    const std::vector<std::string> merged = expand_config(args);
    std::vector<const char *> argv{"nqg"};
    for (const auto &s_ : merged)
      argv.push_back(s_.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError &pe) {
      const int code = app.exit(pe, out, err);
      return code == 0 ? kExitOk : kExitConfig;
    }
    if (rp->parsed())
      return replay(manifest_path, replay_out, verify, out, err);
    const RunRecord record = command(out);
    for (CLI::App *sub : app.get_subcommands())
      finish(record, *sub, out);
    return kExitOk;
  } catch (const std::exception &ex) {
    err << "nqg: " << ex.what() << '\n';
    return exit_code_for(ex);
  }
}

} // namespace nqg::cli
