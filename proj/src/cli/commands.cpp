// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "nqg/checkpoint.hpp"
#include "nqg/encoding.hpp"
#include "nqg/error.hpp"
#include "nqg/eval.hpp"
#include "nqg/inference.hpp"
#include "nqg/squad.hpp"
#include "nqg/synth.hpp"
#include "nqg/trainer.hpp"
#include "nqg/triple.hpp"

namespace fs = std::filesystem;

namespace nqg::cli {

namespace {

constexpr const char *kUndefined = "—";

std::ifstream open_in(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path);
  return out;
}

void ensure_dir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create " + dir + ": " + ec.message());
}

void ensure_parent(const std::string &file) {
  const fs::path parent = fs::path(file).parent_path();
  if (!parent.empty())
    ensure_dir(parent.string());
}

std::string join(const fs::path &dir, const std::string &name) {
  return (dir / name).string();
}

std::vector<std::string> read_lines(const std::string &path) {
  auto in = open_in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

Sentence split_words(const std::string &line) {
  std::istringstream in(line);
  Sentence words;
  std::string w;
  while (in >> w)
    words.push_back(w);
  return words;
}

std::string join_words(const std::vector<std::string> &words) {
  std::string s;
  for (const auto &w : words) {
    if (!s.empty())
      s += ' ';
    s += w;
  }
  return s;
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Generations paired with gold questions, one per line.
struct Aligned {
  std::vector<Sentence> generated;
  std::vector<Sentence> gold;
};

Aligned align(const std::string &generations, const std::string &gold) {
  const auto lines = read_lines(generations);
  const auto triples = read_triples_file(gold);
  if (lines.size() > triples.size())
    throw ContractError(generations + ":" +
                        std::to_string(triples.size() + 1) +
                        ": no gold triple for this generation");
  if (lines.size() < triples.size())
    throw ContractError(gold + ":" + std::to_string(lines.size() + 1) +
                        ": no generation for this triple");
  Aligned a;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (triples[i].question.empty())
      throw ContractError(gold + ":" + std::to_string(i + 1) +
                          ": triple has no question");
    a.generated.push_back(split_words(lines[i]));
    a.gold.push_back(triples[i].question);
  }
  return a;
}

// Pads by code points so the dash placeholder lines up.
std::string pad(const std::string &s, std::size_t width) {
  std::size_t cps = 0;
  for (unsigned char c : s)
    cps += (c & 0xC0) != 0x80;
  return s + std::string(width > cps ? width - cps : 0, ' ');
}

void put_kv(std::map<std::string, std::string> &into,
            const std::vector<std::pair<std::string, std::string>> &kv,
            const std::string &prefix) {
  for (const auto &[k, v] : kv)
    into[prefix + k] = v;
}

} // namespace

std::string manifest_beside(const std::string &file) {
  return file + ".manifest.json";
}

// ---------------------------------------------------------- preprocess

RunRecord cmd_preprocess(const PreprocessOptions &o, std::ostream &log) {
  Extraction train = extract_triples_file(o.train);
  Extraction dev = extract_triples_file(o.dev);

  const Annotator train_ann = o.train_annotations.empty()
                                  ? Annotator::fallback()
                                  : Annotator::from_conll_file(o.train_annotations);
  const Annotator dev_ann = o.dev_annotations.empty()
                                ? Annotator::fallback()
                                : Annotator::from_conll_file(o.dev_annotations);
  annotate(train.triples, train_ann);
  annotate(dev.triples, dev_ann);

  auto [dev_half, test_half] = split_dev_test(dev.triples, o.seed);
  const Lexicon lex = build_lexicon(train.triples, o.vocab_size);

  ensure_dir(o.out);
  const fs::path dir(o.out);
  write_triples_file(join(dir, "train.jsonl"), train.triples);
  write_triples_file(join(dir, "dev.jsonl"), dev_half);
  write_triples_file(join(dir, "test.jsonl"), test_half);
  {
    auto out = open_out(join(dir, "vocab.txt"));
    lex.words.save(out);
  }
  {
    auto out = open_out(join(dir, "skips.tsv"));
    out << "split\tqa_id\treason\n";
    for (const auto &s : train.skipped)
      out << "train\t" << s.qa_id << '\t' << s.reason << '\n';
    for (const auto &s : dev.skipped)
      out << "dev\t" << s.qa_id << '\t' << s.reason << '\n';
  }

  log << "train " << train.triples.size() << " triples, "
      << train.skipped.size() << " skipped\n"
      << "dev " << dev_half.size() << ", test " << test_half.size() << ", "
      << dev.skipped.size() << " skipped\n"
      << "vocab " << lex.words.size() << '\n';

  RunRecord r;
  r.manifest_path = join(dir, "manifest.json");
  r.inputs = {o.train, o.dev};
  if (!o.train_annotations.empty())
    r.inputs.push_back(o.train_annotations);
  if (!o.dev_annotations.empty())
    r.inputs.push_back(o.dev_annotations);
  r.outputs = {"train.jsonl", "dev.jsonl", "test.jsonl", "vocab.txt",
               "skips.tsv"};
  r.seed = o.seed;
  r.resolved = {{"train_triples", std::to_string(train.triples.size())},
                {"dev_triples", std::to_string(dev_half.size())},
                {"test_triples", std::to_string(test_half.size())},
                {"vocab_size", std::to_string(lex.words.size())}};
  return r;
}

// --------------------------------------------------------------- train

RunRecord cmd_train(const TrainOptions &o, std::ostream &log) {
  TrainConfig tc;
  tc.batch_size = o.batch_size;
  tc.adam.lr = o.lr;
  tc.sgd_initial_lr = o.sgd_lr;
  tc.eval_every_batches = o.eval_every;
  tc.adam_patience = o.adam_patience;
  tc.sgd_patience = o.sgd_patience;
  tc.seed = o.seed;
  tc.schedule_enabled = !o.no_schedule;
  tc.max_epochs = o.max_epochs;
  tc.max_batches = o.max_batches;
  tc.target_loss = o.target_loss;
  tc.sgd_from_best = o.sgd_from_best;
  tc.dev_beam = o.dev_beam;
  tc.dev_limit = o.dev_limit;
  tc.max_decode_len = o.max_decode_len;
  tc.validate();

  const auto train_triples = read_triples_file(o.train);
  const auto dev_triples = o.dev.empty() ? std::vector<Triple>{}
                                         : read_triples_file(o.dev);

  std::optional<Trainer> trainer;
  if (!o.resume.empty()) {
    trainer.emplace(Trainer::resume(load_checkpoint(o.resume), tc));
  } else {
    Lexicon lex = build_lexicon(train_triples, o.vocab_size);
    if (!o.vocab.empty()) {
      auto in = open_in(o.vocab);
      lex.words = Vocabulary::load(in, o.vocab_size);
    }
    ModelConfig mc;
    mc.word_dim = o.word_dim;
    mc.feature_dim = o.feature_dim;
    mc.hidden_dim = o.hidden_dim;
    mc.dropout_p = o.dropout;
    mc.max_decode_len = o.max_decode_len;
    mc.features = {!o.no_answer, !o.no_pos, !o.no_ner, !o.no_case};
    mc.copy_enabled = !o.no_copy;
    mc.share_embeddings = o.share_embeddings;
    mc.pretrained_embeddings_path = o.pretrain;
    mc.vocab_size = lex.words.size();
    mc.pos_tags = lex.pos.size();
    mc.ner_tags = lex.ner.size();
    mc.validate();

    Rng rng(o.seed);
    Parameters params = Parameters::initialize(mc, rng);
    if (!o.pretrain.empty()) {
      const std::size_t width = pretrained_width(o.pretrain);
      if (width != mc.word_dim)
        throw ConfigError("--pretrain vectors in " + o.pretrain + " are " +
                          std::to_string(width) + " wide but --word-dim is " +
                          std::to_string(mc.word_dim));
      std::size_t hits = 0;
      {
        auto in = open_in(o.pretrain);
        hits = load_pretrained_embeddings(in, lex.words,
                                          params.encoder_embedding(), o.pretrain);
      }
      if (!params.shares_embeddings()) {
        auto in = open_in(o.pretrain);
        load_pretrained_embeddings(in, lex.words, params.decoder_embedding(),
                                   o.pretrain);
      }
      log << "pretrained vectors for " << hits << " words\n";
    }
    trainer.emplace(mc, tc, std::move(lex), std::move(params));
  }

  const ModelConfig &mc = trainer->model_config();
  TrainData data;
  data.train = encode_examples(train_triples, trainer->lexicon(), mc);
  data.dev = encode_examples(dev_triples, trainer->lexicon(), mc);
  for (const auto &t : dev_triples)
    data.dev_references.push_back(t.question);

  ensure_dir(o.out);
  const fs::path dir(o.out);
  auto metrics = open_out(join(dir, "metrics.csv"));
  metrics << metric_header() << '\n';
  auto epochs = open_out(join(dir, "epochs.csv"));
  epochs << "epoch,mean_loss\n";
  bool saved_best = false;
  double best_bleu = 0;

  TrainCallbacks cb;
  cb.on_metric = [&](const MetricRow &row) {
    metrics << format_metric(row) << '\n';
    log << format_metric(row) << '\n';
  };
  cb.on_best = [&](const Trainer &t) {
    save_checkpoint(join(dir, "best.ckpt"), t.checkpoint());
    saved_best = true;
    best_bleu = t.schedule().best_dev_metric;
  };
  cb.on_epoch = [&](std::size_t epoch, double loss) {
    epochs << epoch << ',' << fmt("%.6f", loss) << '\n';
  };
  trainer->run(data, cb);
  metrics.close();
  epochs.close();
  save_checkpoint(join(dir, "last.ckpt"), trainer->checkpoint());

  log << "epochs " << trainer->epoch() << ", last epoch loss "
      << fmt("%.6f", trainer->last_epoch_loss()) << ", batches "
      << trainer->schedule().batches_seen << '\n';
  if (saved_best)
    log << "best dev BLEU " << fmt("%.4f", best_bleu) << '\n';

  std::size_t word_matrices = 0;
  trainer->params().for_each([&](const std::string &name, const Tensor &) {
    word_matrices += name.ends_with("word_emb");
  });

  RunRecord r;
  r.manifest_path = join(dir, "manifest.json");
  r.inputs = {o.train};
  for (const auto *p : {&o.dev, &o.vocab, &o.resume, &o.pretrain})
    if (!p->empty())
      r.inputs.push_back(*p);
  r.outputs = {"metrics.csv", "epochs.csv", "last.ckpt"};
  if (saved_best)
    r.outputs.push_back("best.ckpt");
  r.seed = o.seed;
  put_kv(r.resolved, mc.to_key_values(), "model.");
  for (const auto &[k, v] : tc.to_key_values())
    r.resolved["train." + k] = v;
  r.resolved["word_matrices"] = std::to_string(word_matrices);
  r.resolved["encoder_input_dim"] = std::to_string(mc.encoder_input_dim());
  r.resolved["final_epoch_loss"] = fmt("%.6f", trainer->last_epoch_loss());
  return r;
}

// ------------------------------------------------------------ generate

RunRecord cmd_generate(const GenerateOptions &o, std::ostream &log) {
  if (o.beam == 0)
    throw ConfigError("--beam must be positive");
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const auto triples = read_triples_file(o.input);
  const auto examples = encode_examples(triples, ckpt.lexicon, ckpt.config);

  BeamOptions bo;
  bo.beam = o.beam;
  bo.max_len = o.max_len == 0 ? ckpt.config.max_decode_len : o.max_len;
  bo.length_penalty = o.length_penalty;

  ensure_parent(o.out);
  {
    auto out = open_out(o.out);
    for (const auto &ex : examples)
      out << join_words(
                 generate(ckpt.params, ckpt.config, ckpt.lexicon, ex, bo))
          << '\n';
    if (!out)
      throw IoError("write failed: " + o.out);
  }
  log << "generated " << examples.size() << " questions, beam " << bo.beam
      << '\n';

  RunRecord r;
  r.manifest_path = manifest_beside(o.out);
  r.inputs = {o.checkpoint, o.input};
  r.outputs = {fs::path(o.out).filename().string()};
  r.resolved = {{"beam", std::to_string(bo.beam)},
                {"max_len", std::to_string(bo.max_len)},
                {"length_penalty", fmt("%.17g", bo.length_penalty)}};
  put_kv(r.resolved, ckpt.config.to_key_values(), "model.");
  return r;
}

// ------------------------------------------------------------ evaluate

RunRecord cmd_evaluate(const EvaluateOptions &o, std::ostream &log) {
  const bool has_dev = !o.generations.empty() || !o.gold.empty();
  const bool has_test = !o.test_generations.empty() || !o.test_gold.empty();
  if (o.generations.empty() != o.gold.empty())
    throw ConfigError("--generations and --gold go together");
  if (o.test_generations.empty() != o.test_gold.empty())
    throw ConfigError("--test-generations and --test-gold go together");
  if (!has_dev && !has_test)
    throw ConfigError("nothing to evaluate");

  std::optional<double> dev_bleu, test_bleu;
  if (has_dev) {
    const Aligned a = align(o.generations, o.gold);
    dev_bleu = bleu4(a.generated, a.gold);
  }
  if (has_test) {
    const Aligned a = align(o.test_generations, o.test_gold);
    test_bleu = bleu4(a.generated, a.gold);
  }
  const auto cell = [](const std::optional<double> &v) {
    return v ? fmt("%.2f", *v) : std::string(kUndefined);
  };

  std::ostringstream report;
  report << "# corpus BLEU-4 (0-100), single reference, no smoothing\n";
  const std::size_t w = std::max<std::size_t>(o.name.size(), 5) + 2;
  report << pad("Model", w) << pad("Dev", 8) << "Test\n";
  report << pad(o.name, w) << pad(cell(dev_bleu), 8) << cell(test_bleu)
         << '\n';

  ensure_parent(o.out);
  open_out(o.out) << report.str();
  log << report.str();

  RunRecord r;
  r.manifest_path = manifest_beside(o.out);
  for (const auto *p : {&o.generations, &o.gold, &o.test_generations,
                        &o.test_gold})
    if (!p->empty())
      r.inputs.push_back(*p);
  r.outputs = {fs::path(o.out).filename().string()};
  if (dev_bleu)
    r.resolved["dev_bleu"] = fmt("%.17g", *dev_bleu);
  if (test_bleu)
    r.resolved["test_bleu"] = fmt("%.17g", *test_bleu);
  return r;
}

// ------------------------------------------------------------- analyze

RunRecord cmd_analyze(const AnalyzeOptions &o, std::ostream &log) {
  const Aligned a = align(o.generations, o.gold);
  const auto rows = type_precision_recall(a.generated, a.gold);
  const auto cell = [](const std::optional<double> &v) {
    return v ? fmt("%.4f", *v) : std::string(kUndefined);
  };

  std::ostringstream report;
  report << "# matched: the generated and gold question of the same item "
            "have the same type\n"
         << "# precision = matched / generated, recall = matched / gold, "
         << kUndefined << " when the denominator is 0\n";
  report << pad("type", 8) << pad("precision", 11) << pad("recall", 9)
         << pad("matched", 9) << pad("generated", 11) << "gold\n";
  for (const auto &row : rows)
    report << pad(std::string(type_name(row.type)), 8)
           << pad(cell(row.precision), 11) << pad(cell(row.recall), 9)
           << pad(std::to_string(row.matched), 9)
           << pad(std::to_string(row.generated), 11) << row.gold << '\n';

  ensure_parent(o.out);
  open_out(o.out) << report.str();
  log << report.str();

  RunRecord r;
  r.manifest_path = manifest_beside(o.out);
  r.inputs = {o.generations, o.gold};
  r.outputs = {fs::path(o.out).filename().string()};
  r.resolved["items"] = std::to_string(a.gold.size());
  return r;
}

// ---------------------------------------------------------------- rate

RunRecord cmd_rate(const RateOptions &o, std::ostream &log) {
  RunRecord r;
  r.manifest_path = manifest_beside(o.out);
  r.outputs = {fs::path(o.out).filename().string()};
  ensure_parent(o.out);

  if (!o.sheets.empty()) {
    if (!o.input.empty() || !o.generations.empty())
      throw ConfigError("--sheets cannot be combined with --input/--generations");
    if (o.sheets.size() < 2)
      throw ConfigError("agreement needs sheets from at least 2 raters");
    std::vector<std::vector<RatingRow>> sheets;
    for (const auto &path : o.sheets) {
      auto in = open_in(path);
      sheets.push_back(read_rating_sheet(in, path));
    }
    const RatingSummary s = aggregate_ratings(sheets);
    std::ostringstream report;
    report << "items\t" << s.items << '\n'
           << "raters\t" << s.raters << '\n'
           << "AvgScore\t" << fmt("%.2f", s.average_score) << '\n'
           << "kappa\t" << fmt("%.4f", s.kappa) << '\n';
    open_out(o.out) << report.str();
    log << report.str();
    r.inputs = o.sheets;
    r.resolved = {{"average_score", fmt("%.17g", s.average_score)},
                  {"kappa", fmt("%.17g", s.kappa)}};
    return r;
  }

  if (o.input.empty() || o.generations.empty())
    throw ConfigError("rate needs --input and --generations, or --sheets");
  const auto triples = read_triples_file(o.input);
  const auto lines = read_lines(o.generations);
  if (lines.size() != triples.size())
    throw ContractError(o.generations + ":" +
                        std::to_string(std::min(lines.size(), triples.size()) + 1) +
                        ": generations and inputs differ in length");
  const auto rows = sample_for_rating(triples, lines, o.sample, o.seed);
  {
    auto out = open_out(o.out);
    write_rating_sheet(out, rows);
  }
  log << "sheet with " << rows.size() << " items\n";
  r.inputs = {o.input, o.generations};
  r.seed = o.seed;
  r.resolved = {{"items", std::to_string(rows.size())}};
  return r;
}

// --------------------------------------------------------------- synth

RunRecord cmd_synth(const SynthCommandOptions &o, std::ostream &log) {
  SynthOptions so;
  so.questions = o.questions;
  so.seed = o.seed;
  so.name_pool = o.name_pool;
  const std::string json = synthesize_squad(so);
  ensure_parent(o.out);
  {
    auto out = open_out(o.out);
    out << json;
  }
  log << "wrote " << o.out << '\n';
  RunRecord r;
  r.manifest_path = manifest_beside(o.out);
  r.outputs = {fs::path(o.out).filename().string()};
  r.seed = o.seed;
  return r;
}

} // namespace nqg::cli
