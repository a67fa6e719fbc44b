// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>

#include "nqg/text.hpp"
#include "nqg/vocab.hpp"

namespace nqg::testing {

ModelConfig tiny_config() {
  ModelConfig c;
  c.vocab_size = 20;
  c.word_dim = 8;
  c.feature_dim = 4;
  c.hidden_dim = 8;
  c.dropout_p = 0.0;
  c.pos_tags = 6;
  c.ner_tags = 5;
  c.max_decode_len = 10;
  return c;
}

Example random_example(const ModelConfig &config, std::size_t n,
                       std::size_t target_len, Rng &rng, bool with_copies) {
  const auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi - 1)(rng);
  };
  Example ex;
  const std::size_t a0 = uniform(0, n);
  const std::size_t a1 = uniform(a0 + 1, n + 1);
  const auto bio = bio_tag(n, a0, a1);
  std::vector<std::size_t> rare;
  for (std::size_t i = 0; i < n; ++i) {
    TokenFeatures t;
    const bool unk = with_copies && uniform(0, 3) == 0;
    t.word = unk ? Vocabulary::kUnk : uniform(Vocabulary::kSpecials, config.vocab_size);
    if (unk)
      rare.push_back(i);
    if (config.features.answer)
      t.bio = static_cast<std::size_t>(bio[i]);
    if (config.features.pos)
      t.pos = uniform(0, config.pos_tags);
    if (config.features.ner)
      t.ner = uniform(0, config.ner_tags);
    if (config.features.casing)
      t.casing = uniform(0, ModelConfig::kCaseTags);
    ex.source.push_back(t);
    ex.source_tokens.push_back(unk ? "rare" + std::to_string(i)
                                   : "w" + std::to_string(t.word));
  }
  for (std::size_t k = 0; k + 1 < target_len; ++k) {
    if (!rare.empty() && uniform(0, 3) == 0) {
      ex.target.push_back(Vocabulary::kUnk);
      ex.copy_source.push_back(rare[uniform(0, rare.size())]);
    } else {
      ex.target.push_back(uniform(Vocabulary::kSpecials, config.vocab_size));
      ex.copy_source.push_back(std::nullopt);
    }
  }
  ex.target.push_back(Vocabulary::kEos);
  ex.copy_source.push_back(std::nullopt);
  return ex;
}

Parameters random_parameters(const ModelConfig &config, std::uint64_t seed,
                             double scale) {
  Rng rng(seed);
  Parameters p = Parameters::initialize(config, rng);
  std::uniform_real_distribution<double> u(-scale, scale);
  p.for_each([&](const std::string &, Tensor &t) {
    for (double &v : t.values())
      v = u(rng);
  });
  return p;
}

std::vector<Triple> toy_triples(std::size_t count, std::uint64_t seed) {
  const std::vector<std::string> things = {"river", "mountain", "city", "lake",
                                           "forest", "bridge", "tower", "island"};
  const std::vector<std::string> names = {"alpha", "bravo", "delta", "echo",
                                          "golf", "hotel", "india", "kilo"};
  Rng rng(seed);
  std::vector<Triple> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string &thing = things[(i + rng() % 3) % things.size()];
    const std::string &name = names[(i * 3 + rng() % 5) % names.size()];
    Triple t;
    t.sentence = {"the", thing, "is", "called", name, "."};
    t.answer_start = 4;
    t.answer_end = 5;
    t.question = {"what", "is", "the", thing, "called", "?"};
    t.pos = {"DT", "NN", "VBZ", "VBN", "NNP", "."};
    t.ner = {"O", "O", "O", "O", "LOC", "O"};
    out.push_back(std::move(t));
  }
  return out;
}

std::string temp_path(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / "nqg-tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

namespace oracle {

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double dot_row(const Tensor &w, std::size_t r, const Vec &x) {
  double s = 0;
  for (std::size_t j = 0; j < x.size(); ++j)
    s += w.at(r, j) * x[j];
  return s;
}

Vec matvec(const Tensor &w, const Vec &x) {
  Vec y(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r)
    y[r] = dot_row(w, r, x);
  return y;
}

Vec gru(const GruParams &g, const Vec &x, const Vec &h) {
  const std::size_t d = h.size();
  Vec out(d);
  Vec z(d), r(d);
  for (std::size_t k = 0; k < d; ++k) {
    z[k] = sigm(dot_row(g.input_weight, k, x) + dot_row(g.gate_weight, k, h) +
                g.bias[k]);
    r[k] = sigm(dot_row(g.input_weight, d + k, x) +
                dot_row(g.gate_weight, d + k, h) + g.bias[d + k]);
  }
  for (std::size_t k = 0; k < d; ++k) {
    double a = dot_row(g.input_weight, 2 * d + k, x) + g.bias[2 * d + k];
    for (std::size_t j = 0; j < d; ++j)
      a += g.candidate_weight.at(k, j) * r[j] * h[j];
    out[k] = (1 - z[k]) * h[k] + z[k] * std::tanh(a);
  }
  return out;
}

void append_row(Vec &v, const Tensor &table, std::size_t r) {
  for (std::size_t j = 0; j < table.cols(); ++j)
    v.push_back(table.at(r, j));
}

Vec softmax(const Vec &v) {
  const double mx = *std::max_element(v.begin(), v.end());
  Vec out(v.size());
  double z = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    z += out[i] = std::exp(v[i] - mx);
  for (double &o : out)
    o /= z;
  return out;
}

} // namespace

Encoded encode(const Parameters &p, const ModelConfig &c,
               const std::vector<TokenFeatures> &source) {
  const std::size_t n = source.size(), d = c.hidden_dim;
  std::vector<Vec> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    append_row(x[i], p.encoder_embedding(), source[i].word);
    if (c.features.answer)
      append_row(x[i], p.bio_embedding, source[i].bio);
    if (c.features.pos)
      append_row(x[i], p.pos_embedding, source[i].pos);
    if (c.features.ner)
      append_row(x[i], p.ner_embedding, source[i].ner);
    if (c.features.casing)
      append_row(x[i], p.case_embedding, source[i].casing);
  }
  std::vector<Vec> fwd(n), bwd(n);
  Vec h(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    fwd[i] = h = gru(p.encoder_forward, x[i], h);
  h.assign(d, 0.0);
  for (std::size_t i = n; i-- > 0;)
    bwd[i] = h = gru(p.encoder_backward, x[i], h);
  Encoded e;
  for (std::size_t i = 0; i < n; ++i) {
    Vec hi = fwd[i];
    hi.insert(hi.end(), bwd[i].begin(), bwd[i].end());
    e.states.push_back(hi);
  }
  e.initial_state.resize(d);
  for (std::size_t k = 0; k < d; ++k)
    e.initial_state[k] = std::tanh(dot_row(p.init_weight, k, bwd[0]) + p.init_bias[k]);
  return e;
}

Step decoder_step(const Parameters &p, const ModelConfig &c, const Encoded &enc,
                  std::size_t prev_word, const Vec &prev_context,
                  const Vec &prev_state) {
  const std::size_t n = enc.states.size(), d = c.hidden_dim;
  Step s;
  const Vec ws = matvec(p.attention_state, prev_state);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec uh = matvec(p.attention_memory, enc.states[i]);
    double e = 0;
    for (std::size_t k = 0; k < d; ++k)
      e += p.attention_vector[k] * std::tanh(ws[k] + uh[k]);
    s.scores.push_back(e);
  }
  s.alpha = softmax(s.scores);
  s.context.assign(2 * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < 2 * d; ++k)
      s.context[k] += s.alpha[i] * enc.states[i][k];

  Vec w;
  append_row(w, p.decoder_embedding(), prev_word);
  Vec x = w;
  x.insert(x.end(), prev_context.begin(), prev_context.end());
  s.state = gru(p.decoder, x, prev_state);

  const Vec a = matvec(p.readout_word, w), b = matvec(p.readout_context, s.context),
            e = matvec(p.readout_state, s.state);
  for (std::size_t k = 0; k < 2 * d; ++k)
    s.readout.push_back(a[k] + b[k] + e[k]);
  for (std::size_t j = 0; j < d; ++j)
    s.maxout.push_back(std::max(s.readout[2 * j], s.readout[2 * j + 1]));
  s.logits = matvec(p.output_weight, s.maxout);
  s.gen = softmax(s.logits);
  if (c.copy_enabled)
    s.copy_prob = sigm(dot_row(p.copy_state, 0, s.state) +
                       dot_row(p.copy_context, 0, s.context) + p.copy_bias[0]);
  return s;
}

double batch_loss(const Parameters &p, const ModelConfig &c,
                  const std::vector<Example> &batch) {
  double total = 0;
  std::size_t tokens = 0;
  for (const auto &ex : batch) {
    const Encoded enc = encode(p, c, ex.source);
    Vec state = enc.initial_state;
    Vec context(2 * c.hidden_dim, 0.0);
    std::size_t prev = Vocabulary::kSos;
    for (std::size_t t = 0; t < ex.target.size(); ++t) {
      const Step s = decoder_step(p, c, enc, prev, context, state);
      const std::size_t y = ex.target[t];
      if (!s.copy_prob)
        total -= std::log(s.gen[y]);
      else if (ex.copy_source[t])
        total -= std::log(s.alpha[*ex.copy_source[t]]) + std::log(*s.copy_prob);
      else
        total -= std::log(s.gen[y]) + std::log(1 - *s.copy_prob);
      ++tokens;
      state = s.state;
      context = s.context;
      prev = y;
    }
  }
  return total / static_cast<double>(tokens);
}

double naive_bleu(const std::vector<Sentence> &hyps,
                  const std::vector<std::vector<Sentence>> &refs) {
  double matches[4] = {0, 0, 0, 0}, totals[4] = {0, 0, 0, 0};
  double hyp_len = 0, ref_len = 0;
  const auto occurrences = [](const Sentence &s, const Sentence &g) {
    double c = 0;
    for (std::size_t i = 0; i + g.size() <= s.size(); ++i)
      if (std::equal(g.begin(), g.end(), s.begin() + static_cast<long>(i)))
        c += 1;
    return c;
  };
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    const Sentence &h = hyps[k];
    hyp_len += static_cast<double>(h.size());
    std::size_t closest = refs[k][0].size();
    for (const auto &r : refs[k]) {
      const long dr = std::labs(static_cast<long>(r.size()) - static_cast<long>(h.size()));
      const long dc = std::labs(static_cast<long>(closest) - static_cast<long>(h.size()));
      if (dr < dc || (dr == dc && r.size() < closest))
        closest = r.size();
    }
    ref_len += static_cast<double>(closest);
    for (std::size_t n = 1; n <= 4; ++n) {
      if (h.size() < n)
        continue;
      std::vector<Sentence> seen;
      for (std::size_t i = 0; i + n <= h.size(); ++i) {
        Sentence g(h.begin() + static_cast<long>(i), h.begin() + static_cast<long>(i + n));
        totals[n - 1] += 1;
        if (std::find(seen.begin(), seen.end(), g) != seen.end())
          continue;
        seen.push_back(g);
        double best_ref = 0;
        for (const auto &r : refs[k])
          best_ref = std::max(best_ref, occurrences(r, g));
        matches[n - 1] += std::min(occurrences(h, g), best_ref);
      }
    }
  }
  double product = 1;
  for (int n = 0; n < 4; ++n) {
    if (totals[n] == 0 || matches[n] == 0)
      return 0;
    product *= matches[n] / totals[n];
  }
  const double bp = hyp_len < ref_len ? std::exp(1 - ref_len / hyp_len) : 1.0;
  return 100 * bp * std::pow(product, 0.25);
}

Enumerated enumerate_best(const Parameters &p, const ModelConfig &c,
                          const Example &example, std::size_t max_len) {
  const Encoded enc = encode(p, c, example.source);
  Enumerated best{{}, -std::numeric_limits<double>::infinity()};
  std::vector<std::size_t> path;
  std::function<void(const Vec &, const Vec &, std::size_t, double)> walk =
      [&](const Vec &state, const Vec &context, std::size_t prev, double score) {
        const Step s = decoder_step(p, c, enc, prev, context, state);
        for (std::size_t y = 0; y < s.gen.size(); ++y) {
          const double total = score + std::log(s.gen[y]);
          path.push_back(y);
          if (y == Vocabulary::kEos || path.size() == max_len) {
            if (total > best.log_prob)
              best = {path, total};
          } else {
            walk(s.state, s.context, y, total);
          }
          path.pop_back();
        }
      };
  walk(enc.initial_state, Vec(2 * c.hidden_dim, 0.0), Vocabulary::kSos, 0.0);
  return best;
}

ScheduleTrace simulate_schedule(const std::vector<double> &metrics,
                                std::size_t adam_patience,
                                std::size_t sgd_patience, double adam_lr,
                                double sgd_lr) {
  ScheduleTrace trace;
  bool sgd = false;
  double lr = sgd_lr;
  std::vector<double> history; // metrics seen in the current phase
  std::size_t since_best = 0;
  for (double m : metrics) {
    double best = -std::numeric_limits<double>::infinity();
    for (double h : history)
      best = std::max(best, h);
    history.push_back(m);
    since_best = m < best ? since_best + 1 : 0;
    if (!sgd && since_best == adam_patience) {
      sgd = true;
      history.clear();
      since_best = 0;
    } else if (sgd && since_best == sgd_patience) {
      lr *= 0.5;
      since_best = 0;
    }
    trace.phases.push_back(sgd ? "SGD" : "ADAM");
    trace.lrs.push_back(sgd ? lr : adam_lr);
  }
  return trace;
}

} // namespace oracle

} // namespace nqg::testing

namespace nqg::testing {

GradCheck gradient_check(Parameters &params, const ModelConfig &config,
                         const std::vector<Example> &batch, double eps) {
  params.enable_grad();
  params.zero_grad();
  accumulate_gradients(params, config, batch, RunMode{});
  GradCheck result;
  params.for_each([&](const std::string &name, Tensor &t) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = t[i];
      t[i] = orig + eps;
      const double up = step_loss(params, config, batch);
      t[i] = orig - eps;
      const double down = step_loss(params, config, batch);
      t[i] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double denom =
          std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  });
  return result;
}

double decoder_oracle_gap(const Parameters &params, const ModelConfig &config,
                          const Example &example, std::size_t steps) {
  Graph g;
  const BoundModel m = bind_const(g, params, config);
  const EncoderOutput enc = encode_source(m, example.source, RunMode{});
  const AttentionMemory memory = attention_memory(m, enc);
  Var state = init_decoder_state(m, enc);
  Var context = initial_context(m);

  const oracle::Encoded ref_enc = oracle::encode(params, config, example.source);
  oracle::Vec ref_state = ref_enc.initial_state;
  oracle::Vec ref_context(2 * config.hidden_dim, 0.0);

  double gap = 0;
  const auto cmp = [&](const Var &v, const oracle::Vec &r) {
    if (v.size() != r.size())
      return gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.size(); ++i)
      gap = std::max(gap, std::abs(v[i] - r[i]));
    return gap;
  };
  for (std::size_t i = 0; i < ref_enc.states.size(); ++i)
    cmp(enc.states[i], ref_enc.states[i]);
  cmp(state, ref_state);

  std::size_t prev = Vocabulary::kSos;
  for (std::size_t t = 0; t < steps; ++t) {
    const DecoderStepOutput out =
        decoder_step(m, memory, prev, context, state, RunMode{});
    const oracle::Step ref =
        oracle::decoder_step(params, config, ref_enc, prev, ref_context, ref_state);
    cmp(out.attention_scores, ref.scores);
    cmp(out.attention, ref.alpha);
    cmp(out.context, ref.context);
    cmp(out.state, ref.state);
    cmp(out.readout, ref.readout);
    cmp(out.maxout, ref.maxout);
    cmp(out.logits, ref.logits);
    cmp(out.gen_dist, ref.gen);
    if (out.copy_prob.has_value() != ref.copy_prob.has_value())
      return std::numeric_limits<double>::infinity();
    if (out.copy_prob)
      gap = std::max(gap, std::abs((*out.copy_prob)[0] - *ref.copy_prob));
    state = out.state;
    context = out.context;
    ref_state = ref.state;
    ref_context = ref.context;
    prev = t < example.target.size() ? example.target[t] : Vocabulary::kEos;
  }
  return gap;
}

} // namespace nqg::testing

namespace nqg::testing {

std::vector<BleuCase> bleu_cases() {
  const auto words = [](const std::string &s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ' ') {
        if (!cur.empty())
          out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty())
      out.push_back(cur);
    return out;
  };
  std::vector<BleuCase> cases;
  const auto add = [&](std::string name,
                       std::vector<std::pair<std::string, std::vector<std::string>>> pairs) {
    BleuCase c;
    c.name = std::move(name);
    for (auto &[h, rs] : pairs) {
      c.hypotheses.push_back(words(h));
      std::vector<Sentence> refs;
      for (const auto &r : rs)
        refs.push_back(words(r));
      c.references.push_back(refs);
    }
    cases.push_back(std::move(c));
  };
  add("identical", {{"what year did the war begin ?", {"what year did the war begin ?"}},
                    {"who designed the lombardi trophy ?", {"who designed the lombardi trophy ?"}}});
  add("cat-mat", {{"the cat sat on the mat", {"the cat sat on a mat"}}});
  add("no-shared-4gram", {{"a b c d e", {"a b c x d e"}}});
  add("disjoint", {{"one two three four", {"five six seven eight"}}});
  add("short-hyp-brevity", {{"the cat sat on", {"the cat sat on the mat today"}}});
  add("long-hyp", {{"the cat sat on the mat in the warm sun all day", {"the cat sat on the mat"}}});
  add("clipping", {{"the the the the the the the", {"the cat is on the mat"}}});
  add("multi-ref", {{"the cat is on the mat", {"there is a cat on the mat", "the cat is on the mat ."}}});
  add("closest-ref-tie", {{"a b c d e f", {"a b c d e", "a b c d e f g"}}});
  add("under-4-tokens", {{"who is he", {"who is he"}}});
  add("corpus-mix", {{"who is he", {"who is he"}},
                     {"what did the man build in 1847 ?", {"what did the man found in 1847 ?"}}});
  add("empty-hyp", {{"", {"a b c d"}}, {"a b c d", {"a b c d"}}});
  add("repeat-bigram", {{"of the of the of the", {"of the king of the hill"}}});
  add("long-question", {{"in what year did genghis khan begin a retaliatory attack on the tanguts ?",
                      {"when did genghis khan begin a retaliatory attack on the tanguts ?"}},
                     {"who designed the lombardi trophy ?", {"who designed the vince lombardi trophy ?"}}});

  Rng rng(12345);
  const std::vector<std::string> lexicon = {"what", "is", "the", "of", "a", "who",
                                            "when", "did", "in", "?", "city", "war"};
  while (cases.size() < 25) {
    BleuCase c;
    c.name = "random-" + std::to_string(cases.size());
    const std::size_t n = 1 + rng() % 6;
    for (std::size_t k = 0; k < n; ++k) {
      const auto sentence = [&](std::size_t len) {
        Sentence s;
        for (std::size_t i = 0; i < len; ++i)
          s.push_back(lexicon[rng() % lexicon.size()]);
        return s;
      };
      Sentence ref = sentence(4 + rng() % 8);
      Sentence hyp = ref;
      for (auto &w : hyp)
        if (rng() % 4 == 0)
          w = lexicon[rng() % lexicon.size()];
      if (rng() % 3 == 0)
        hyp.resize(std::max<std::size_t>(1, hyp.size() - rng() % 3));
      std::vector<Sentence> refs{ref};
      if (rng() % 2 == 0)
        refs.push_back(sentence(4 + rng() % 8));
      c.hypotheses.push_back(hyp);
      c.references.push_back(refs);
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

} // namespace nqg::testing
