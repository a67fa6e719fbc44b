// SPDX-License-Identifier: Apache-2.0
#include "nqg/triple.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nqg/error.hpp"
#include "nqg/text.hpp"

namespace nqg {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> string_list(const nlohmann::json &obj,
                                     const char *key, const std::string &where,
                                     bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required)
      throw ParseError(where + ": missing field '" + key + "'");
    return {};
  }
  if (!it->is_array())
    throw ParseError(where + "." + key + ": expected an array");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (std::size_t i = 0; i < it->size(); ++i) {
    const auto &v = (*it)[i];
    if (!v.is_string())
      throw ParseError(where + "." + key + "[" + std::to_string(i) +
                       "]: expected a string");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::size_t index_field(const nlohmann::json &obj, const char *key,
                        const std::string &where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_unsigned())
    throw ParseError(where + "." + key + ": expected a non-negative integer");
  return it->get<std::size_t>();
}

} // namespace

void Triple::validate() const {
  if (!(answer_start < answer_end && answer_end <= sentence.size()))
    throw ContractError("answer span [" + std::to_string(answer_start) + ", " +
                        std::to_string(answer_end) +
                        ") invalid for sentence of " +
                        std::to_string(sentence.size()) + " tokens");
  for (const auto *tags : {&pos, &ner, &casing})
    if (!tags->empty() && tags->size() != sentence.size())
      throw ContractError("annotation length " + std::to_string(tags->size()) +
                          " differs from sentence length " +
                          std::to_string(sentence.size()));
}

std::vector<std::string> Triple::answer_tokens() const {
  return {sentence.begin() + static_cast<std::ptrdiff_t>(answer_start),
          sentence.begin() + static_cast<std::ptrdiff_t>(answer_end)};
}

void write_triples(std::ostream &out, const std::vector<Triple> &triples) {
  for (const auto &t : triples) {
    ordered_json j;
    j["sentence"] = t.sentence;
    j["answer_start"] = t.answer_start;
    j["answer_end"] = t.answer_end;
    j["question"] = t.question;
    j["pos"] = t.pos;
    j["ner"] = t.ner;
    j["case"] = t.casing;
    out << j.dump() << '\n';
  }
}

std::vector<Triple> read_triples(std::istream &in, const std::string &source) {
  std::vector<Triple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    const std::string where = source + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!j.is_object())
      throw ParseError(where + ": expected a JSON object");
    Triple t;
    t.sentence = string_list(j, "sentence", where, true);
    t.answer_start = index_field(j, "answer_start", where);
    t.answer_end = index_field(j, "answer_end", where);
    t.question = string_list(j, "question", where, false);
    t.pos = string_list(j, "pos", where, false);
    t.ner = string_list(j, "ner", where, false);
    t.casing = string_list(j, "case", where, false);
    try {
      t.validate();
    } catch (const ContractError &e) {
      throw ParseError(where + ": " + e.what());
    }
    triples.push_back(std::move(t));
  }
  return triples;
}

std::vector<Triple> read_triples_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path);
  return read_triples(in, path);
}

void write_triples_file(const std::string &path,
                        const std::vector<Triple> &triples) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path);
  write_triples(out, triples);
}

Annotator Annotator::fallback() { return Annotator{}; }

Annotator Annotator::from_conll(std::istream &in, const std::string &source) {
  Annotator a;
  a.fallback_ = false;
  a.source_ = source;
  std::string line;
  std::size_t line_no = 0;
  Block current;
  auto flush = [&] {
    if (!current.lines.empty())
      a.blocks_.push_back(std::move(current));
    current = Block{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    std::istringstream cols(line);
    Line l;
    if (!std::getline(cols, l.token, '\t') || !std::getline(cols, l.pos, '\t') ||
        !std::getline(cols, l.ner, '\t') || l.token.empty())
      throw FormatError(source + ":" + std::to_string(line_no) +
                        ": expected token<TAB>pos<TAB>ner");
    if (current.lines.empty())
      current.first_line = line_no;
    current.lines.push_back(std::move(l));
  }
  flush();
  return a;
}

Annotator Annotator::from_conll_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path);
  return from_conll(in, path);
}

void Annotator::apply(std::vector<Triple> &triples) const {
  if (fallback_) {
    for (auto &t : triples) {
      t.pos.assign(t.sentence.size(), "X");
      t.ner.assign(t.sentence.size(), "O");
    }
    return;
  }
  if (blocks_.size() != triples.size())
    throw AlignmentError(source_ + ": " + std::to_string(blocks_.size()) +
                         " annotation blocks for " +
                         std::to_string(triples.size()) + " sentences");
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Block &b = blocks_[i];
    Triple &t = triples[i];
    if (b.lines.size() != t.sentence.size())
      throw AlignmentError(source_ + ":" + std::to_string(b.first_line) +
                           ": block has " + std::to_string(b.lines.size()) +
                           " tokens, sentence has " +
                           std::to_string(t.sentence.size()));
    for (std::size_t k = 0; k < b.lines.size(); ++k)
      if (to_lower(b.lines[k].token) != t.sentence[k])
        throw AlignmentError(source_ + ":" +
                             std::to_string(b.first_line + k) + ": token '" +
                             b.lines[k].token + "' does not match '" +
                             t.sentence[k] + "'");
  }
  for (std::size_t i = 0; i < triples.size(); ++i) {
    Triple &t = triples[i];
    t.pos.clear();
    t.ner.clear();
    for (const auto &l : blocks_[i].lines) {
      t.pos.push_back(l.pos);
      t.ner.push_back(l.ner);
    }
  }
}

void annotate(std::vector<Triple> &triples, const Annotator &annotator) {
  annotator.apply(triples);
}

std::pair<std::vector<Triple>, std::vector<Triple>>
split_dev_test(const std::vector<Triple> &dev, std::uint64_t seed) {
  if (dev.size() < 2)
    throw ContractError("split_dev_test: need at least 2 triples");
  std::vector<std::size_t> order(dev.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t half = (dev.size() + 1) / 2;
  std::pair<std::vector<Triple>, std::vector<Triple>> out;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < half ? out.first : out.second).push_back(dev[order[i]]);
  return out;
}

std::size_t load_pretrained_embeddings(std::istream &in,
                                       const Vocabulary &vocab,
                                       Tensor &matrix,
                                       const std::string &source) {
  if (matrix.rank() != 2 || matrix.rows() != vocab.size())
    throw DimensionError("embedding matrix " + shape_string(matrix.shape()) +
                         " does not match vocabulary of " +
                         std::to_string(vocab.size()));
  const std::size_t width = matrix.cols();
  std::set<std::size_t> covered;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token))
      continue;
    values.clear();
    std::string field;
    while (fields >> field) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(field, &used));
        if (used != field.size())
          throw std::invalid_argument(field);
      } catch (const std::exception &) {
        throw FormatError(source + ":" + std::to_string(line_no) +
                          ": bad number '" + field + "'");
      }
    }
    if (values.size() != width)
      throw FormatError(source + ":" + std::to_string(line_no) + ": width " +
                        std::to_string(values.size()) + ", expected " +
                        std::to_string(width));
    if (!vocab.contains(token))
      continue;
    const std::size_t id = vocab.id(token);
    if (id < Vocabulary::kSpecials)
      continue;
    std::copy(values.begin(), values.end(), matrix.row(id).begin());
    covered.insert(id);
  }
  return covered.size();
}

std::size_t pretrained_width(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string token, field;
    if (!(fields >> token))
      continue;
    std::size_t n = 0;
    while (fields >> field)
      ++n;
    return n;
  }
  return 0;
}

} // namespace nqg
