// SPDX-License-Identifier: Apache-2.0
#include "nqg/squad.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nqg/error.hpp"
#include "nqg/text.hpp"

namespace nqg {

namespace {

using json = nlohmann::json;

const json &member(const json &obj, const char *key, const std::string &path,
                   json::value_t type) {
  if (!obj.is_object())
    throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError(path + "." + key + ": missing");
  if (it->type() != type &&
      !(type == json::value_t::number_unsigned && it->is_number_integer()))
    throw ParseError(path + "." + key + ": wrong type");
  return *it;
}

void extract_qa(const std::string &context,
                const std::vector<TextRange> &sentences, const json &qa,
                const std::string &path, Extraction &out) {
  const std::string id =
      qa.contains("id") && qa["id"].is_string() ? qa["id"].get<std::string>()
                                                : path;
  const auto &question = member(qa, "question", path, json::value_t::string);
  const auto &answers = member(qa, "answers", path, json::value_t::array);
  if (answers.empty()) {
    out.skipped.push_back({id, "no-answer"});
    return;
  }
  const std::string apath = path + ".answers[0]";
  const auto &answer = answers[0];
  const auto &text = member(answer, "text", apath, json::value_t::string)
                         .get_ref<const std::string &>();
  const auto start_char =
      member(answer, "answer_start", apath, json::value_t::number_unsigned)
          .get<long long>();
  if (start_char < 0 || text.empty()) {
    out.skipped.push_back({id, "offset-mismatch"});
    return;
  }
  const std::size_t a0 =
      utf8_byte_offset(context, static_cast<std::size_t>(start_char));
  if (a0 == std::string::npos || context.compare(a0, text.size(), text) != 0) {
    out.skipped.push_back({id, "offset-mismatch"});
    return;
  }
  const std::size_t a1 = a0 + text.size();

  std::size_t first = sentences.size(), last = sentences.size();
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (first == sentences.size() && sentences[s].end > a0)
      first = s;
    if (sentences[s].begin < a1)
      last = s;
  }
  if (first == sentences.size() || last == sentences.size() || first > last) {
    out.skipped.push_back({id, "offset-mismatch"});
    return;
  }
  if (first != last) {
    out.skipped.push_back({id, "cross-sentence"});
    return;
  }
  const TextRange range = sentences[first];
  const auto tokens = tokenize(
      std::string_view(context).substr(range.begin, range.end - range.begin),
      range.begin);

  std::size_t span_start = tokens.size(), span_end = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i].begin < a1 && tokens[i].end > a0) {
      span_start = std::min(span_start, i);
      span_end = i + 1;
    }
  if (span_start >= span_end) {
    out.skipped.push_back({id, "no-token-overlap"});
    return;
  }

  Triple t;
  for (const auto &tok : tokens) {
    t.casing.emplace_back(case_name(case_feature(tok.text)));
    t.sentence.push_back(to_lower(tok.text));
  }
  t.answer_start = span_start;
  t.answer_end = span_end;
  for (const auto &w : tokenize_words(question.get_ref<const std::string &>()))
    t.question.push_back(to_lower(w));
  if (t.question.empty()) {
    out.skipped.push_back({id, "empty-question"});
    return;
  }
  out.triples.push_back(std::move(t));
}

} // namespace

Extraction extract_triples(const std::string &squad_json) {
  json root;
  try {
    root = json::parse(squad_json);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("$: ") + e.what());
  }
  Extraction out;
  const auto &data = member(root, "data", "$", json::value_t::array);
  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string apath = "$.data[" + std::to_string(a) + "]";
    const auto &paragraphs =
        member(data[a], "paragraphs", apath, json::value_t::array);
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string ppath =
          apath + ".paragraphs[" + std::to_string(p) + "]";
      const auto &context =
          member(paragraphs[p], "context", ppath, json::value_t::string)
              .get_ref<const std::string &>();
      const auto &qas = member(paragraphs[p], "qas", ppath, json::value_t::array);
      const auto sentences = split_sentences(context);
      for (std::size_t q = 0; q < qas.size(); ++q)
        extract_qa(context, sentences, qas[q],
                   ppath + ".qas[" + std::to_string(q) + "]", out);
    }
  }
  return out;
}

Extraction extract_triples_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return extract_triples(buf.str());
  } catch (const ParseError &e) {
    throw ParseError(path + ": " + e.what());
  }
}

} // namespace nqg
