// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "nqg/error.hpp"
#include "nqg/eval.hpp"
#include "nqg/tensor.hpp"

namespace nqg {

namespace {

constexpr const char *kHeader = "id,sentence,answer,question,score";

std::string join(const std::vector<std::string> &tokens) {
  std::string out;
  for (const auto &t : tokens) {
    if (!out.empty())
      out += ' ';
    out += t;
  }
  return out;
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + '"';
}

// Reads one CSV record, which may span lines inside quotes. Returns false
// at end of input.
bool read_record(std::istream &in, std::vector<std::string> &fields,
                 std::size_t &line_no, const std::string &source) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line))
    return false;
  ++line_no;
  const std::size_t start_line = line_no;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (!quoted)
        break;
      if (!std::getline(in, line))
        throw ParseError(source + ":" + std::to_string(start_line) +
                         ": unterminated quoted field");
      ++line_no;
      field += '\n';
      i = 0;
      continue;
    }
    const char c = line[i++];
    if (quoted) {
      if (c == '"') {
        if (i < line.size() && line[i] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return true;
}

} // namespace

std::vector<RatingRow> sample_for_rating(const std::vector<Triple> &inputs,
                                         const std::vector<std::string> &generated,
                                         std::size_t n, std::uint64_t seed) {
  if (inputs.size() != generated.size())
    throw AlignmentError("rating sample: " + std::to_string(inputs.size()) +
                         " inputs vs " + std::to_string(generated.size()) +
                         " generations");
  if (n > inputs.size())
    throw ContractError("cannot sample " + std::to_string(n) + " of " +
                        std::to_string(inputs.size()) + " outputs");
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<RatingRow> rows;
  rows.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    RatingRow r;
    r.id = i;
    r.sentence = join(inputs[i].sentence);
    r.answer = join(inputs[i].answer_tokens());
    r.question = generated[i];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_rating_sheet(std::ostream &out, const std::vector<RatingRow> &rows) {
  out << kHeader << '\n';
  for (const auto &r : rows) {
    out << r.id << ',' << csv_field(r.sentence) << ',' << csv_field(r.answer)
        << ',' << csv_field(r.question) << ',';
    if (r.score)
      out << *r.score;
    out << '\n';
  }
}

std::vector<RatingRow> read_rating_sheet(std::istream &in,
                                         const std::string &source) {
  std::vector<std::string> fields;
  std::size_t line_no = 0;
  if (!read_record(in, fields, line_no, source))
    throw FormatError(source + ": empty rating sheet");
  std::string header;
  for (std::size_t i = 0; i < fields.size(); ++i)
    header += (i ? "," : "") + fields[i];
  if (header != kHeader)
    throw FormatError(source + ":1: expected header '" + std::string(kHeader) + "'");

  std::vector<RatingRow> rows;
  while (read_record(in, fields, line_no, source)) {
    if (fields.size() == 1 && fields[0].empty())
      continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (fields.size() != 5)
      throw ParseError(where + ": expected 5 fields, got " +
                       std::to_string(fields.size()));
    RatingRow r;
    try {
      std::size_t used = 0;
      r.id = std::stoul(fields[0], &used);
      if (used != fields[0].size())
        throw std::invalid_argument("id");
    } catch (const std::exception &) {
      throw ParseError(where + ": bad id '" + fields[0] + "'");
    }
    r.sentence = fields[1];
    r.answer = fields[2];
    r.question = fields[3];
    if (!fields[4].empty()) {
      if (fields[4] != "1" && fields[4] != "2" && fields[4] != "3")
        throw ParseError(where + ": score must be 1, 2 or 3, got '" + fields[4] +
                         "'");
      r.score = fields[4][0] - '0';
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

RatingSummary aggregate_ratings(const std::vector<std::vector<RatingRow>> &sheets) {
  if (sheets.size() < 2)
    throw ContractError("need filled sheets from at least 2 raters, got " +
                        std::to_string(sheets.size()));
  std::map<std::size_t, std::vector<int>> by_id;
  for (std::size_t s = 0; s < sheets.size(); ++s) {
    for (const auto &r : sheets[s]) {
      if (!r.score)
        throw ContractError("sheet " + std::to_string(s + 1) + ": item " +
                            std::to_string(r.id) + " has no score");
      auto &scores = by_id[r.id];
      if (scores.size() != s)
        throw ContractError("sheet " + std::to_string(s + 1) + ": item " +
                            std::to_string(r.id) +
                            " is duplicated or missing from an earlier sheet");
      scores.push_back(*r.score);
    }
  }
  std::vector<std::vector<int>> scores;
  double total = 0;
  for (auto &[id, s] : by_id) {
    if (s.size() != sheets.size())
      throw ContractError("item " + std::to_string(id) + " rated by " +
                          std::to_string(s.size()) + " of " +
                          std::to_string(sheets.size()) + " raters");
    total += std::accumulate(s.begin(), s.end(), 0.0);
    scores.push_back(std::move(s));
  }
  RatingSummary out;
  out.items = scores.size();
  out.raters = sheets.size();
  out.average_score =
      total / static_cast<double>(out.items * out.raters);
  out.kappa = fleiss_kappa(RatingMatrix::from_scores(scores));
  return out;
}

} // namespace nqg
