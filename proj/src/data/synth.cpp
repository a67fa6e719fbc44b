// SPDX-License-Identifier: Apache-2.0
#include "nqg/synth.hpp"

#include <array>
#include <json.hpp>
#include <random>
#include <set>
#include <string_view>
#include <vector>

#include "nqg/tensor.hpp"

namespace nqg {

namespace {

constexpr std::array<std::string_view, 18> kOnsets = {
    "b", "d", "k", "l", "m", "n", "r", "s", "t", "v", "z", "br", "dr", "gr",
    "kr", "st", "th", "vel"};
constexpr std::array<std::string_view, 6> kVowels = {"a", "e", "i", "o", "u", "ae"};
constexpr std::array<std::string_view, 9> kCodas = {"", "n", "r", "th", "l",
                                                    "s", "m", "x", "nd"};

struct Verb {
  std::string_view past, base;
  std::array<std::string_view, 3> kinds;
};
constexpr std::array<Verb, 4> kVerbs = {{
    {"founded", "found", {"Institute", "Society", "Company"}},
    {"built", "build", {"Bridge", "Tower", "Museum"}},
    {"designed", "design", {"Cathedral", "Library", "Stadium"}},
    {"opened", "open", {"Hospital", "School", "Theater"}},
}};
constexpr std::array<std::string_view, 4> kReasons = {"war", "flood", "famine",
                                                      "drought"};

struct Qa {
  std::string question;
  std::string answer;
  std::size_t start; // byte offset inside the sentence
};

struct Sentence {
  std::string text;
  std::vector<Qa> qas;
};

class Generator {
public:
  Generator(const SynthOptions &o) : rng_(o.seed) {
    people_ = pool(o.name_pool, 2);
    places_ = pool(o.name_pool, 1);
    orgs_ = pool(o.name_pool, 1);
  }

  Sentence sentence() {
    switch (pick(4)) {
    case 0:
      return creation();
    case 1:
      return birth();
    case 2:
      return location();
    default:
      return move();
    }
  }

  std::size_t pick(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

private:
  std::string syllable() {
    std::string s(kOnsets[pick(kOnsets.size())]);
    s += kVowels[pick(kVowels.size())];
    s += kCodas[pick(kCodas.size())];
    return s;
  }

  std::string word() {
    std::string w = syllable() + syllable();
    if (pick(3) == 0)
      w += syllable();
    w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
  }

  std::vector<std::string> pool(std::size_t n, std::size_t words) {
    std::set<std::string> seen;
    std::vector<std::string> out;
    while (out.size() < n) {
      std::string name = word();
      for (std::size_t i = 1; i < words; ++i)
        name += " " + word();
      if (seen.insert(name).second)
        out.push_back(name);
    }
    return out;
  }

  const std::string &any(const std::vector<std::string> &v) {
    return v[pick(v.size())];
  }

  std::string year() { return std::to_string(1500 + pick(500)); }

  // Appends `piece` to `text` and returns the offset it starts at.
  static std::size_t put(std::string &text, std::string_view piece) {
    const std::size_t at = text.size();
    text += piece;
    return at;
  }

  Sentence creation() {
    const Verb &v = kVerbs[pick(kVerbs.size())];
    const std::string p = any(people_), l = any(places_), y = year();
    const std::string o = any(orgs_) + " " + std::string(v.kinds[pick(3)]);
    Sentence s;
    put(s.text, "In ");
    const auto ay = put(s.text, y);
    put(s.text, ", ");
    const auto ap = put(s.text, p);
    put(s.text, " " + std::string(v.past) + " the ");
    const auto ao = put(s.text, o);
    put(s.text, " in ");
    const auto al = put(s.text, l);
    put(s.text, ".");
    const std::string base(v.base), past(v.past);
    s.qas.push_back({(pick(2) ? "When did " : "In what year did ") + p + " " +
                         base + " the " + o + "?",
                     y, ay});
    s.qas.push_back({"Who " + past + " the " + o + " in " + l + "?", p, ap});
    s.qas.push_back({"Where did " + p + " " + base + " the " + o + "?", l, al});
    s.qas.push_back({"What did " + p + " " + base + " in " + y + "?", o, ao});
    return s;
  }

  Sentence birth() {
    const std::string p = any(people_), l = any(places_), y = year();
    Sentence s;
    const auto ap = put(s.text, p);
    put(s.text, " was born in ");
    const auto al = put(s.text, l);
    put(s.text, " in ");
    const auto ay = put(s.text, y);
    put(s.text, ".");
    s.qas.push_back({"When was " + p + " born?", y, ay});
    s.qas.push_back({(pick(2) ? "Where was " : "In what city was ") + p +
                         " born?",
                     l, al});
    s.qas.push_back({"Who was born in " + l + " in " + y + "?", p, ap});
    return s;
  }

  Sentence location() {
    const std::string o = any(orgs_) + " " +
                          std::string(kVerbs[pick(kVerbs.size())].kinds[pick(3)]);
    const std::string l = any(places_);
    const std::string n = std::to_string(20 + pick(900));
    Sentence s;
    put(s.text, "The ");
    const auto ao = put(s.text, o);
    put(s.text, " is located in ");
    const auto al = put(s.text, l);
    put(s.text, " and has ");
    const auto an = put(s.text, n);
    put(s.text, " members.");
    s.qas.push_back({"Where is the " + o + " located?", l, al});
    s.qas.push_back({"How many members does the " + o + " have?", n, an});
    s.qas.push_back({"Which organization is located in " + l + "?", o, ao});
    return s;
  }

  Sentence move() {
    const std::string p = any(people_), l = any(places_);
    const std::string reason(kReasons[pick(kReasons.size())]);
    Sentence s;
    const auto ap = put(s.text, p);
    put(s.text, " moved to ");
    const auto al = put(s.text, l);
    put(s.text, " because of the ");
    const auto ar = put(s.text, reason);
    put(s.text, ".");
    s.qas.push_back({"Why did " + p + " move to " + l + "?", reason, ar});
    s.qas.push_back({"Where did " + p + " move?", l, al});
    s.qas.push_back({"Who moved to " + l + " because of the " + reason + "?", p,
                     ap});
    return s;
  }

  Rng rng_;
  std::vector<std::string> people_, places_, orgs_;
};

} // namespace

std::string synthesize_squad(const SynthOptions &options) {
  Generator gen(options);
  nlohmann::ordered_json data = nlohmann::ordered_json::array();
  std::size_t emitted = 0;
  std::size_t article = 0;
  while (emitted < options.questions) {
    nlohmann::ordered_json paragraphs = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < 3 && emitted < options.questions; ++p) {
      std::string context;
      nlohmann::ordered_json qas = nlohmann::ordered_json::array();
      const std::size_t sentences = 2 + gen.pick(3);
      for (std::size_t k = 0; k < sentences && emitted < options.questions; ++k) {
        const Sentence s = gen.sentence();
        if (!context.empty())
          context += ' ';
        const std::size_t base = context.size();
        context += s.text;
        for (const Qa &qa : s.qas) {
          nlohmann::ordered_json answer;
          answer["text"] = qa.answer;
          answer["answer_start"] = base + qa.start;
          nlohmann::ordered_json item;
          item["id"] = "syn" + std::to_string(emitted);
          item["question"] = qa.question;
          item["answers"] = nlohmann::ordered_json::array({answer});
          qas.push_back(std::move(item));
          ++emitted;
        }
      }
      nlohmann::ordered_json para;
      para["context"] = context;
      para["qas"] = std::move(qas);
      paragraphs.push_back(std::move(para));
    }
    nlohmann::ordered_json entry;
    entry["title"] = "Article_" + std::to_string(article++);
    entry["paragraphs"] = std::move(paragraphs);
    data.push_back(std::move(entry));
  }
  nlohmann::ordered_json root;
  root["version"] = "1.1";
  root["data"] = std::move(data);
  return root.dump();
}

} // namespace nqg
