// SPDX-License-Identifier: Apache-2.0
#include "nqg/checkpoint.hpp"

#include <array>
#include <cstdint>
#include <fstream>
#include <set>
#include <utility>

#include "nqg/error.hpp"

namespace nqg {

namespace {

constexpr const char *kMagicLine = "NQG-CHECKPOINT 1";
constexpr std::uint8_t kTensorBlock = 0;
constexpr std::uint8_t kStringBlock = 1;

template <typename T> void put(std::ostream &out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) &
                                 0xffu);
  out.write(bytes.data(), bytes.size());
}

template <typename T> T get(std::istream &in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char *>(bytes.data()), bytes.size());
  if (!in)
    throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

void put_string(std::ostream &out, const std::string &s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream &in) {
  const auto n = get<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in)
    throw FormatError("checkpoint truncated");
  return s;
}

void put_strings(std::ostream &out, const std::string &name,
                 const std::vector<std::string> &items) {
  put_string(out, name);
  put<std::uint8_t>(out, kStringBlock);
  put<std::uint64_t>(out, items.size());
  for (const auto &s : items)
    put_string(out, s);
}

void put_tensor(std::ostream &out, const std::string &name, const Tensor &t) {
  put_string(out, name);
  put<std::uint8_t>(out, kTensorBlock);
  write_tensor(out, t);
}

} // namespace

void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path);
  out << kMagicLine << '\n';
  std::set<std::string> keys;
  for (const auto &[k, v] : ckpt.config.to_key_values()) {
    out << k << '=' << v << '\n';
    keys.insert(k);
  }
  for (const auto &[k, v] : ckpt.header) {
    if (keys.count(k) || k.find('=') != std::string::npos ||
        v.find('\n') != std::string::npos)
      throw ContractError("bad checkpoint header entry '" + k + "'");
    out << k << '=' << v << '\n';
  }
  out << '\n';

  std::uint32_t blocks = 3 + static_cast<std::uint32_t>(ckpt.tensors.size());
  ckpt.params.for_each(
      [&](const std::string &, const Tensor &) { ++blocks; });
  put<std::uint32_t>(out, blocks);
  put_strings(out, "vocab.words", ckpt.lexicon.words.tokens());
  put_strings(out, "vocab.pos", ckpt.lexicon.pos.tags());
  put_strings(out, "vocab.ner", ckpt.lexicon.ner.tags());
  ckpt.params.for_each([&](const std::string &name, const Tensor &t) {
    put_tensor(out, "param." + name, t);
  });
  for (const auto &[name, t] : ckpt.tensors)
    put_tensor(out, name, t);
  if (!out)
    throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagicLine)
    throw FormatError(path + ": not a checkpoint");
  std::map<std::string, std::string> kv;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      break;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }

  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_key_values(kv);
  std::set<std::string> config_keys;
  for (const auto &[k, v] : ckpt.config.to_key_values())
    config_keys.insert(k);
  for (const auto &[k, v] : kv)
    if (!config_keys.count(k))
      ckpt.header[k] = v;

  Rng scratch(0);
  ckpt.params = Parameters::initialize(ckpt.config, scratch);
  std::set<std::string> pending;
  std::as_const(ckpt.params).for_each(
      [&](const std::string &name, const Tensor &) { pending.insert(name); });

  const auto blocks = get<std::uint32_t>(in);
  bool have_words = false;
  for (std::uint32_t b = 0; b < blocks; ++b) {
    const std::string name = get_string(in);
    const auto kind = get<std::uint8_t>(in);
    if (kind == kStringBlock) {
      const auto n = get<std::uint64_t>(in);
      std::vector<std::string> items;
      items.reserve(n);
      for (std::uint64_t i = 0; i < n; ++i)
        items.push_back(get_string(in));
      if (name == "vocab.words") {
        ckpt.lexicon.words = Vocabulary::from_tokens(std::move(items));
        have_words = true;
      } else if (name == "vocab.pos") {
        ckpt.lexicon.pos = TagSet::from_tags(std::move(items));
      } else if (name == "vocab.ner") {
        ckpt.lexicon.ner = TagSet::from_tags(std::move(items));
      }
      continue;
    }
    if (kind != kTensorBlock)
      throw FormatError(path + ": unknown block kind in '" + name + "'");
    Tensor t = read_tensor(in);
    if (name.rfind("param.", 0) == 0) {
      const std::string pname = name.substr(6);
      Tensor *target = ckpt.params.find(pname);
      if (!target)
        throw FormatError(path + ": unexpected parameter '" + pname + "'");
      if (target->shape() != t.shape())
        throw FormatError(path + ": parameter '" + pname + "' has shape " +
                          shape_string(t.shape()) + ", config implies " +
                          shape_string(target->shape()));
      *target = std::move(t);
      pending.erase(pname);
    } else {
      ckpt.tensors[name] = std::move(t);
    }
  }
  if (!pending.empty())
    throw FormatError(path + ": missing parameter '" + *pending.begin() + "'");
  if (!have_words || ckpt.lexicon.words.size() != ckpt.config.vocab_size)
    throw FormatError(path + ": vocabulary does not match vocab_size");
  return ckpt;
}

} // namespace nqg
