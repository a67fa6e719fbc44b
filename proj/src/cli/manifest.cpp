// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

#include <json.hpp>

#include "nqg/cli.hpp"
#include "nqg/error.hpp"

namespace nqg::cli {

namespace {

using Json = nlohmann::ordered_json;

Json files_to_json(const std::vector<ManifestFile> &files) {
  Json a = Json::array();
  for (const auto &f : files)
    a.push_back({{"path", f.path}, {"sha256", f.sha256}});
  return a;
}

std::vector<ManifestFile> files_from_json(const Json &a) {
  std::vector<ManifestFile> files;
  for (const auto &f : a)
    files.push_back({f.at("path").get<std::string>(),
                     f.at("sha256").get<std::string>()});
  return files;
}

} // namespace

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(),
                 nullptr) != 1)
    throw Error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 15];
  }
  return hex;
}

std::string sha256_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path);
  const std::string data((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return sha256_hex(data);
}

void write_manifest(const std::string &path, const Manifest &m) {
  Json args = Json::object();
  for (const auto &[name, values] : m.arguments)
    args[name] = values;
  Json j = {{"command", m.command},
            {"arguments", args},
            {"resolved", m.resolved},
            {"seed", m.seed ? Json(*m.seed) : Json(nullptr)},
            {"inputs", files_to_json(m.inputs)},
            {"outputs", files_to_json(m.outputs)},
            {"timestamp", m.timestamp}};
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out)
    throw IoError("write failed: " + path);
}

Manifest read_manifest(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path);
  try {
    const Json j = Json::parse(in);
    Manifest m;
    m.command = j.at("command").get<std::string>();
    for (const auto &[name, values] : j.at("arguments").items())
      m.arguments.emplace_back(name, values.get<std::vector<std::string>>());
    m.resolved = j.at("resolved").get<std::map<std::string, std::string>>();
    if (!j.at("seed").is_null())
      m.seed = j.at("seed").get<std::uint64_t>();
    m.inputs = files_from_json(j.at("inputs"));
    m.outputs = files_from_json(j.at("outputs"));
    m.timestamp = j.at("timestamp").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(path + ": " + e.what());
  }
}

} // namespace nqg::cli
