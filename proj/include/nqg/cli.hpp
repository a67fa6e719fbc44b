// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nqg::cli {

/// Exit statuses of the nqg tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Maps a library or parser exception to an exit status.
int exit_code_for(const std::exception &e);

/// Runs one command. `args` excludes the program name. Progress and
/// reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err);

std::string sha256_hex(std::string_view data);
/// Throws IoError when the file cannot be read.
std::string sha256_file(const std::string &path);

struct ManifestFile {
  std::string path;
  std::string sha256;
};

/**
 * Record of one command run, stored as JSON beside its outputs.
 *
 * `arguments` holds every option of the command with defaults filled in,
 * so replaying them reproduces the run. `resolved` holds derived settings
 * (model and training configuration, beam size).
 */
struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::vector<std::string>>> arguments;
  std::map<std::string, std::string> resolved;
  std::optional<std::uint64_t> seed;
  std::vector<ManifestFile> inputs;
  /// Paths relative to the manifest's directory.
  std::vector<ManifestFile> outputs;
  std::string timestamp;
};

void write_manifest(const std::string &path, const Manifest &manifest);
/// Throws ParseError on malformed JSON or missing fields.
Manifest read_manifest(const std::string &path);

} // namespace nqg::cli
