// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "nqg/encoding.hpp"
#include "nqg/model.hpp"

namespace nqg {

/**
 * A model bundle on disk.
 *
 * Layout: the line "NQG-CHECKPOINT 1", ModelConfig as key=value lines, any
 * extra key=value lines, a blank line, then a u32 block count followed by
 * named blocks. Tensor blocks use the tensor binary format; string-list
 * blocks hold the vocabularies. Integers are little-endian.
 */
struct Checkpoint {
  ModelConfig config;
  Lexicon lexicon;
  Parameters params;
  /// Extra header entries (training state); keys must not clash with
  /// ModelConfig keys.
  std::map<std::string, std::string> header;
  /// Extra tensors such as optimizer moments.
  std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::string &path);

} // namespace nqg
