// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace nqg {

struct SynthOptions {
  /// Number of question-answer pairs to emit (rounded up to whole sentences).
  std::size_t questions = 2000;
  std::uint64_t seed = 1;
  /// Size of each entity name pool. Larger pools make names rarer.
  std::size_t name_pool = 3000;
};

/**
 * SQuAD v1.1 shaped JSON built from templated encyclopedic sentences.
 * Each sentence carries several answerable spans with one question each,
 * and questions reuse rare names from their sentence.
 */
std::string synthesize_squad(const SynthOptions &options);

} // namespace nqg
