// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace nqg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// NaN/Inf where finite values are required.
class NumericError : public Error {
public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
public:
  using Error::Error;
};

/// Index outside an embedding or tag table.
class LookupError : public Error {
public:
  using Error::Error;
};

/// Malformed JSON input; the message carries the JSON path.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Malformed line-oriented text or binary file.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Annotation columns disagree with sentence tokens.
class AlignmentError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Inconsistent or contradictory configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace nqg
