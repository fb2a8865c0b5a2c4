// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gpsosc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coordinate or numeric value outside its valid domain.
class InputDomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed geohash or textual value.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Timestamps out of order where the caller promised canonical order.
class OrderingError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Fatal file I/O problem.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A synthetic scenario could not be realized as requested.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// A single input record could not be parsed. Carries the 1-based line number.
class RecordError : public Error {
 public:
  RecordError(std::uint64_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line), reason_(what) {}

  std::uint64_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::uint64_t line_;
  std::string reason_;
};

}  // namespace gpsosc
