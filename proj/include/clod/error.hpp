//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace clod {

/// Precondition violated by a caller-supplied argument.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed serialized data (bad magic, version, or layout).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A progressive stream ended inside a segment. `last_complete_width()` is
/// the widest network that can be rebuilt from the bytes seen so far, or 0
/// when even the base segment is incomplete.
class PartialStreamError : public std::runtime_error {
 public:
  PartialStreamError(const std::string& what, std::uint32_t last_complete_width)
      : std::runtime_error(what), last_complete_width_(last_complete_width) {}

  std::uint32_t last_complete_width() const noexcept { return last_complete_width_; }

 private:
  std::uint32_t last_complete_width_;
};

/// Training hit a non-finite loss or gradient.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] void throw_invalid(const std::string& what);

}  // namespace clod
