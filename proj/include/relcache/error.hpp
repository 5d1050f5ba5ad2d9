// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace relcache {

enum class ErrorKind {
  InvalidArgument,
  NonFinite,
  ShapeMismatch,
  ZeroReference,
  InsufficientHistory,
  NonUniformSpacing,
  InvalidConfig,
  UndefinedRatio,
  UndefinedDirection,
  SingularFit,
  InsufficientData,
  BisectionFailed,
  IoError,
  FormatError,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and the CLI's
// exit-code mapping) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace relcache
