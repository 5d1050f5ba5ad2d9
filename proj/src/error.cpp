// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcache/error.hpp"

namespace relcache {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ZeroReference: return "ZeroReference";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::NonUniformSpacing: return "NonUniformSpacing";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::UndefinedRatio: return "UndefinedRatio";
    case ErrorKind::UndefinedDirection: return "UndefinedDirection";
    case ErrorKind::SingularFit: return "SingularFit";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::BisectionFailed: return "BisectionFailed";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::FormatError: return "FormatError";
  }
  return "Unknown";
}

}  // namespace relcache
