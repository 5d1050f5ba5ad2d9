// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "relcache/feature.hpp"

namespace relcache {

enum class Stream { Input, Output };

std::string_view to_string(Stream stream);

struct RecordKey {
  int t = 0;
  int module = 0;
  Stream stream = Stream::Input;
};

/// Per-(timestep, module, stream) feature snapshots of one sampling run.
/// Timesteps strictly decrease; every feature shares one shape.
class Trace {
 public:
  Trace() = default;
  Trace(int n_modules, Shape shape, std::vector<int> timesteps);

  void set(int t, int module, Stream stream, FeatureVec value);
  const FeatureVec& at(int t, int module, Stream stream) const;
  bool has(int t, int module, Stream stream) const;

  int n_modules() const noexcept { return n_modules_; }
  const Shape& shape() const noexcept { return shape_; }
  const std::vector<int>& timesteps() const noexcept { return timesteps_; }
  bool contains_timestep(int t) const;

  /// First absent record in (timestep, module, input/output) order.
  std::optional<RecordKey> first_missing() const;
  bool complete() const { return !first_missing().has_value(); }

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  std::size_t slot(int t, int module, Stream stream) const;

  int n_modules_ = 0;
  Shape shape_;
  std::vector<int> timesteps_;
  std::vector<std::optional<FeatureVec>> records_;
};

/// JSON-lines encoding: a header object on line 1, then one feature record
/// per line. Doubles are written in shortest round-trip form.
void trace_write(const Trace& trace, std::ostream& out);
void trace_write(const Trace& trace, const std::filesystem::path& path);

/// Throws FormatError on a malformed header, bad record or missing record
/// and IoError when the file cannot be opened.
Trace trace_read(std::istream& in);
Trace trace_read(const std::filesystem::path& path);

}  // namespace relcache
