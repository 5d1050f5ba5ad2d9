// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

// Parsing for the "name:key=value,key=value" strings used by policy and
// scheduler specs.

#pragma once

#include <map>
#include <string>
#include <string_view>

namespace relcache::detail {

struct SpecString {
  std::string name;
  std::map<std::string, std::string> params;

  bool has(const std::string& key) const { return params.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  void require_only(std::initializer_list<std::string_view> allowed) const;
};

SpecString parse_spec_string(std::string_view text);

int parse_int(std::string_view text, std::string_view what);
double parse_double(std::string_view text, std::string_view what);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

}  // namespace relcache::detail
