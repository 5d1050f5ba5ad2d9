// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "spec_string.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "relcache/error.hpp"

namespace relcache::detail {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

const std::string& SpecString::get(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) {
    throw Error(ErrorKind::InvalidConfig,
                "'" + name + "' requires parameter '" + key + "'");
  }
  return it->second;
}

void SpecString::require_only(
    std::initializer_list<std::string_view> allowed) const {
  for (const auto& [key, value] : params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::InvalidConfig,
                  "unknown parameter '" + key + "' for '" + name + "'");
    }
  }
}

SpecString parse_spec_string(std::string_view text) {
  SpecString out;
  const auto colon = text.find(':');
  out.name = trim(text.substr(0, colon));
  if (out.name.empty()) {
    throw Error(ErrorKind::InvalidConfig, "empty spec string");
  }
  if (colon == std::string_view::npos) return out;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::InvalidConfig,
                  "expected key=value in '" + std::string(text) + "'");
    }
    out.params[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  const auto s = trim(text);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::InvalidConfig,
                "invalid integer for " + std::string(what) + ": '" + s + "'");
  }
  return value;
}

double parse_double(std::string_view text, std::string_view what) {
  const auto s = trim(text);
  if (s == "inf" || s == "+inf" || s == "infinity") {
    return std::numeric_limits<double>::infinity();
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || std::isnan(value)) {
    throw Error(ErrorKind::InvalidConfig,
                "invalid number for " + std::string(what) + ": '" + s + "'");
  }
  return value;
}

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace relcache::detail
