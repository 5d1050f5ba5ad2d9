// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "relcache/error.hpp"
#include "relcache/feature.hpp"

namespace testutil {

template <typename Fn>
std::optional<relcache::ErrorKind> error_kind(Fn&& fn) {
  try {
    fn();
  } catch (const relcache::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline relcache::FeatureVec fv(std::vector<double> v) { return relcache::FeatureVec(std::move(v)); }

inline double max_rel_diff(const relcache::FeatureVec& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    num = std::max(num, std::fabs(a[i] - b[i]));
    den = std::max(den, std::fabs(b[i]));
  }
  return den > 0.0 ? num / den : num;
}

}  // namespace testutil

#define CHECK_ERROR(expr, kind_) \
  CHECK(testutil::error_kind([&] { (void)(expr); }) == std::optional(relcache::ErrorKind::kind_))
