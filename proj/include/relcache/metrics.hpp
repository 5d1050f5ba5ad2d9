// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "relcache/feature.hpp"
#include "relcache/scheduler.hpp"

namespace relcache {

struct StepMetrics {
  int t = 0;
  StepAction action = StepAction::FullCompute;
  double trigger_value = 0.0;
  bool warmup = false;
  /// Relative L1 error of the first module's input prediction (post-warmup).
  std::optional<double> eps_in;
  /// Relative L1 output error per module; empty when no ground truth was
  /// available, zeros on full-compute steps.
  std::vector<double> eps_out;
  /// Predicted module outputs, kept only when requested.
  std::vector<FeatureVec> predictions;

  std::optional<double> eps_out_mean() const;
};

struct MetricsLog {
  std::vector<StepMetrics> steps;
  std::vector<int> full_compute_log;

  int nfc() const { return static_cast<int>(full_compute_log.size()); }
  /// Means over predicted steps; 0 when nothing was predicted.
  double mean_eps_out() const;
  double mean_eps_in() const;
};

/// One row per step: t,decision,trigger_value,eps_in,eps_out_mean. Missing
/// values are written as empty fields.
void write_metrics_csv(const MetricsLog& log, std::ostream& out);

/// Intervals between successive full computes, e.g. [50,46,44] -> [4,2].
std::vector<int> full_compute_intervals(const std::vector<int>& log);

}  // namespace relcache
