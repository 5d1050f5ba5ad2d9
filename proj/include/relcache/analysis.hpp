// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "relcache/forecast.hpp"
#include "relcache/metrics.hpp"
#include "relcache/scheduler.hpp"
#include "relcache/trace.hpp"

namespace relcache {

/// Ridge added to the normal equations of every least-squares fit.
inline constexpr double kRidgeGuard = 1e-8;

/// Min-max normalization to [0, 1]; an all-equal series maps to zeros.
std::vector<double> min_max_normalize(std::vector<double> series);

/// ||F(t_{i+1}) - F(t_i)||_2 over consecutive trace timesteps, min-max
/// normalized.
std::vector<double> consecutive_l2_series(const Trace& trace, int module, Stream stream);
std::vector<double> consecutive_l2_raw(const Trace& trace, int module, Stream stream);

/// s_k(t-k) = ||O(t-k) - O(t)||_2 / ||I(t-k) - I(t)||_2 for k = 1..k_max.
std::vector<double> s_ratio_values(const Trace& trace, int module, int t, int k_max);

/// Relative standard deviation (population std / mean) of s_ratio_values.
double s_ratio_rsd(const Trace& trace, int module, int t, int k_max);

struct AnchoredValue {
  int t = 0;
  double value = 0.0;
};

/// s_ratio_rsd at every anchor t the trace covers down to t - k_max.
std::vector<AnchoredValue> s_ratio_rsd_series(const Trace& trace, int module, int k_max);

/// Mean R^2 of joint affine least-squares fits from module input to module
/// output over every window of `window` consecutive timesteps.
double linearity_r2(const Trace& trace, int module, int window = 5);

/// Same fit with the scalar timestep as the regressor.
double timestep_linearity_r2(const Trace& trace, int module, int window = 5);

/// Mean pairwise cosine similarity among the differences F(t-k) - F(t),
/// k = 1..k_max, averaged over all anchors t.
double directional_consistency(const Trace& trace, int module, Stream stream, int k_max = 4);

/// Mean interval between the i-th and (i+1)-th full computation, averaged
/// over the runs long enough to have that pair.
std::vector<double> interval_profile(std::span<const std::vector<int>> logs);

struct ModuleDiagnostics {
  int module = 0;
  std::optional<double> rsd_mean;
  std::optional<double> r2_input;
  std::optional<double> r2_timestep;
  std::optional<double> consistency_input;
  std::optional<double> consistency_output;
  std::vector<double> l2_input;
  std::vector<double> l2_output;
};

struct MetricsReport {
  MetricsLog log;
  std::vector<int> intervals;
  std::vector<ModuleDiagnostics> modules;

  int nfc() const { return log.nfc(); }
};

struct AnalysisOptions {
  int window = 5;
  int rsd_k_max = 9;
  int consistency_k_max = 4;
};

/// Runs every diagnostic for every module. Diagnostics that are undefined
/// for a module (too short, zero differences) are left empty.
MetricsReport analyze_trace(const Trace& trace, const AnalysisOptions& options = {});

/// Replays caching decisions and predictions against the recorded ground
/// truth: full computes load the recorded features into the caches and
/// predicted steps are scored against the recorded outputs.
MetricsReport replay_policy(const Trace& trace, const PolicySpec& policy,
                            const SchedulerSpec& scheduler);

/// JSON summary: NFC, full-compute log, intervals and per-module tables.
void write_report_json(const MetricsReport& report, std::ostream& out);

}  // namespace relcache
