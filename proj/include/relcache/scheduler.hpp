// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "relcache/feature.hpp"
#include "relcache/forecast.hpp"

namespace relcache {

struct FixedInterval {
  int interval = 4;
};

struct InputDistance {
  double delta = 0.1;
};

enum class RcsScope { FirstModule, AllModules };

struct Rcs {
  double tau = 0.1;
  RcsScope scope = RcsScope::FirstModule;
};

struct SchedulerSpec {
  std::variant<FixedInterval, InputDistance, Rcs> kind = FixedInterval{};

  static SchedulerSpec fixed(int interval) { return {FixedInterval{interval}}; }
  static SchedulerSpec distance(double delta) { return {InputDistance{delta}}; }
  static SchedulerSpec rcs(double tau, RcsScope scope = RcsScope::FirstModule) {
    return {Rcs{tau, scope}};
  }

  /// "fixed:N=<int>", "distance:delta=<float>",
  /// "rcs:tau=<float>[,scope=first|all]".
  static SchedulerSpec parse(std::string_view text);
  std::string to_string() const;
  void validate() const;

  /// True when a decision needs the inputs of every module, not just the first.
  bool needs_all_inputs() const;
};

enum class StepAction { FullCompute, Predict };

std::string_view to_string(StepAction action);

struct StepDecision {
  StepAction action = StepAction::FullCompute;
  /// Quantity compared against the threshold (0 during warmup).
  double trigger_value = 0.0;
  bool warmup = false;
};

struct SchedulerState {
  double accumulated_error = 0.0;
  int steps_since_full = 0;
  std::vector<int> full_compute_log;
  int warmup_remaining = 0;

  static SchedulerState with_warmup(int warmup) {
    SchedulerState s;
    s.warmup_remaining = warmup;
    return s;
  }
};

/// Warmup length for an order-m policy: the first m+1 steps always run the
/// full computation so that order-m extrapolation has enough samples.
inline int warmup_steps(int order) { return order + 1; }

/// Taylor prediction of a module input at target_t from the most recent
/// min(m+1, available) cached inputs.
FeatureVec predict_input(const ModuleCache& cache, int target_t, int order);

/// Decides between full computation and prediction for the step at t.
///
/// `observed_inputs` holds the freshly computed inputs for the scoped modules
/// (index-aligned with `caches`): only the first entry is read unless the
/// spec is RCS with AllModules scope. On FullCompute the accumulated error
/// and the step counter reset and t is appended to the log. Fixed intervals
/// also close on the final step (t == 1) so that the tail of the run ends on
/// a full computation.
StepDecision observe_and_decide(SchedulerState& state, const SchedulerSpec& spec,
                                std::span<const FeatureVec> observed_inputs,
                                std::span<const ModuleCache> caches, int t,
                                int order);

/// Number of full computations recorded so far (warmup included).
int nfc(const SchedulerState& state);

}  // namespace relcache
