// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "relcache/feature.hpp"

namespace relcache {

enum class PolicyKind { DirectReuse, LinearW, Taylor, Rfe };

/// Extrapolation polynomial used by the Taylor and RFE policies.
///   Newton: interpolating polynomial through the cached samples (exact for
///           polynomial trajectories, handles non-uniform spacing).
///   Series: truncated k^i/i! expansion with finite-difference derivatives.
enum class ExtrapolationForm { Newton, Series };

/// w(t) for weighted linear extrapolation: a constant, or a ramp that rises
/// linearly from 0 at t = 0 to 1 at t = T.
struct WeightSchedule {
  enum class Kind { Constant, LinearRamp };
  Kind kind = Kind::Constant;
  double value = 1.0;

  double at(int t, int total_steps) const;
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::Taylor;
  int order = 1;
  WeightSchedule weight;
  ExtrapolationForm form = ExtrapolationForm::Newton;

  static PolicySpec reuse();
  static PolicySpec linear(double w);
  static PolicySpec linear_ramp();
  static PolicySpec taylor(int m, ExtrapolationForm form = ExtrapolationForm::Newton);
  static PolicySpec rfe(int m, ExtrapolationForm form = ExtrapolationForm::Newton);

  /// Accepts "reuse", "linear:w=<c>", "linear:w=ramp", "taylor:m=<int>",
  /// "rfe:m=<int>"; taylor/rfe also take ",form=newton|series".
  static PolicySpec parse(std::string_view text);
  std::string to_string() const;

  /// Order of the cached histories: m for Taylor/RFE, 1 otherwise (linear
  /// extrapolation and the scheduler's input predictor need two samples).
  int history_order() const { return uses_order() ? order : 1; }
  bool uses_order() const {
    return kind == PolicyKind::Taylor || kind == PolicyKind::Rfe;
  }

  void validate() const;
};

/// Per-module cache: input/output histories of full-compute samples, the
/// output/input change ratio s_N and the latest interval N.
class ModuleCache {
 public:
  ModuleCache(int module_id, std::size_t capacity);

  /// Records a full computation at t and refreshes s_N and N.
  void on_full_compute(int t, FeatureVec input, FeatureVec output);

  int module_id() const noexcept { return module_id_; }
  const SampleHistory& out_history() const noexcept { return out_history_; }
  const SampleHistory& in_history() const noexcept { return in_history_; }
  std::optional<double> s_ratio() const noexcept { return s_ratio_; }
  std::optional<int> last_full_t() const noexcept { return last_full_t_; }
  std::optional<int> last_interval() const noexcept { return last_interval_; }
  bool empty() const noexcept { return out_history_.empty(); }

 private:
  int module_id_;
  SampleHistory out_history_;
  SampleHistory in_history_;
  std::optional<double> s_ratio_;
  std::optional<int> last_full_t_;
  std::optional<int> last_interval_;
};

/// ||out_diff||_2 / ||in_diff||_2, absent when the input change vanishes.
std::optional<double> compute_s_ratio(const FeatureVec& in_diff,
                                      const FeatureVec& out_diff);

FeatureVec predict_direct_reuse(const ModuleCache& cache);

/// O(t) + (k/N) w(t_now) D_N O(t) over the two latest output samples.
FeatureVec predict_linear_w(const ModuleCache& cache, int k, int t_now,
                            const PolicySpec& spec, int total_steps);

/// Extrapolation over the most recent min(m+1, available) output samples.
FeatureVec predict_taylor(const ModuleCache& cache, int target_t,
                          const PolicySpec& spec);

/// Taylor direction with magnitude s_N ||current_input - I(t)||_2. Falls back
/// to predict_taylor when s_N is absent or the Taylor delta is zero.
FeatureVec predict_rfe(const ModuleCache& cache, const FeatureVec& current_input,
                       int target_t, const PolicySpec& spec);

/// Dispatches on spec.kind. current_input is only read by RFE.
FeatureVec predict_output(const ModuleCache& cache, const PolicySpec& spec,
                          const FeatureVec& current_input, int target_t,
                          int total_steps);

}  // namespace relcache
