// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcache/forecast.hpp"

#include <algorithm>

#include "relcache/error.hpp"
#include "spec_string.hpp"

namespace relcache {

double WeightSchedule::at(int t, int total_steps) const {
  if (kind == Kind::Constant) return value;
  if (total_steps <= 0) {
    throw Error(ErrorKind::InvalidArgument, "ramp weight needs total_steps > 0");
  }
  return std::clamp(static_cast<double>(t) / total_steps, 0.0, 1.0);
}

PolicySpec PolicySpec::reuse() { return {PolicyKind::DirectReuse, 1, {}, {}}; }

PolicySpec PolicySpec::linear(double w) {
  return {PolicyKind::LinearW, 1, {WeightSchedule::Kind::Constant, w}, {}};
}

PolicySpec PolicySpec::linear_ramp() {
  return {PolicyKind::LinearW, 1, {WeightSchedule::Kind::LinearRamp, 0.0}, {}};
}

PolicySpec PolicySpec::taylor(int m, ExtrapolationForm form) {
  return {PolicyKind::Taylor, m, {}, form};
}

PolicySpec PolicySpec::rfe(int m, ExtrapolationForm form) {
  return {PolicyKind::Rfe, m, {}, form};
}

void PolicySpec::validate() const {
  if (order < 1) throw Error(ErrorKind::InvalidConfig, "policy order m must be >= 1");
  if (kind == PolicyKind::LinearW &&
      weight.kind == WeightSchedule::Kind::Constant && !(weight.value > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "linear weight must be > 0");
  }
}

PolicySpec PolicySpec::parse(std::string_view text) {
  const auto s = detail::parse_spec_string(text);
  PolicySpec spec;
  if (s.name == "reuse") {
    s.require_only({});
    spec = reuse();
  } else if (s.name == "linear") {
    s.require_only({"w"});
    const auto& w = s.get("w");
    spec = w == "ramp" ? linear_ramp() : linear(detail::parse_double(w, "linear w"));
  } else if (s.name == "taylor" || s.name == "rfe") {
    s.require_only({"m", "form"});
    const int m = detail::parse_int(s.get("m"), "order m");
    ExtrapolationForm form = ExtrapolationForm::Newton;
    if (s.has("form")) {
      const auto& f = s.get("form");
      if (f == "series") {
        form = ExtrapolationForm::Series;
      } else if (f != "newton") {
        throw Error(ErrorKind::InvalidConfig, "unknown form '" + f + "'");
      }
    }
    spec = s.name == "taylor" ? taylor(m, form) : rfe(m, form);
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown policy '" + s.name + "'");
  }
  spec.validate();
  return spec;
}

std::string PolicySpec::to_string() const {
  const std::string suffix =
      form == ExtrapolationForm::Series ? ",form=series" : "";
  switch (kind) {
    case PolicyKind::DirectReuse:
      return "reuse";
    case PolicyKind::LinearW:
      return weight.kind == WeightSchedule::Kind::LinearRamp
                 ? "linear:w=ramp"
                 : "linear:w=" + detail::format_double(weight.value);
    case PolicyKind::Taylor:
      return "taylor:m=" + std::to_string(order) + suffix;
    case PolicyKind::Rfe:
      return "rfe:m=" + std::to_string(order) + suffix;
  }
  return "?";
}

ModuleCache::ModuleCache(int module_id, std::size_t capacity)
    : module_id_(module_id), out_history_(capacity), in_history_(capacity) {}

void ModuleCache::on_full_compute(int t, FeatureVec input, FeatureVec output) {
  if (!in_history_.empty() &&
      (!input.same_shape(in_history_.latest().value) ||
       !output.same_shape(out_history_.latest().value))) {
    throw Error(ErrorKind::ShapeMismatch,
                "module " + std::to_string(module_id_) +
                    ": full-compute features differ in shape from cache");
  }
  in_history_.push(t, std::move(input));
  out_history_.push(t, std::move(output));
  last_full_t_ = t;
  s_ratio_.reset();
  last_interval_.reset();
  if (in_history_.size() >= 2) {
    const auto& prev_in = in_history_.at(in_history_.size() - 2);
    const auto& prev_out = out_history_.at(out_history_.size() - 2);
    last_interval_ = prev_in.t - t;
    s_ratio_ = compute_s_ratio(in_history_.latest().value - prev_in.value,
                               out_history_.latest().value - prev_out.value);
  }
}

std::optional<double> compute_s_ratio(const FeatureVec& in_diff,
                                      const FeatureVec& out_diff) {
  const double denom = l2_norm(in_diff);
  if (denom == 0.0) return std::nullopt;
  return l2_norm(out_diff) / denom;
}

FeatureVec predict_direct_reuse(const ModuleCache& cache) {
  return cache.out_history().latest().value;
}

FeatureVec predict_linear_w(const ModuleCache& cache, int k, int t_now,
                            const PolicySpec& spec, int total_steps) {
  const auto& hist = cache.out_history();
  if (hist.size() < 2) {
    throw Error(ErrorKind::InsufficientHistory,
                "linear extrapolation needs two full-compute samples");
  }
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "offset k must be >= 1");
  const SamplePoint& newest = hist.at(hist.size() - 1);
  const SamplePoint& prev = hist.at(hist.size() - 2);
  const double interval = static_cast<double>(prev.t - newest.t);
  const double w = spec.weight.at(t_now, total_steps);
  return newest.value + (static_cast<double>(k) / interval * w) *
                            (newest.value - prev.value);
}

FeatureVec predict_taylor(const ModuleCache& cache, int target_t,
                          const PolicySpec& spec) {
  const auto& hist = cache.out_history();
  if (hist.empty()) {
    throw Error(ErrorKind::InsufficientHistory, "no cached output samples");
  }
  const auto pts = hist.recent(static_cast<std::size_t>(spec.order) + 1);
  return spec.form == ExtrapolationForm::Series
             ? taylor_series_predict(pts, target_t)
             : newton_predict(pts, target_t);
}

FeatureVec predict_rfe(const ModuleCache& cache, const FeatureVec& current_input,
                       int target_t, const PolicySpec& spec) {
  FeatureVec taylor = predict_taylor(cache, target_t, spec);
  const auto& anchor_in = cache.in_history().latest().value;
  if (!current_input.same_shape(anchor_in)) {
    throw Error(ErrorKind::ShapeMismatch,
                "current input shape differs from cached inputs");
  }
  if (!cache.s_ratio()) return taylor;
  const FeatureVec& anchor_out = cache.out_history().latest().value;
  const FeatureVec delta = taylor - anchor_out;
  if (l2_norm(delta) == 0.0) return taylor;
  const double magnitude = *cache.s_ratio() * l2_norm(current_input - anchor_in);
  return anchor_out + magnitude * normalize_l2(delta);
}

FeatureVec predict_output(const ModuleCache& cache, const PolicySpec& spec,
                          const FeatureVec& current_input, int target_t,
                          int total_steps) {
  switch (spec.kind) {
    case PolicyKind::DirectReuse:
      return predict_direct_reuse(cache);
    case PolicyKind::LinearW: {
      const int k = cache.last_full_t().value_or(target_t) - target_t;
      return predict_linear_w(cache, k, target_t, spec, total_steps);
    }
    case PolicyKind::Taylor:
      return predict_taylor(cache, target_t, spec);
    case PolicyKind::Rfe:
      return predict_rfe(cache, current_input, target_t, spec);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown policy kind");
}

}  // namespace relcache
