// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcache/scheduler.hpp"

#include <cmath>

#include "relcache/error.hpp"
#include "spec_string.hpp"

namespace relcache {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

SchedulerSpec SchedulerSpec::parse(std::string_view text) {
  const auto s = detail::parse_spec_string(text);
  SchedulerSpec spec;
  if (s.name == "fixed") {
    s.require_only({"N"});
    spec = fixed(detail::parse_int(s.get("N"), "interval N"));
  } else if (s.name == "distance") {
    s.require_only({"delta"});
    spec = distance(detail::parse_double(s.get("delta"), "delta"));
  } else if (s.name == "rcs") {
    s.require_only({"tau", "scope"});
    RcsScope scope = RcsScope::FirstModule;
    if (s.has("scope")) {
      const auto& v = s.get("scope");
      if (v == "all") {
        scope = RcsScope::AllModules;
      } else if (v != "first") {
        throw Error(ErrorKind::InvalidConfig, "unknown rcs scope '" + v + "'");
      }
    }
    spec = rcs(detail::parse_double(s.get("tau"), "tau"), scope);
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown scheduler '" + s.name + "'");
  }
  spec.validate();
  return spec;
}

std::string SchedulerSpec::to_string() const {
  return std::visit(
      Overloaded{
          [](const FixedInterval& f) { return "fixed:N=" + std::to_string(f.interval); },
          [](const InputDistance& d) {
            return "distance:delta=" + detail::format_double(d.delta);
          },
          [](const Rcs& r) {
            std::string out = "rcs:tau=" + detail::format_double(r.tau);
            if (r.scope == RcsScope::AllModules) out += ",scope=all";
            return out;
          },
      },
      kind);
}

void SchedulerSpec::validate() const {
  std::visit(Overloaded{
                 [](const FixedInterval& f) {
                   if (f.interval < 1) {
                     throw Error(ErrorKind::InvalidConfig, "interval N must be >= 1");
                   }
                 },
                 [](const InputDistance& d) {
                   if (!(d.delta > 0.0)) {
                     throw Error(ErrorKind::InvalidConfig, "delta must be > 0");
                   }
                 },
                 [](const Rcs& r) {
                   if (!(r.tau >= 0.0)) {
                     throw Error(ErrorKind::InvalidConfig, "tau must be >= 0");
                   }
                 },
             },
             kind);
}

bool SchedulerSpec::needs_all_inputs() const {
  const auto* r = std::get_if<Rcs>(&kind);
  return r != nullptr && r->scope == RcsScope::AllModules;
}

std::string_view to_string(StepAction action) {
  return action == StepAction::FullCompute ? "full" : "predict";
}

FeatureVec predict_input(const ModuleCache& cache, int target_t, int order) {
  const auto& hist = cache.in_history();
  if (hist.empty()) {
    throw Error(ErrorKind::InsufficientHistory, "no cached input samples");
  }
  const auto pts = hist.recent(static_cast<std::size_t>(order) + 1);
  return newton_predict(pts, target_t);
}

StepDecision observe_and_decide(SchedulerState& state, const SchedulerSpec& spec,
                                std::span<const FeatureVec> observed_inputs,
                                std::span<const ModuleCache> caches, int t,
                                int order) {
  if (!state.full_compute_log.empty() && t >= state.full_compute_log.back()) {
    throw Error(ErrorKind::InvalidArgument, "steps must be visited in decreasing t");
  }
  StepDecision decision;
  if (state.warmup_remaining > 0) {
    --state.warmup_remaining;
    decision = {StepAction::FullCompute, 0.0, true};
  } else {
    if (observed_inputs.empty() || caches.empty()) {
      throw Error(ErrorKind::InvalidArgument, "scheduler needs observed inputs");
    }
    const int next_count = state.steps_since_full + 1;
    decision = std::visit(
        Overloaded{
            [&](const FixedInterval& f) {
              const bool full = next_count >= f.interval || t == 1;
              return StepDecision{full ? StepAction::FullCompute : StepAction::Predict,
                                  static_cast<double>(next_count), false};
            },
            [&](const InputDistance& d) {
              const double dist = rel_l1_error(
                  observed_inputs[0], caches[0].in_history().latest().value);
              return StepDecision{
                  dist > d.delta ? StepAction::FullCompute : StepAction::Predict,
                  dist, false};
            },
            [&](const Rcs& r) {
              const std::size_t scoped =
                  r.scope == RcsScope::AllModules ? caches.size() : 1;
              if (observed_inputs.size() < scoped) {
                throw Error(ErrorKind::InvalidArgument,
                            "RCS over all modules needs every module input");
              }
              double step_error = 0.0;
              for (std::size_t l = 0; l < scoped; ++l) {
                if (caches[l].in_history().size() < 2) {
                  throw Error(ErrorKind::InsufficientHistory,
                              "RCS after warmup needs two cached inputs in module " +
                                  std::to_string(l));
                }
                step_error += rel_l1_error(observed_inputs[l],
                                           predict_input(caches[l], t, order));
              }
              state.accumulated_error += step_error;
              return StepDecision{state.accumulated_error > r.tau
                                      ? StepAction::FullCompute
                                      : StepAction::Predict,
                                  state.accumulated_error, false};
            },
        },
        spec.kind);
  }
  if (decision.action == StepAction::FullCompute) {
    state.accumulated_error = 0.0;
    state.steps_since_full = 0;
    state.full_compute_log.push_back(t);
  } else {
    state.steps_since_full += 1;
  }
  return decision;
}

int nfc(const SchedulerState& state) {
  return static_cast<int>(state.full_compute_log.size());
}

}  // namespace relcache
