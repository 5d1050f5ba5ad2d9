// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcache/error.hpp"
#include "relcache/toy_diffusion.hpp"

namespace relcache {

namespace {

// Result of propagating the hidden state through every module at one step.
struct PassResult {
  FeatureVec hidden;
  std::vector<FeatureVec> inputs;
  std::vector<FeatureVec> outputs;  // used outputs (exact or predicted)
  std::vector<FeatureVec> truths;   // ghost ground truth, predicted passes only
};

PassResult full_pass(const Pipeline& pipeline, FeatureVec hidden, int t) {
  PassResult r;
  for (int l = 0; l < pipeline.n_modules(); ++l) {
    FeatureVec in = pipeline.module_input(l, hidden, t);
    FeatureVec out = pipeline.module_output(l, in);
    hidden = hidden + out;
    r.inputs.push_back(std::move(in));
    r.outputs.push_back(std::move(out));
  }
  r.hidden = std::move(hidden);
  return r;
}

PassResult predicted_pass(const Pipeline& pipeline, const std::vector<ModuleCache>& caches,
                          const PolicySpec& policy, FeatureVec hidden, int t, bool ghost) {
  PassResult r;
  const int total = pipeline.config().steps;
  for (int l = 0; l < pipeline.n_modules(); ++l) {
    const auto& cache = caches[static_cast<std::size_t>(l)];
    FeatureVec in = pipeline.module_input(l, hidden, t);
    FeatureVec out = predict_output(cache, policy, in, t, total);
    if (ghost) r.truths.push_back(pipeline.module_output(l, in));
    hidden = hidden + out;
    r.inputs.push_back(std::move(in));
    r.outputs.push_back(std::move(out));
  }
  r.hidden = std::move(hidden);
  return r;
}

std::vector<int> descending_timesteps(int steps) {
  std::vector<int> ts;
  for (int t = steps; t >= 1; --t) ts.push_back(t);
  return ts;
}

}  // namespace

RunResult run_sampling(const Pipeline& pipeline, const PolicySpec& policy,
                       const SchedulerSpec& scheduler, std::uint64_t seed,
                       const RunOptions& options) {
  policy.validate();
  scheduler.validate();
  const int steps = pipeline.config().steps;
  const int n_modules = pipeline.n_modules();
  const int order = policy.history_order();
  const bool ghost = options.ghost_reference || options.record_trace;

  std::vector<ModuleCache> caches;
  for (int l = 0; l < n_modules; ++l) {
    caches.emplace_back(l, static_cast<std::size_t>(order) + 1);
  }

  RunResult result;
  result.scheduler_state = SchedulerState::with_warmup(warmup_steps(order));
  if (options.record_trace) {
    result.trace.emplace(n_modules, pipeline.latent_shape(), descending_timesteps(steps));
  }
  SchedulerState& state = result.scheduler_state;

  FeatureVec x = pipeline.initial_latent(seed);
  for (int t = steps; t >= 1; --t) {
    FeatureVec h0 = pipeline.embed(x);
    const FeatureVec first_input = pipeline.module_input(0, h0, t);
    const bool in_warmup = state.warmup_remaining > 0;

    std::optional<PassResult> predicted;
    std::vector<FeatureVec> observed;
    if (!in_warmup && scheduler.needs_all_inputs()) {
      predicted = predicted_pass(pipeline, caches, policy, h0, t, ghost);
      observed = predicted->inputs;
    } else {
      observed.push_back(first_input);
    }

    const StepDecision decision = observe_and_decide(state, scheduler, observed, caches, t, order);

    StepMetrics step;
    step.t = t;
    step.action = decision.action;
    step.trigger_value = decision.trigger_value;
    step.warmup = decision.warmup;
    if (!decision.warmup) {
      step.eps_in = rel_l1_error(first_input, predict_input(caches[0], t, order));
    }

    FeatureVec hidden;
    if (decision.action == StepAction::FullCompute) {
      PassResult pass = full_pass(pipeline, std::move(h0), t);
      for (int l = 0; l < n_modules; ++l) {
        const auto li = static_cast<std::size_t>(l);
        if (result.trace) {
          result.trace->set(t, l, Stream::Input, pass.inputs[li]);
          result.trace->set(t, l, Stream::Output, pass.outputs[li]);
        }
        caches[li].on_full_compute(t, std::move(pass.inputs[li]), std::move(pass.outputs[li]));
      }
      if (ghost) step.eps_out.assign(static_cast<std::size_t>(n_modules), 0.0);
      hidden = std::move(pass.hidden);
    } else {
      if (!predicted) predicted = predicted_pass(pipeline, caches, policy, std::move(h0), t, ghost);
      for (int l = 0; l < n_modules && ghost; ++l) {
        const auto li = static_cast<std::size_t>(l);
        step.eps_out.push_back(rel_l1_error(predicted->truths[li], predicted->outputs[li]));
        if (result.trace) {
          result.trace->set(t, l, Stream::Input, predicted->inputs[li]);
          result.trace->set(t, l, Stream::Output, predicted->truths[li]);
        }
      }
      if (options.keep_predictions) step.predictions = predicted->outputs;
      hidden = std::move(predicted->hidden);
    }
    result.metrics.steps.push_back(std::move(step));

    x = ddim_step(x, pipeline.predict_noise(hidden), t, pipeline.schedule());
  }
  result.metrics.full_compute_log = state.full_compute_log;
  result.final_latent = std::move(x);
  return result;
}

FeatureVec reference_sampling(const Pipeline& pipeline, std::uint64_t seed) {
  FeatureVec x = pipeline.initial_latent(seed);
  for (int t = pipeline.config().steps; t >= 1; --t) {
    FeatureVec hidden = pipeline.embed(x);
    for (int l = 0; l < pipeline.n_modules(); ++l) {
      hidden = hidden + pipeline.module_output(l, pipeline.module_input(l, hidden, t));
    }
    x = ddim_step(x, pipeline.predict_noise(hidden), t, pipeline.schedule());
  }
  return x;
}

}  // namespace relcache
