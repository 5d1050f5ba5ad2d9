// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: prints one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "relcache/analysis.hpp"
#include "relcache/error.hpp"
#include "relcache/experiment.hpp"
#include "relcache/synthetic.hpp"
#include "relcache/toy_diffusion.hpp"
#include "relcache/trace.hpp"

using namespace relcache;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

PipelineConfig toy_config() {
  PipelineConfig c;
  c.depth = 3;
  c.width = 64;
  c.seq_len = 8;
  c.steps = 50;
  return c;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

double max_rel(const FeatureVec& a, const FeatureVec& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::fabs(a[i] - b[i]));
    den = std::max(den, std::fabs(b[i]));
  }
  return den > 0.0 ? num / den : num;
}

double max_predicted_eps(const MetricsLog& log) {
  double worst = 0.0;
  for (const auto& s : log.steps) {
    if (s.action != StepAction::Predict) continue;
    for (double e : s.eps_out) worst = std::max(worst, e);
  }
  return worst;
}

Outcome criterion1() {
  double worst_rsd = 0.0, worst_eps = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticParams p;
    p.seed = seed;
    p.steps = 30;
    p.dim = 64;
    const auto tr = synthetic_trajectory(p);
    for (const auto& v : s_ratio_rsd_series(tr, 0, 9)) worst_rsd = std::max(worst_rsd, v.value);
    for (const auto& sched : {SchedulerSpec::fixed(4), SchedulerSpec::rcs(0.2)}) {
      worst_eps = std::max(worst_eps, max_predicted_eps(replay_policy(tr, PolicySpec::rfe(1), sched).log));
    }
  }
  return {worst_rsd <= 1e-8 && worst_eps <= 1e-9,
          "max RSD " + fmt(worst_rsd) + ", max eps_out " + fmt(worst_eps)};
}

Outcome criterion2() {
  double worst = 0.0;
  for (int d : {1, 2}) {
    for (int n : {2, 3, 5}) {
      SyntheticParams p;
      p.kind = SyntheticKind::PolynomialDegree;
      p.degree = d;
      p.steps = 30;
      p.dim = 16;
      const auto tr = synthetic_trajectory(p);
      worst = std::max(worst, max_predicted_eps(replay_policy(tr, PolicySpec::taylor(d), SchedulerSpec::fixed(n)).log));
    }
  }
  return {worst <= 1e-9, "max eps_out " + fmt(worst)};
}

Outcome criterion3() {
  const auto pipe = Pipeline::build(toy_config());
  RunOptions opt;
  opt.keep_predictions = true;
  const auto a = run_sampling(pipe, PolicySpec::taylor(1), SchedulerSpec::fixed(4), 0, opt);
  const auto b = run_sampling(pipe, PolicySpec::linear(1.0), SchedulerSpec::fixed(4), 0, opt);
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::size_t i = 0; i < a.metrics.steps.size(); ++i) {
    const auto& pa = a.metrics.steps[i].predictions;
    const auto& pb = b.metrics.steps[i].predictions;
    if (pa.size() != pb.size()) return {false, "prediction counts differ at step " + std::to_string(i)};
    for (std::size_t l = 0; l < pa.size(); ++l, ++compared) worst = std::max(worst, max_rel(pa[l], pb[l]));
  }
  worst = std::max(worst, max_rel(a.final_latent, b.final_latent));
  return {worst <= 1e-12 && compared > 0,
          std::to_string(compared) + " predictions, max rel diff " + fmt(worst)};
}

Outcome criterion4() {
  std::vector<Trace> traces;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticParams p;
    p.kind = SyntheticKind::IrregularMagnitude;
    p.seed = seed;
    p.steps = 50;
    traces.push_back(synthetic_trajectory(p));
  }
  const TraceEvaluator ev(std::move(traces));
  CompareOptions opt;
  opt.matched_nfc = true;
  opt.target_nfc = 14;
  const auto table = compare(ev, {PolicySpec::rfe(1), PolicySpec::taylor(1), PolicySpec::reuse()},
                             SchedulerSpec::rcs(0.2), opt);
  const auto& rfe = table.rows[0];
  const auto& taylor = table.rows[1];
  const auto& reuse = table.rows[2];
  bool ok = rfe.mean_eps_out < 0.95 * taylor.mean_eps_out && taylor.mean_eps_out < 0.95 * reuse.mean_eps_out;
  for (const auto& r : table.rows) ok = ok && std::fabs(r.nfc_mean - 14) <= kNfcTolerance;
  return {ok, "eps_out rfe " + fmt(rfe.mean_eps_out) + " taylor " + fmt(taylor.mean_eps_out) + " reuse " +
                  fmt(reuse.mean_eps_out) + " at nfc " + fmt(rfe.nfc_mean) + "/" + fmt(taylor.nfc_mean) + "/" +
                  fmt(reuse.nfc_mean)};
}

// Recomputes the accumulated input error from the recorded trace.
double brute_force_trigger_gap(const RunResult& run) {
  const auto& tr = *run.trace;
  std::vector<int> fulls;
  double acc = 0.0, worst = 0.0;
  for (const auto& s : run.metrics.steps) {
    if (!s.warmup) {
      const int t_new = fulls[fulls.size() - 1], t_old = fulls[fulls.size() - 2];
      const auto pred = oracle::linear_extrapolate(t_new, tr.at(t_new, 0, Stream::Input).data(), t_old,
                                                   tr.at(t_old, 0, Stream::Input).data(), s.t);
      acc += oracle::rel_l1(tr.at(s.t, 0, Stream::Input).data(), pred);
      worst = std::max(worst, std::fabs(acc - s.trigger_value));
    }
    if (s.action == StepAction::FullCompute) {
      fulls.push_back(s.t);
      acc = 0.0;
    }
  }
  return worst;
}

Outcome criterion5() {
  const auto pipe = Pipeline::build(toy_config());
  const auto policy = PolicySpec::rfe(1);
  const int zero = run_sampling(pipe, policy, SchedulerSpec::rcs(0.0), 0).metrics.nfc();
  const int huge = run_sampling(pipe, policy, SchedulerSpec::rcs(1e9), 0).metrics.nfc();
  bool ok = zero == 50 && huge == warmup_steps(1);
  std::string nfcs;
  int previous = std::numeric_limits<int>::max();
  double worst_gap = 0.0;
  RunOptions rec;
  rec.record_trace = true;
  for (double tau : {0.05, 0.1, 0.2, 0.4, 0.8}) {
    const auto run = run_sampling(pipe, policy, SchedulerSpec::rcs(tau), 0, rec);
    const int n = run.metrics.nfc();
    ok = ok && n <= previous;
    previous = n;
    nfcs += (nfcs.empty() ? "" : ",") + std::to_string(n);
    worst_gap = std::max(worst_gap, brute_force_trigger_gap(run));
  }
  ok = ok && worst_gap <= 1e-12;
  return {ok, "tau=0 nfc " + std::to_string(zero) + ", tau=1e9 nfc " + std::to_string(huge) + ", grid nfc " +
                  nfcs + ", max state gap " + fmt(worst_gap)};
}

int count_fixed(int total, int interval, int warmup) {
  SchedulerState state = SchedulerState::with_warmup(warmup);
  std::vector<ModuleCache> caches;
  caches.emplace_back(0, 2);
  caches.back().on_full_compute(total + 2, FeatureVec({1.0}), FeatureVec({1.0}));
  caches.back().on_full_compute(total + 1, FeatureVec({1.0}), FeatureVec({1.0}));
  const std::vector<FeatureVec> observed{FeatureVec({1.0})};
  for (int t = total; t >= 1; --t) observe_and_decide(state, SchedulerSpec::fixed(interval), observed, caches, t, 1);
  return nfc(state);
}

Outcome criterion6() {
  const int w = 2;
  int bad = 0;
  for (int total : {20, 50}) {
    for (int n = 2; n <= 9; ++n) {
      if (count_fixed(total, n, w) != w + (total - w + n - 1) / n) ++bad;
    }
  }
  const int toy = run_sampling(Pipeline::build(toy_config()), PolicySpec::taylor(1), SchedulerSpec::fixed(4), 0)
                      .metrics.nfc();
  return {bad == 0 && toy == 14,
          std::to_string(bad) + " mismatches over 16 cases, toy run T=50 N=4 nfc " + std::to_string(toy)};
}

Outcome criterion7() {
  double worst = 0.0;
  bool lower = true, timestep_lower = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticParams p;
    p.seed = seed;
    const auto exact = synthetic_trajectory(p);
    const double r2 = linearity_r2(exact, 0);
    const double ci = directional_consistency(exact, 0, Stream::Input);
    const double co = directional_consistency(exact, 0, Stream::Output);
    worst = std::max({worst, std::fabs(r2 - 1), std::fabs(ci - 1), std::fabs(co - 1)});
    lower = lower && timestep_linearity_r2(exact, 0) < r2;
    p.kind = SyntheticKind::AffineDriftingDirection;
    const auto drift = synthetic_trajectory(p);
    lower = lower && directional_consistency(drift, 0, Stream::Input) < ci &&
            directional_consistency(drift, 0, Stream::Output) < co;
    p.kind = SyntheticKind::IrregularMagnitude;
    const auto irregular = synthetic_trajectory(p);
    timestep_lower = timestep_lower && timestep_linearity_r2(irregular, 0) < linearity_r2(irregular, 0);
  }
  return {worst <= 1e-9 && lower && timestep_lower,
          "max deviation from 1 " + fmt(worst) + ", drifting lower " + (lower ? "yes" : "no") +
              ", timestep fit lower " + (timestep_lower ? "yes" : "no")};
}

Outcome criterion8() {
  const auto pipe = Pipeline::build(toy_config());
  struct Combo {
    PolicySpec policy;
    SchedulerSpec scheduler;
  };
  std::vector<Combo> combos{{PolicySpec::taylor(1), SchedulerSpec::fixed(4)},
                            {PolicySpec::linear(1.0), SchedulerSpec::fixed(4)},
                            {PolicySpec::taylor(1), SchedulerSpec::rcs(0.2)},
                            {PolicySpec::reuse(), SchedulerSpec::rcs(0.2)},
                            {PolicySpec::rfe(1), SchedulerSpec::rcs(0.0)},
                            {PolicySpec::rfe(1), SchedulerSpec::rcs(1e9)}};
  for (double tau : {0.05, 0.1, 0.2, 0.4, 0.8}) combos.push_back({PolicySpec::rfe(1), SchedulerSpec::rcs(tau)});
  RunOptions rec;
  rec.record_trace = true;
  double worst = 0.0;
  for (const auto& c : combos) {
    const auto online = run_sampling(pipe, c.policy, c.scheduler, 0, rec);
    const auto offline = replay_policy(*online.trace, c.policy, c.scheduler);
    if (offline.log.full_compute_log != online.metrics.full_compute_log) {
      return {false, c.policy.to_string() + " " + c.scheduler.to_string() + ": decisions differ"};
    }
    for (std::size_t i = 0; i < online.metrics.steps.size(); ++i) {
      const auto& a = online.metrics.steps[i].eps_out;
      const auto& b = offline.log.steps[i].eps_out;
      if (a.size() != b.size()) return {false, "eps_out sizes differ"};
      for (std::size_t l = 0; l < a.size(); ++l) worst = std::max(worst, std::fabs(a[l] - b[l]));
    }
  }
  return {worst <= 1e-12, std::to_string(combos.size()) + " combinations, max eps_out gap " + fmt(worst)};
}

Outcome criterion9() {
  double worst = 0.0;
  for (auto kind : {ScheduleKind::Linear, ScheduleKind::Cosine}) {
    const auto s = AlphaSchedule::make(kind, 50);
    std::mt19937_64 rng(9);
    const auto x0 = gaussian_feature(Shape{8, 16}, rng);
    const auto eps = gaussian_feature(Shape{8, 16}, rng);
    auto x = forward_noise(x0, 50, s, eps);
    for (int t = 50; t >= 1; --t) x = ddim_step(x, eps, t, s);
    worst = std::max(worst, oracle::rel_l1(x0.data(), x.data()));
  }
  return {worst <= 1e-6, "max relative error " + fmt(worst)};
}

std::string format_error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    trace_read(in);
  } catch (const Error& e) {
    return e.kind() == ErrorKind::FormatError ? "FormatError" : "other error";
  }
  return "no error";
}

Outcome criterion10() {
  RunOptions rec;
  rec.record_trace = true;
  const auto run = run_sampling(Pipeline::build(toy_config()), PolicySpec::rfe(1), SchedulerSpec::rcs(0.2), 0, rec);
  std::ostringstream out;
  trace_write(*run.trace, out);
  const auto text = out.str();
  std::istringstream in(text);
  const bool identity = trace_read(in) == *run.trace;

  auto truncated = text.substr(0, text.size() - 1);
  truncated = truncated.substr(0, truncated.rfind('\n') + 1);
  const auto body = text.substr(text.find('\n'));
  const auto bad_header = "{\"type\":\"header\",\"version\":7}" + body;
  auto shape = text;
  const auto pos = shape.find("\"data\":[") + 8;
  shape.insert(pos, "0.5,");
  const auto e1 = format_error_of(truncated);
  const auto e2 = format_error_of(bad_header);
  const auto e3 = format_error_of(shape);
  const bool ok = identity && e1 == "FormatError" && e2 == "FormatError" && e3 == "FormatError";
  return {ok, std::string("round trip ") + (identity ? "identical" : "differs") + ", truncation " + e1 +
                  ", bad header " + e2 + ", shape mismatch " + e3};
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"extrapolation exactness on affine constant-direction modules", criterion1},
      {"taylor exactness on polynomial trajectories", criterion2},
      {"taylor m=1 equals linear w=1 on the toy pipeline", criterion3},
      {"error ordering rfe < taylor < reuse at matched nfc", criterion4},
      {"rcs boundaries, monotonicity and accumulated state", criterion5},
      {"fixed interval count formula", criterion6},
      {"linearity and consistency diagnostics", criterion7},
      {"online and offline error series agree", criterion8},
      {"ddim recovers x0 with oracle noise", criterion9},
      {"trace round trip and corruption errors", criterion10},
  };
  int failures = 0;
  int index = 1;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] criterion %d: %s (%s)\n", o.pass ? "PASS" : "FAIL", index++, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool fast = seconds < 120.0;
  if (!fast) ++failures;
  std::printf("[%s] criterion 11: acceptance runtime under 120 s (%.1f s)\n", fast ? "PASS" : "FAIL", seconds);
  return failures == 0 ? 0 : 1;
}
