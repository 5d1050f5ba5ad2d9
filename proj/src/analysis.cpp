// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcache/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "relcache/error.hpp"

namespace relcache {

namespace {

const std::vector<int>& require_timesteps(const Trace& trace, std::size_t at_least) {
  const auto& ts = trace.timesteps();
  if (ts.size() < at_least) {
    throw Error(ErrorKind::InsufficientData,
                "trace has " + std::to_string(ts.size()) + " timesteps, need " +
                    std::to_string(at_least));
  }
  return ts;
}

void require_covered(const Trace& trace, int t) {
  if (!trace.contains_timestep(t)) {
    throw Error(ErrorKind::InsufficientData,
                "trace does not cover timestep " + std::to_string(t));
  }
}

Eigen::RowVectorXd as_row(const FeatureVec& v) {
  return Eigen::Map<const Eigen::RowVectorXd>(v.values().data(),
                                              static_cast<Eigen::Index>(v.size()));
}

// R^2 of a ridge-guarded affine least-squares fit Y ~ X (rows are samples).
// The fit is solved in its w x w dual form: with centered X and Y,
//   X (X^T X + lambda I)^-1 X^T Y == G (G + lambda I)^-1 Y,  G = X X^T.
std::optional<double> affine_fit_r2(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
  const double ss_tot = yc.squaredNorm();
  if (ss_tot == 0.0) return std::nullopt;
  const Eigen::MatrixXd gram = xc * xc.transpose();
  if (gram.isZero(0.0)) {
    throw Error(ErrorKind::SingularFit, "regressor window has no variation");
  }
  const auto n = gram.rows();
  const Eigen::MatrixXd regularized = gram + kRidgeGuard * Eigen::MatrixXd::Identity(n, n);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(regularized);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularFit, "normal equations could not be factored");
  }
  const Eigen::MatrixXd fitted = gram * ldlt.solve(yc);
  const double ss_res = (yc - fitted).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

enum class Regressor { Input, Timestep };

double windowed_r2(const Trace& trace, int module, int window, Regressor regressor) {
  if (window < 3) throw Error(ErrorKind::InvalidArgument, "window must be >= 3");
  const auto& ts = require_timesteps(trace, static_cast<std::size_t>(window));
  const auto dim = static_cast<Eigen::Index>(shape_size(trace.shape()));
  const auto w = static_cast<Eigen::Index>(window);
  double sum = 0.0;
  int count = 0;
  for (std::size_t start = 0; start + static_cast<std::size_t>(window) <= ts.size(); ++start) {
    Eigen::MatrixXd x(w, regressor == Regressor::Input ? dim : 1);
    Eigen::MatrixXd y(w, dim);
    for (Eigen::Index r = 0; r < w; ++r) {
      const int t = ts[start + static_cast<std::size_t>(r)];
      if (regressor == Regressor::Input) {
        x.row(r) = as_row(trace.at(t, module, Stream::Input));
      } else {
        x(r, 0) = static_cast<double>(t);
      }
      y.row(r) = as_row(trace.at(t, module, Stream::Output));
    }
    if (auto r2 = affine_fit_r2(x, y)) {
      sum += *r2;
      ++count;
    }
  }
  if (count == 0) {
    throw Error(ErrorKind::InsufficientData, "every window has constant outputs");
  }
  return sum / count;
}

}  // namespace

std::vector<double> min_max_normalize(std::vector<double> series) {
  if (series.empty()) return series;
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (auto& x : series) x = range > 0.0 ? (x - min) / range : 0.0;
  return series;
}

std::vector<double> consecutive_l2_raw(const Trace& trace, int module, Stream stream) {
  const auto& ts = require_timesteps(trace, 2);
  std::vector<double> out;
  out.reserve(ts.size() - 1);
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    out.push_back(l2_norm(trace.at(ts[i + 1], module, stream) - trace.at(ts[i], module, stream)));
  }
  return out;
}

std::vector<double> consecutive_l2_series(const Trace& trace, int module, Stream stream) {
  return min_max_normalize(consecutive_l2_raw(trace, module, stream));
}

std::vector<double> s_ratio_values(const Trace& trace, int module, int t, int k_max) {
  if (k_max < 1) throw Error(ErrorKind::InvalidArgument, "k_max must be >= 1");
  require_covered(trace, t);
  const FeatureVec& in_t = trace.at(t, module, Stream::Input);
  const FeatureVec& out_t = trace.at(t, module, Stream::Output);
  std::vector<double> ratios;
  for (int k = 1; k <= k_max; ++k) {
    require_covered(trace, t - k);
    const FeatureVec in_diff = trace.at(t - k, module, Stream::Input) - in_t;
    const FeatureVec out_diff = trace.at(t - k, module, Stream::Output) - out_t;
    const auto s = compute_s_ratio(in_diff, out_diff);
    if (!s) {
      throw Error(ErrorKind::UndefinedRatio,
                  "zero input change at t=" + std::to_string(t) + ", k=" + std::to_string(k));
    }
    ratios.push_back(*s);
  }
  return ratios;
}

double s_ratio_rsd(const Trace& trace, int module, int t, int k_max) {
  const auto s = s_ratio_values(trace, module, t, k_max);
  const double n = static_cast<double>(s.size());
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double var = 0.0;
  for (double x : s) var += (x - mean) * (x - mean);
  var /= n;
  if (mean == 0.0) {
    throw Error(ErrorKind::UndefinedRatio, "s_k has zero mean at t=" + std::to_string(t));
  }
  return std::sqrt(var) / mean;
}

std::vector<AnchoredValue> s_ratio_rsd_series(const Trace& trace, int module, int k_max) {
  std::vector<AnchoredValue> out;
  for (int t : trace.timesteps()) {
    if (!trace.contains_timestep(t - k_max)) continue;
    bool covered = true;
    for (int k = 1; k < k_max && covered; ++k) covered = trace.contains_timestep(t - k);
    if (covered) out.push_back({t, s_ratio_rsd(trace, module, t, k_max)});
  }
  if (out.empty()) {
    throw Error(ErrorKind::InsufficientData, "trace too short for k_max=" + std::to_string(k_max));
  }
  return out;
}

double linearity_r2(const Trace& trace, int module, int window) {
  return windowed_r2(trace, module, window, Regressor::Input);
}

double timestep_linearity_r2(const Trace& trace, int module, int window) {
  return windowed_r2(trace, module, window, Regressor::Timestep);
}

double directional_consistency(const Trace& trace, int module, Stream stream, int k_max) {
  if (k_max < 2) throw Error(ErrorKind::InvalidArgument, "k_max must be >= 2");
  double total = 0.0;
  int anchors = 0;
  for (int t : trace.timesteps()) {
    bool covered = true;
    for (int k = 1; k <= k_max && covered; ++k) covered = trace.contains_timestep(t - k);
    if (!covered) continue;
    const FeatureVec& anchor = trace.at(t, module, stream);
    std::vector<FeatureVec> dirs;
    for (int k = 1; k <= k_max; ++k) {
      const FeatureVec diff = trace.at(t - k, module, stream) - anchor;
      if (l2_norm(diff) == 0.0) {
        throw Error(ErrorKind::UndefinedDirection,
                    "zero feature change at t=" + std::to_string(t) + ", k=" + std::to_string(k));
      }
      dirs.push_back(normalize_l2(diff));
    }
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      for (std::size_t j = i + 1; j < dirs.size(); ++j) {
        sum += dot(dirs[i], dirs[j]);
        ++pairs;
      }
    }
    total += sum / pairs;
    ++anchors;
  }
  if (anchors == 0) {
    throw Error(ErrorKind::InsufficientData, "trace too short for k_max=" + std::to_string(k_max));
  }
  return total / anchors;
}

std::vector<double> interval_profile(std::span<const std::vector<int>> logs) {
  if (logs.empty()) throw Error(ErrorKind::InsufficientData, "no full-compute logs");
  std::vector<double> sums;
  std::vector<int> counts;
  for (const auto& log : logs) {
    const auto intervals = full_compute_intervals(log);
    if (intervals.size() > sums.size()) {
      sums.resize(intervals.size(), 0.0);
      counts.resize(intervals.size(), 0);
    }
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      sums[i] += intervals[i];
      counts[i] += 1;
    }
  }
  if (sums.empty()) throw Error(ErrorKind::InsufficientData, "logs hold fewer than two full computes");
  for (std::size_t i = 0; i < sums.size(); ++i) sums[i] /= counts[i];
  return sums;
}

MetricsReport analyze_trace(const Trace& trace, const AnalysisOptions& options) {
  MetricsReport report;
  auto attempt = [](auto&& fn) -> std::optional<double> {
    try {
      return fn();
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  for (int m = 0; m < trace.n_modules(); ++m) {
    ModuleDiagnostics d;
    d.module = m;
    d.rsd_mean = attempt([&] {
      const auto series = s_ratio_rsd_series(trace, m, options.rsd_k_max);
      double sum = 0.0;
      for (const auto& v : series) sum += v.value;
      return sum / static_cast<double>(series.size());
    });
    d.r2_input = attempt([&] { return linearity_r2(trace, m, options.window); });
    d.r2_timestep = attempt([&] { return timestep_linearity_r2(trace, m, options.window); });
    d.consistency_input = attempt(
        [&] { return directional_consistency(trace, m, Stream::Input, options.consistency_k_max); });
    d.consistency_output = attempt(
        [&] { return directional_consistency(trace, m, Stream::Output, options.consistency_k_max); });
    if (trace.timesteps().size() >= 2) {
      d.l2_input = consecutive_l2_series(trace, m, Stream::Input);
      d.l2_output = consecutive_l2_series(trace, m, Stream::Output);
    }
    report.modules.push_back(std::move(d));
  }
  return report;
}

MetricsReport replay_policy(const Trace& trace, const PolicySpec& policy,
                            const SchedulerSpec& scheduler) {
  policy.validate();
  scheduler.validate();
  if (auto missing = trace.first_missing()) {
    throw Error(ErrorKind::InsufficientData, "cannot replay an incomplete trace");
  }
  const auto& ts = require_timesteps(trace, 1);
  const int total_steps = ts.front();
  const int n_modules = trace.n_modules();
  const int order = policy.history_order();

  std::vector<ModuleCache> caches;
  for (int l = 0; l < n_modules; ++l) caches.emplace_back(l, static_cast<std::size_t>(order) + 1);
  SchedulerState state = SchedulerState::with_warmup(warmup_steps(order));

  MetricsReport report;
  for (int t : ts) {
    std::vector<FeatureVec> observed;
    const int scoped = scheduler.needs_all_inputs() ? n_modules : 1;
    for (int l = 0; l < scoped; ++l) observed.push_back(trace.at(t, l, Stream::Input));

    const StepDecision decision = observe_and_decide(state, scheduler, observed, caches, t, order);
    StepMetrics step;
    step.t = t;
    step.action = decision.action;
    step.trigger_value = decision.trigger_value;
    step.warmup = decision.warmup;
    if (!decision.warmup) {
      step.eps_in = rel_l1_error(observed[0], predict_input(caches[0], t, order));
    }
    for (int l = 0; l < n_modules; ++l) {
      const auto li = static_cast<std::size_t>(l);
      const FeatureVec& in = trace.at(t, l, Stream::Input);
      const FeatureVec& out = trace.at(t, l, Stream::Output);
      if (decision.action == StepAction::FullCompute) {
        caches[li].on_full_compute(t, in, out);
        step.eps_out.push_back(0.0);
      } else {
        step.eps_out.push_back(
            rel_l1_error(out, predict_output(caches[li], policy, in, t, total_steps)));
      }
    }
    report.log.steps.push_back(std::move(step));
  }
  report.log.full_compute_log = state.full_compute_log;
  report.intervals = full_compute_intervals(state.full_compute_log);
  return report;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

void write_report_json(const MetricsReport& report, std::ostream& out) {
  nlohmann::json j;
  j["nfc"] = report.nfc();
  j["full_compute_log"] = report.log.full_compute_log;
  j["intervals"] = report.intervals;
  j["mean_eps_in"] = report.log.mean_eps_in();
  j["mean_eps_out"] = report.log.mean_eps_out();
  nlohmann::json modules = nlohmann::json::array();
  for (const auto& d : report.modules) {
    modules.push_back({{"module", d.module},
                       {"rsd_mean", optional_json(d.rsd_mean)},
                       {"r2_input", optional_json(d.r2_input)},
                       {"r2_timestep", optional_json(d.r2_timestep)},
                       {"consistency_input", optional_json(d.consistency_input)},
                       {"consistency_output", optional_json(d.consistency_output)}});
  }
  j["modules"] = std::move(modules);
  out << j.dump(2) << '\n';
}

}  // namespace relcache
