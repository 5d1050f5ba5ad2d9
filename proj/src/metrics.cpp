// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcache/metrics.hpp"

#include <numeric>
#include <ostream>

#include "spec_string.hpp"

namespace relcache {

std::optional<double> StepMetrics::eps_out_mean() const {
  if (eps_out.empty()) return std::nullopt;
  return std::accumulate(eps_out.begin(), eps_out.end(), 0.0) /
         static_cast<double>(eps_out.size());
}

double MetricsLog::mean_eps_out() const {
  double sum = 0.0;
  int count = 0;
  for (const auto& s : steps) {
    if (s.action != StepAction::Predict) continue;
    if (auto m = s.eps_out_mean()) {
      sum += *m;
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / count;
}

double MetricsLog::mean_eps_in() const {
  double sum = 0.0;
  int count = 0;
  for (const auto& s : steps) {
    if (s.action == StepAction::Predict && s.eps_in) {
      sum += *s.eps_in;
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / count;
}

void write_metrics_csv(const MetricsLog& log, std::ostream& out) {
  out << "t,decision,trigger_value,eps_in,eps_out_mean\n";
  for (const auto& s : log.steps) {
    out << s.t << ',' << to_string(s.action) << ','
        << detail::format_double(s.trigger_value) << ',';
    if (s.eps_in) out << detail::format_double(*s.eps_in);
    out << ',';
    if (auto m = s.eps_out_mean()) out << detail::format_double(*m);
    out << '\n';
  }
}

std::vector<int> full_compute_intervals(const std::vector<int>& log) {
  std::vector<int> out;
  for (std::size_t i = 0; i + 1 < log.size(); ++i) out.push_back(log[i] - log[i + 1]);
  return out;
}

}  // namespace relcache
