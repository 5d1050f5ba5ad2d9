// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcache/experiment.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>

#include "json.hpp"
#include "relcache/error.hpp"
#include "spec_string.hpp"

namespace relcache {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) {
      throw Error(ErrorKind::InvalidConfig, "empty entry in list '" + std::string(text) + "'");
    }
    items.push_back(item.substr(b, e - b + 1));
  }
  if (items.empty()) throw Error(ErrorKind::InvalidConfig, "empty list");
  return items;
}

bool parse_bool(const std::string& text, std::string_view what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorKind::InvalidConfig,
              "invalid boolean for " + std::string(what) + ": '" + text + "'");
}

ScheduleKind parse_schedule_kind(const std::string& text) {
  if (text == "linear") return ScheduleKind::Linear;
  if (text == "cosine") return ScheduleKind::Cosine;
  throw Error(ErrorKind::InvalidConfig, "unknown schedule '" + text + "'");
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  return out;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorKind::IoError, "cannot create output directory " + dir.string());
  }
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; results keep index order.
template <typename Fn>
auto parallel_map(std::size_t n, int jobs, Fn fn) {
  using R = std::invoke_result_t<Fn, std::size_t>;
  std::vector<R> results;
  results.reserve(n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) results.push_back(fn(i));
    return results;
  }
  const auto batch = static_cast<std::size_t>(jobs);
  for (std::size_t start = 0; start < n; start += batch) {
    std::vector<std::future<R>> futures;
    for (std::size_t i = start; i < std::min(n, start + batch); ++i) {
      futures.push_back(std::async(std::launch::async, fn, i));
    }
    for (auto& f : futures) results.push_back(f.get());
  }
  return results;
}

RunSummary summarize(const MetricsLog& log, Clock::time_point start) {
  RunSummary s;
  s.nfc = log.nfc();
  s.mean_eps_out = log.mean_eps_out();
  s.mean_eps_in = log.mean_eps_in();
  s.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  pipeline.validate();
  policy.validate();
  scheduler.validate();
  if (seeds.empty()) throw Error(ErrorKind::InvalidConfig, "at least one seed is required");
  if (jobs < 1) throw Error(ErrorKind::InvalidConfig, "jobs must be >= 1");
  if (output_dir.empty()) throw Error(ErrorKind::InvalidConfig, "output_dir is empty");
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& item : split_list(text)) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error(ErrorKind::InvalidConfig, "invalid seed '" + item + "'");
    }
    seeds.push_back(v);
  }
  return seeds;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> values;
  for (const auto& item : split_list(text)) values.push_back(detail::parse_double(item, "list"));
  return values;
}

ExperimentConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("config: ") + e.message() + " at line " +
                                              std::to_string(e.line()));
  }
  ExperimentConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorKind::InvalidConfig, "config: key '" + section + "' outside a section");
    }
    for (const auto& [key, node] : body) {
      const std::string value = node.data();
      const std::string what = section + "." + key;
      if (section == "pipeline") {
        if (key == "depth") {
          config.pipeline.depth = detail::parse_int(value, what);
        } else if (key == "width") {
          config.pipeline.width = detail::parse_int(value, what);
        } else if (key == "seq_len") {
          config.pipeline.seq_len = detail::parse_int(value, what);
        } else if (key == "steps") {
          config.pipeline.steps = detail::parse_int(value, what);
        } else if (key == "seed") {
          config.pipeline.seed = parse_seed_list(value).at(0);
        } else if (key == "schedule") {
          config.pipeline.schedule = parse_schedule_kind(value);
        } else {
          throw Error(ErrorKind::InvalidConfig, "config: unknown key " + what);
        }
      } else if (section == "experiment") {
        if (key == "policy") {
          config.policy = PolicySpec::parse(value);
        } else if (key == "scheduler") {
          config.scheduler = SchedulerSpec::parse(value);
        } else if (key == "seeds") {
          config.seeds = parse_seed_list(value);
        } else if (key == "ghost_reference") {
          config.ghost_reference = parse_bool(value, what);
        } else if (key == "output_dir") {
          config.output_dir = value;
        } else if (key == "jobs") {
          config.jobs = detail::parse_int(value, what);
        } else {
          throw Error(ErrorKind::InvalidConfig, "config: unknown key " + what);
        }
      } else {
        throw Error(ErrorKind::InvalidConfig, "config: unknown section [" + section + "]");
      }
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path.string());
  return parse_config(in);
}

PipelineEvaluator::PipelineEvaluator(const PipelineConfig& config,
                                     std::vector<std::uint64_t> seeds)
    : pipeline_(Pipeline::build(config)), seeds_(std::move(seeds)) {
  if (seeds_.empty()) throw Error(ErrorKind::InvalidConfig, "at least one seed is required");
}

RunSummary PipelineEvaluator::evaluate(const PolicySpec& policy, const SchedulerSpec& scheduler,
                                       std::size_t seed_index) const {
  const auto start = Clock::now();
  RunOptions options;
  options.ghost_reference = true;
  const auto result = run_sampling(pipeline_, policy, scheduler, seeds_.at(seed_index), options);
  return summarize(result.metrics, start);
}

TraceEvaluator::TraceEvaluator(std::vector<Trace> traces) : traces_(std::move(traces)) {
  if (traces_.empty()) throw Error(ErrorKind::InvalidConfig, "at least one trace is required");
}

int TraceEvaluator::total_steps() const {
  return static_cast<int>(traces_.front().timesteps().size());
}

RunSummary TraceEvaluator::evaluate(const PolicySpec& policy, const SchedulerSpec& scheduler,
                                    std::size_t seed_index) const {
  const auto start = Clock::now();
  const auto report = replay_policy(traces_.at(seed_index), policy, scheduler);
  return summarize(report.log, start);
}

void ComparisonTable::write_csv(std::ostream& out, bool timing) const {
  out << "policy,scheduler,nfc_mean,mean_eps_out,mean_eps_in";
  if (timing) out << ",seconds";
  out << '\n';
  for (const auto& r : rows) {
    out << '"' << r.policy << "\",\"" << r.scheduler << "\"," << detail::format_double(r.nfc_mean)
        << ',' << detail::format_double(r.mean_eps_out) << ','
        << detail::format_double(r.mean_eps_in);
    if (timing) out << ',' << detail::format_double(r.seconds);
    out << '\n';
  }
}

ComparisonRow evaluate_row(const Evaluator& evaluator, const PolicySpec& policy,
                           const SchedulerSpec& scheduler, int jobs) {
  const auto runs = parallel_map(evaluator.n_seeds(), jobs, [&](std::size_t i) {
    return evaluator.evaluate(policy, scheduler, i);
  });
  ComparisonRow row;
  row.policy = policy.to_string();
  row.scheduler = scheduler.to_string();
  for (const auto& r : runs) {
    row.nfc_mean += r.nfc;
    row.mean_eps_out += r.mean_eps_out;
    row.mean_eps_in += r.mean_eps_in;
    row.seconds += r.seconds;
  }
  const auto n = static_cast<double>(runs.size());
  row.nfc_mean /= n;
  row.mean_eps_out /= n;
  row.mean_eps_in /= n;
  row.seconds /= n;
  return row;
}

ComparisonTable sweep_tau(const Evaluator& evaluator, const PolicySpec& policy,
                          std::vector<double> tau_grid, RcsScope scope, int jobs) {
  if (tau_grid.size() < 2) {
    throw Error(ErrorKind::InvalidConfig, "tau grid needs at least two points");
  }
  std::sort(tau_grid.begin(), tau_grid.end());
  ComparisonTable table;
  for (double tau : tau_grid) {
    table.rows.push_back(evaluate_row(evaluator, policy, SchedulerSpec::rcs(tau, scope), jobs));
  }
  return table;
}

SchedulerSpec match_nfc(const Evaluator& evaluator, const PolicySpec& policy,
                        const SchedulerSpec& base, double target_nfc, int jobs) {
  auto mean_nfc = [&](const SchedulerSpec& s) {
    return evaluate_row(evaluator, policy, s, jobs).nfc_mean;
  };
  auto within = [&](double nfc) { return std::abs(nfc - target_nfc) <= kNfcTolerance; };

  if (const auto* fixed = std::get_if<FixedInterval>(&base.kind)) {
    (void)fixed;
    for (int n = 1; n <= evaluator.total_steps(); ++n) {
      const auto spec = SchedulerSpec::fixed(n);
      if (within(mean_nfc(spec))) return spec;
    }
    throw Error(ErrorKind::BisectionFailed,
                "no interval N reaches NFC " + detail::format_double(target_nfc));
  }

  std::function<SchedulerSpec(double)> with_threshold;
  if (const auto* rcs = std::get_if<Rcs>(&base.kind)) {
    const RcsScope scope = rcs->scope;
    with_threshold = [scope](double tau) { return SchedulerSpec::rcs(tau, scope); };
  } else {
    with_threshold = [](double delta) { return SchedulerSpec::distance(delta); };
  }

  double lo = kBisectionLow;
  double hi = kBisectionHigh;
  for (int i = 0; i < kBisectionIterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const auto spec = with_threshold(mid);
    const double nfc = mean_nfc(spec);
    if (within(nfc)) return spec;
    if (nfc > target_nfc) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw Error(ErrorKind::BisectionFailed,
              "no threshold in [" + detail::format_double(kBisectionLow) + ", " +
                  detail::format_double(kBisectionHigh) + "] reaches NFC " +
                  detail::format_double(target_nfc) + " for " + policy.to_string());
}

ComparisonTable compare(const Evaluator& evaluator, const std::vector<PolicySpec>& policies,
                        const SchedulerSpec& scheduler, const CompareOptions& options) {
  if (policies.size() < 2) throw Error(ErrorKind::InvalidConfig, "compare needs >= 2 policies");
  ComparisonTable table;
  if (!options.matched_nfc) {
    for (const auto& p : policies) {
      table.rows.push_back(evaluate_row(evaluator, p, scheduler, options.jobs));
    }
    return table;
  }
  const double target = options.target_nfc
                            ? *options.target_nfc
                            : evaluate_row(evaluator, policies.front(), scheduler, options.jobs)
                                  .nfc_mean;
  for (const auto& p : policies) {
    const auto matched = match_nfc(evaluator, p, scheduler, target, options.jobs);
    table.rows.push_back(evaluate_row(evaluator, p, matched, options.jobs));
  }
  return table;
}

void cmd_run(const ExperimentConfig& config, const RunArtifactOptions& options) {
  config.validate();
  ensure_directory(config.output_dir);
  const Pipeline pipeline = Pipeline::build(config.pipeline);

  parallel_map(config.seeds.size(), config.jobs, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    const auto start = Clock::now();
    RunResult result;
    if (options.no_cache) {
      result.final_latent = reference_sampling(pipeline, seed);
      for (int t = config.pipeline.steps; t >= 1; --t) {
        StepMetrics step;
        step.t = t;
        result.metrics.steps.push_back(step);
        result.metrics.full_compute_log.push_back(t);
      }
    } else {
      RunOptions run_options;
      run_options.ghost_reference = config.ghost_reference;
      run_options.record_trace = options.record_trace;
      result = run_sampling(pipeline, config.policy, config.scheduler, seed, run_options);
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();

    const std::string suffix = "_seed" + std::to_string(seed);
    {
      auto out = open_output(config.output_dir / ("metrics" + suffix + ".csv"));
      write_metrics_csv(result.metrics, out);
    }
    {
      nlohmann::json j;
      j["seed"] = seed;
      j["policy"] = options.no_cache ? "none" : config.policy.to_string();
      j["scheduler"] = options.no_cache ? "none" : config.scheduler.to_string();
      j["steps"] = config.pipeline.steps;
      j["nfc"] = result.metrics.nfc();
      j["full_compute_log"] = result.metrics.full_compute_log;
      j["intervals"] = full_compute_intervals(result.metrics.full_compute_log);
      j["mean_eps_in"] = result.metrics.mean_eps_in();
      if (config.ghost_reference || options.record_trace) {
        j["mean_eps_out"] = result.metrics.mean_eps_out();
      }
      j["shape"] = result.final_latent.shape();
      j["final_latent"] = std::vector<double>(result.final_latent.values().begin(),
                                              result.final_latent.values().end());
      if (options.timing) j["wall_clock_seconds"] = seconds;
      auto out = open_output(config.output_dir / ("summary" + suffix + ".json"));
      out << j.dump(2) << '\n';
    }
    if (result.trace) trace_write(*result.trace, config.output_dir / ("trace" + suffix + ".jsonl"));
    return 0;
  });
}

void cmd_analyze(const fs::path& trace_path, const fs::path& out_dir, const PolicySpec& policy,
                 const SchedulerSpec& scheduler, const AnalysisOptions& options) {
  const Trace trace = trace_read(trace_path);
  ensure_directory(out_dir);

  MetricsReport report = replay_policy(trace, policy, scheduler);
  report.modules = analyze_trace(trace, options).modules;
  {
    auto out = open_output(out_dir / "report.json");
    write_report_json(report, out);
  }
  {
    auto out = open_output(out_dir / "metrics.csv");
    write_metrics_csv(report.log, out);
  }
  {
    auto out = open_output(out_dir / "l2_series.csv");
    out << "module,stream,index,value\n";
    for (const auto& d : report.modules) {
      for (const auto& [stream, series] :
           {std::pair{Stream::Input, &d.l2_input}, std::pair{Stream::Output, &d.l2_output}}) {
        for (std::size_t i = 0; i < series->size(); ++i) {
          out << d.module << ',' << to_string(stream) << ',' << i << ','
              << detail::format_double((*series)[i]) << '\n';
        }
      }
    }
  }
  {
    auto out = open_output(out_dir / "rsd_series.csv");
    out << "module,t,rsd\n";
    for (int m = 0; m < trace.n_modules(); ++m) {
      try {
        for (const auto& v : s_ratio_rsd_series(trace, m, options.rsd_k_max)) {
          out << m << ',' << v.t << ',' << detail::format_double(v.value) << '\n';
        }
      } catch (const Error&) {
        // undefined for this module; left out of the table
      }
    }
  }
  {
    auto out = open_output(out_dir / "interval_profile.csv");
    out << "index,mean_interval\n";
    const std::vector<std::vector<int>> logs{report.log.full_compute_log};
    if (report.log.full_compute_log.size() >= 2) {
      const auto profile = interval_profile(logs);
      for (std::size_t i = 0; i < profile.size(); ++i) {
        out << i << ',' << detail::format_double(profile[i]) << '\n';
      }
    }
  }
}

}  // namespace relcache
