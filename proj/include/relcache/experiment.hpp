// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment plumbing behind the command-line tool: configs, evaluators that
// score a (policy, scheduler) pair over several seeds, tau sweeps, matched-NFC
// comparisons and the on-disk artifacts of each command.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relcache/analysis.hpp"
#include "relcache/forecast.hpp"
#include "relcache/scheduler.hpp"
#include "relcache/toy_diffusion.hpp"
#include "relcache/trace.hpp"

namespace relcache {

struct ExperimentConfig {
  PipelineConfig pipeline;
  PolicySpec policy = PolicySpec::rfe(1);
  SchedulerSpec scheduler = SchedulerSpec::rcs(0.2);
  std::vector<std::uint64_t> seeds{0};
  bool ghost_reference = false;
  std::filesystem::path output_dir = "out";
  int jobs = 1;

  void validate() const;
};

/// INI-style file: [pipeline] depth, width, seq_len, steps, seed, schedule;
/// [experiment] policy, scheduler, seeds, ghost_reference, output_dir, jobs.
/// Unknown sections or keys are InvalidConfig.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// "0,1,2" -> {0, 1, 2}.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
/// "0.05,0.1,inf" -> {0.05, 0.1, inf}.
std::vector<double> parse_double_list(std::string_view text);

struct RunSummary {
  int nfc = 0;
  double mean_eps_out = 0.0;
  double mean_eps_in = 0.0;
  double seconds = 0.0;
};

/// Scores a (policy, scheduler) pair on one of several seeds.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::size_t n_seeds() const = 0;
  virtual int total_steps() const = 0;
  virtual RunSummary evaluate(const PolicySpec& policy, const SchedulerSpec& scheduler,
                              std::size_t seed_index) const = 0;
};

/// Online runs of the toy pipeline with ghost reference.
class PipelineEvaluator final : public Evaluator {
 public:
  PipelineEvaluator(const PipelineConfig& config, std::vector<std::uint64_t> seeds);

  std::size_t n_seeds() const override { return seeds_.size(); }
  int total_steps() const override { return pipeline_.config().steps; }
  RunSummary evaluate(const PolicySpec& policy, const SchedulerSpec& scheduler,
                      std::size_t seed_index) const override;

 private:
  Pipeline pipeline_;
  std::vector<std::uint64_t> seeds_;
};

/// Offline replay over recorded traces, one trace per seed.
class TraceEvaluator final : public Evaluator {
 public:
  explicit TraceEvaluator(std::vector<Trace> traces);

  std::size_t n_seeds() const override { return traces_.size(); }
  int total_steps() const override;
  RunSummary evaluate(const PolicySpec& policy, const SchedulerSpec& scheduler,
                      std::size_t seed_index) const override;

 private:
  std::vector<Trace> traces_;
};

struct ComparisonRow {
  std::string policy;
  std::string scheduler;
  double nfc_mean = 0.0;
  double mean_eps_out = 0.0;
  double mean_eps_in = 0.0;
  double seconds = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;

  /// policy,scheduler,nfc_mean,mean_eps_out,mean_eps_in[,seconds]
  void write_csv(std::ostream& out, bool timing) const;
};

/// Mean of the per-seed summaries; seeds run on `jobs` threads.
ComparisonRow evaluate_row(const Evaluator& evaluator, const PolicySpec& policy,
                           const SchedulerSpec& scheduler, int jobs = 1);

/// One RCS row per tau, sorted by tau.
ComparisonTable sweep_tau(const Evaluator& evaluator, const PolicySpec& policy,
                          std::vector<double> tau_grid, RcsScope scope = RcsScope::FirstModule,
                          int jobs = 1);

inline constexpr double kBisectionLow = 0.0;
inline constexpr double kBisectionHigh = 10.0;
inline constexpr int kBisectionIterations = 30;
inline constexpr double kNfcTolerance = 0.5;

/// Threshold (RCS tau or distance delta) or interval (fixed N) whose mean NFC
/// lies within kNfcTolerance of target. Thresholds are bisected over
/// [kBisectionLow, kBisectionHigh]; intervals are scanned over 1..T.
SchedulerSpec match_nfc(const Evaluator& evaluator, const PolicySpec& policy,
                        const SchedulerSpec& base, double target_nfc, int jobs = 1);

struct CompareOptions {
  /// Tune the scheduler per policy to this mean NFC. When matching without a
  /// target, the first policy's NFC under the base scheduler is used.
  bool matched_nfc = false;
  std::optional<double> target_nfc;
  int jobs = 1;
};

ComparisonTable compare(const Evaluator& evaluator, const std::vector<PolicySpec>& policies,
                        const SchedulerSpec& scheduler, const CompareOptions& options = {});

struct RunArtifactOptions {
  bool record_trace = false;
  bool no_cache = false;
  bool timing = false;
};

/// Runs every seed of the config and writes metrics_seed<S>.csv,
/// summary_seed<S>.json and, when recording, trace_seed<S>.jsonl into
/// config.output_dir.
void cmd_run(const ExperimentConfig& config, const RunArtifactOptions& options);

/// Writes report.json, l2_series.csv, rsd_series.csv, metrics.csv and
/// interval_profile.csv for a trace, replaying `policy` under `scheduler`.
void cmd_analyze(const std::filesystem::path& trace_path, const std::filesystem::path& out_dir,
                 const PolicySpec& policy, const SchedulerSpec& scheduler,
                 const AnalysisOptions& options = {});

}  // namespace relcache
