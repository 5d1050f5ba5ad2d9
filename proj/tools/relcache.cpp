// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

// relcache: run, record, sweep, compare and analyze feature-cache policies on
// the toy diffusion pipeline or on recorded traces.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "relcache/error.hpp"
#include "relcache/experiment.hpp"
#include "relcache/synthetic.hpp"

namespace fs = std::filesystem;
using namespace relcache;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kRuntime = 2, kFormat = 3 };

struct CommonFlags {
  std::string config;
  std::string seeds;
  std::string policy;
  std::string scheduler;
  std::string out;
  bool ghost_reference = false;
  bool no_cache = false;
  bool timing = false;
  std::optional<int> depth, width, seq_len, steps, jobs;
  std::optional<std::uint64_t> model_seed;
  std::string schedule;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool single_policy = true) {
  cmd->add_option("--config", f.config, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seeds, "comma-separated sampling seeds");
  if (single_policy) cmd->add_option("--policy", f.policy, "forecast policy spec");
  cmd->add_option("--scheduler", f.scheduler, "scheduler spec");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--ghost-reference", f.ghost_reference, "measure prediction error online");
  cmd->add_flag("--timing", f.timing, "include wall-clock seconds in outputs");
  cmd->add_option("--depth", f.depth, "transformer blocks");
  cmd->add_option("--width", f.width, "channels");
  cmd->add_option("--seq-len", f.seq_len, "tokens");
  cmd->add_option("--steps", f.steps, "denoising steps T");
  cmd->add_option("--model-seed", f.model_seed, "weight seed");
  cmd->add_option("--schedule", f.schedule, "noise schedule")
      ->check(CLI::IsMember({"linear", "cosine"}));
  cmd->add_option("--jobs", f.jobs, "parallel seeds");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (!f.seeds.empty()) c.seeds = parse_seed_list(f.seeds);
  if (!f.policy.empty()) c.policy = PolicySpec::parse(f.policy);
  if (!f.scheduler.empty()) c.scheduler = SchedulerSpec::parse(f.scheduler);
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.ghost_reference) c.ghost_reference = true;
  if (f.depth) c.pipeline.depth = *f.depth;
  if (f.width) c.pipeline.width = *f.width;
  if (f.seq_len) c.pipeline.seq_len = *f.seq_len;
  if (f.steps) c.pipeline.steps = *f.steps;
  if (f.model_seed) c.pipeline.seed = *f.model_seed;
  if (f.schedule == "cosine") c.pipeline.schedule = ScheduleKind::Cosine;
  if (f.schedule == "linear") c.pipeline.schedule = ScheduleKind::Linear;
  if (f.jobs) c.jobs = *f.jobs;
  c.validate();
  return c;
}

std::unique_ptr<Evaluator> make_evaluator(const ExperimentConfig& c,
                                          const std::vector<std::string>& traces) {
  if (traces.empty()) return std::make_unique<PipelineEvaluator>(c.pipeline, c.seeds);
  std::vector<Trace> loaded;
  for (const auto& p : traces) loaded.push_back(trace_read(fs::path(p)));
  return std::make_unique<TraceEvaluator>(std::move(loaded));
}

void emit_table(const ComparisonTable& table, const ExperimentConfig& c, const std::string& name,
                bool timing) {
  fs::create_directories(c.output_dir);
  std::ofstream out(c.output_dir / name, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + (c.output_dir / name).string());
  table.write_csv(out, timing);
  table.write_csv(std::cout, timing);
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidArgument:
      return kUsage;
    case ErrorKind::FormatError:
      return kFormat;
    default:
      return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-cache forecasting for diffusion transformers", "relcache"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "sample with caching and write metrics");
  add_common(run, run_flags);
  run->add_flag("--no-cache", run_flags.no_cache, "compute every module at every step");

  CommonFlags record_flags;
  auto* record = app.add_subcommand("record", "run and emit a ghost-reference trace");
  add_common(record, record_flags);

  CommonFlags sweep_flags;
  std::string tau_grid;
  std::string scope = "first";
  std::vector<std::string> sweep_traces;
  auto* sweep = app.add_subcommand("sweep-tau", "NFC and error across RCS thresholds");
  add_common(sweep, sweep_flags);
  sweep->add_option("--tau-grid", tau_grid, "comma-separated thresholds")->required();
  sweep->add_option("--scope", scope, "RCS error scope")->check(CLI::IsMember({"first", "all"}));
  sweep->add_option("--trace", sweep_traces, "replay these traces instead of the pipeline");

  CommonFlags compare_flags;
  std::vector<std::string> compare_policies;
  std::vector<std::string> compare_traces;
  bool matched_nfc = false;
  std::optional<double> target_nfc;
  auto* cmp = app.add_subcommand("compare", "compare policies, optionally at matched NFC");
  add_common(cmp, compare_flags, false);
  cmp->add_option("--policy", compare_policies, "policy spec (repeat)")->required();
  cmp->add_flag("--matched-nfc", matched_nfc, "tune the scheduler to a common NFC");
  cmp->add_option("--target-nfc", target_nfc, "NFC to match (default: first policy's)");
  cmp->add_option("--trace", compare_traces, "replay these traces instead of the pipeline");

  std::string analyze_trace_path;
  std::string analyze_out = "analysis";
  std::string analyze_policy = "rfe:m=1";
  std::string analyze_scheduler = "rcs:tau=0.2";
  AnalysisOptions analysis_options;
  auto* analyze = app.add_subcommand("analyze", "diagnostics and policy replay on a trace");
  analyze->add_option("trace", analyze_trace_path, "trace file")->required();
  analyze->add_option("--out", analyze_out, "output directory");
  analyze->add_option("--policy", analyze_policy, "policy to replay");
  analyze->add_option("--scheduler", analyze_scheduler, "scheduler to replay");
  analyze->add_option("--window", analysis_options.window, "R^2 window");
  analyze->add_option("--rsd-k", analysis_options.rsd_k_max, "largest k for s_k");
  analyze->add_option("--consistency-k", analysis_options.consistency_k_max,
                      "largest k for directional consistency");

  SyntheticParams synth_params;
  std::string synth_kind = "affine-constant";
  std::string synth_out;
  std::optional<double> synth_gain;
  auto* synth = app.add_subcommand("synth", "write a synthetic trajectory trace");
  synth->add_option("--kind", synth_kind, "polynomial|affine-constant|affine-drifting|irregular");
  synth->add_option("--degree", synth_params.degree, "polynomial degree");
  synth->add_option("--steps", synth_params.steps, "timesteps");
  synth->add_option("--dim", synth_params.dim, "feature size");
  synth->add_option("--modules", synth_params.n_modules, "modules");
  synth->add_option("--seed", synth_params.seed, "seed");
  synth->add_option("--gain", synth_gain, "isotropic gain (A = gain I, b = 0)");
  synth->add_option("--irregularity", synth_params.irregularity, "log-normal sigma of r(t)");
  synth->add_option("--drift-rate", synth_params.drift_rate, "direction rotation per step");
  synth->add_option("--out", synth_out, "trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  std::string component = "relcache";
  try {
    if (run->parsed() || record->parsed()) {
      component = run->parsed() ? "run" : "record";
      const auto& f = run->parsed() ? run_flags : record_flags;
      RunArtifactOptions options;
      options.record_trace = record->parsed();
      options.no_cache = f.no_cache;
      options.timing = f.timing;
      cmd_run(resolve(f), options);
    } else if (sweep->parsed()) {
      component = "sweep-tau";
      const auto c = resolve(sweep_flags);
      const auto evaluator = make_evaluator(c, sweep_traces);
      const auto table = sweep_tau(*evaluator, c.policy, parse_double_list(tau_grid),
                                   scope == "all" ? RcsScope::AllModules : RcsScope::FirstModule,
                                   c.jobs);
      emit_table(table, c, "sweep_tau.csv", sweep_flags.timing);
    } else if (cmp->parsed()) {
      component = "compare";
      const auto c = resolve(compare_flags);
      std::vector<PolicySpec> policies;
      for (const auto& p : compare_policies) policies.push_back(PolicySpec::parse(p));
      const auto evaluator = make_evaluator(c, compare_traces);
      CompareOptions options;
      options.matched_nfc = matched_nfc;
      options.target_nfc = target_nfc;
      options.jobs = c.jobs;
      emit_table(compare(*evaluator, policies, c.scheduler, options), c, "compare.csv",
                 compare_flags.timing);
    } else if (analyze->parsed()) {
      component = "analyze";
      cmd_analyze(analyze_trace_path, analyze_out, PolicySpec::parse(analyze_policy),
                  SchedulerSpec::parse(analyze_scheduler), analysis_options);
    } else if (synth->parsed()) {
      component = "synth";
      synth_params.kind = parse_synthetic_kind(synth_kind);
      synth_params.isotropic_gain = synth_gain;
      trace_write(synthetic_trajectory(synth_params), fs::path(synth_out));
    }
  } catch (const Error& e) {
    std::cerr << "relcache " << component << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "relcache " << component << ": " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
