// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

// A small deterministic diffusion-transformer stand-in: seeded attention/MLP
// blocks with LayerNorm + timestep modulation pre-ops, a linear noise head and
// a DDIM sampler, plus the cached sampling loop that drives the forecast
// policies and schedulers over it.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "relcache/feature.hpp"
#include "relcache/forecast.hpp"
#include "relcache/metrics.hpp"
#include "relcache/scheduler.hpp"
#include "relcache/trace.hpp"

namespace relcache {

enum class ScheduleKind { Linear, Cosine };

struct PipelineConfig {
  int depth = 3;
  int width = 64;
  int seq_len = 8;
  int steps = 50;
  std::uint64_t seed = 0;
  ScheduleKind schedule = ScheduleKind::Linear;

  void validate() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Cumulative signal levels alpha_0..alpha_T with alpha_0 = 1, decreasing in t.
class AlphaSchedule {
 public:
  explicit AlphaSchedule(std::vector<double> alphas);

  /// DDPM-style 1000-step schedule (linear betas or cosine) subsampled to
  /// `steps` DDIM steps.
  static AlphaSchedule make(ScheduleKind kind, int steps);

  double operator[](int t) const { return alphas_.at(static_cast<std::size_t>(t)); }
  int steps() const { return static_cast<int>(alphas_.size()) - 1; }
  const std::vector<double>& values() const { return alphas_; }

  friend bool operator==(const AlphaSchedule&, const AlphaSchedule&) = default;

 private:
  std::vector<double> alphas_;
};

/// Dense row-major matrix; features are (tokens x channels) and multiply on
/// the left.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  static Matrix gaussian(std::size_t rows, std::size_t cols, double stddev,
                         std::mt19937_64& rng);
  static Matrix identity(std::size_t n);

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// (tokens x rows) * (rows x cols) -> (tokens x cols).
FeatureVec matmul(const FeatureVec& x, const Matrix& w);

enum class ModuleKind { Attention, Mlp };
enum class Activation { Gelu, Identity };

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr std::size_t kTimeEmbeddingDim = 16;

/// LayerNorm affine parameters plus the projections that turn the timestep
/// embedding into per-channel scale and shift.
struct PreOpParams {
  std::vector<double> norm_scale;
  std::vector<double> norm_shift;
  Matrix mod_scale;  // kTimeEmbeddingDim x width
  Matrix mod_shift;
  friend bool operator==(const PreOpParams&, const PreOpParams&) = default;
};

struct AttentionWeights {
  Matrix wq, wk, wv;
  friend bool operator==(const AttentionWeights&, const AttentionWeights&) = default;
};

struct MlpWeights {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  Activation activation = Activation::Gelu;
  friend bool operator==(const MlpWeights&, const MlpWeights&) = default;
};

struct BlockParams {
  PreOpParams attn_pre;
  AttentionWeights attn;
  PreOpParams mlp_pre;
  MlpWeights mlp;

  /// Deterministic in (seed, block index).
  static BlockParams make(std::size_t width, std::uint64_t seed, int block_index);
  friend bool operator==(const BlockParams&, const BlockParams&) = default;
};

/// Sinusoidal embedding of the normalized time s = t / T; frequencies are
/// multiples of pi / 2 so the features vary smoothly across steps.
std::vector<double> timestep_embedding(double s);

/// Per-channel (scale, shift) the pre-op applies at normalized time s.
std::pair<std::vector<double>, std::vector<double>> timestep_modulation(
    double s, const PreOpParams& params);

/// LayerNorm over channels of each token, the LayerNorm affine, then the
/// timestep-conditioned scale and shift. Produces a module input.
FeatureVec block_pre_op(const FeatureVec& hidden, double s, const PreOpParams& params);

/// softmax(Q K^T / sqrt(d)) V over the tokens.
FeatureVec attention_op(const FeatureVec& input, const AttentionWeights& w);
/// dense -> activation -> dense.
FeatureVec mlp_op(const FeatureVec& input, const MlpWeights& w);
FeatureVec block_expensive_op(const FeatureVec& input, const BlockParams& params,
                              ModuleKind kind);

/// sqrt(a_t) x0 + sqrt(1 - a_t) noise.
FeatureVec forward_noise(const FeatureVec& x0, int t, const AlphaSchedule& schedule,
                         const FeatureVec& noise);

/// One deterministic DDIM update from t to t-1.
FeatureVec ddim_step(const FeatureVec& x_t, const FeatureVec& eps_pred, int t,
                     const AlphaSchedule& schedule);

/// Standard normal feature of the given shape.
FeatureVec gaussian_feature(const Shape& shape, std::mt19937_64& rng);

class Pipeline {
 public:
  static Pipeline build(const PipelineConfig& config);

  const PipelineConfig& config() const noexcept { return config_; }
  const AlphaSchedule& schedule() const noexcept { return schedule_; }
  const std::vector<BlockParams>& blocks() const noexcept { return blocks_; }
  int n_modules() const noexcept { return 2 * config_.depth; }
  Shape latent_shape() const;
  /// Module l is the attention (even l) or MLP (odd l) of block l / 2.
  ModuleKind module_kind(int module) const;

  FeatureVec embed(const FeatureVec& latent) const;
  FeatureVec module_input(int module, const FeatureVec& hidden, int t) const;
  FeatureVec module_output(int module, const FeatureVec& input) const;
  FeatureVec predict_noise(const FeatureVec& hidden) const;
  FeatureVec initial_latent(std::uint64_t seed) const;

  friend bool operator==(const Pipeline&, const Pipeline&) = default;

 private:
  PipelineConfig config_;
  AlphaSchedule schedule_{std::vector<double>{1.0}};
  Matrix embed_;
  Matrix head_;
  std::vector<BlockParams> blocks_;
};

struct RunOptions {
  /// Measure every predicted output against the expensive op applied to the
  /// same module input; does not alter the cached trajectory.
  bool ghost_reference = false;
  /// Emit a trace of module inputs and ground-truth outputs (implies ghost
  /// reference).
  bool record_trace = false;
  bool keep_predictions = false;
};

struct RunResult {
  FeatureVec final_latent;
  MetricsLog metrics;
  std::optional<Trace> trace;
  SchedulerState scheduler_state;
};

/// Denoises from t = T down to 1, choosing per step between full
/// computation and policy prediction for every module.
RunResult run_sampling(const Pipeline& pipeline, const PolicySpec& policy,
                       const SchedulerSpec& scheduler, std::uint64_t seed,
                       const RunOptions& options = {});

/// Plain sampling with every module computed at every step.
FeatureVec reference_sampling(const Pipeline& pipeline, std::uint64_t seed);

}  // namespace relcache
