// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcache/toy_diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "relcache/error.hpp"

namespace relcache {

namespace {

constexpr int kTrainSteps = 1000;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t a, std::uint32_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), a, b};
  return std::mt19937_64(seq);
}

std::vector<double> gaussian_vector(std::size_t n, double mean, double stddev,
                                    std::mt19937_64& rng) {
  std::normal_distribution<double> dist(mean, stddev);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

PreOpParams make_pre_op(std::size_t width, std::mt19937_64& rng) {
  PreOpParams p;
  p.norm_scale = gaussian_vector(width, 1.0, 0.1, rng);
  p.norm_shift = gaussian_vector(width, 0.0, 0.1, rng);
  const double s = 1.0 / std::sqrt(static_cast<double>(kTimeEmbeddingDim));
  p.mod_scale = Matrix::gaussian(kTimeEmbeddingDim, width, 0.3 * s, rng);
  p.mod_shift = Matrix::gaussian(kTimeEmbeddingDim, width, 0.3 * s, rng);
  return p;
}

double gelu(double x) {
  constexpr double k = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

std::size_t token_count(const FeatureVec& x, std::size_t channels) {
  if (channels == 0 || x.shape().back() != channels) {
    throw Error(ErrorKind::ShapeMismatch,
                "feature channel extent does not match parameter width");
  }
  return x.size() / channels;
}

}  // namespace

void PipelineConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (depth < 1 || depth > 64) bad("depth must be in [1, 64]");
  if (width < 2 || width > 1024) bad("width must be in [2, 1024]");
  if (seq_len < 1 || seq_len > 256) bad("seq_len must be in [1, 256]");
  if (steps < 4 || steps > kTrainSteps) bad("steps must be in [4, 1000]");
}

AlphaSchedule::AlphaSchedule(std::vector<double> alphas) : alphas_(std::move(alphas)) {
  if (alphas_.empty()) throw Error(ErrorKind::InvalidArgument, "empty alpha schedule");
  for (std::size_t t = 0; t < alphas_.size(); ++t) {
    if (!(alphas_[t] > 0.0 && alphas_[t] <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "alphas must lie in (0, 1]");
    }
    if (t > 0 && alphas_[t] > alphas_[t - 1]) {
      throw Error(ErrorKind::InvalidArgument, "alphas must not increase with t");
    }
  }
}

AlphaSchedule AlphaSchedule::make(ScheduleKind kind, int steps) {
  if (steps < 1 || steps > kTrainSteps) {
    throw Error(ErrorKind::InvalidConfig, "schedule steps must be in [1, 1000]");
  }
  std::vector<double> train(kTrainSteps);
  if (kind == ScheduleKind::Linear) {
    double prod = 1.0;
    for (int i = 0; i < kTrainSteps; ++i) {
      const double beta = 1e-4 + (0.02 - 1e-4) * i / (kTrainSteps - 1);
      prod *= 1.0 - beta;
      train[static_cast<std::size_t>(i)] = prod;
    }
  } else {
    auto f = [](double s) {
      const double x = (s / kTrainSteps + 0.008) / 1.008 * std::numbers::pi / 2.0;
      return std::cos(x) * std::cos(x);
    };
    double prod = 1.0;
    for (int i = 0; i < kTrainSteps; ++i) {
      const double beta = std::min(1.0 - f(i + 1) / f(i), 0.999);
      prod *= 1.0 - beta;
      train[static_cast<std::size_t>(i)] = prod;
    }
  }
  std::vector<double> alphas(static_cast<std::size_t>(steps) + 1);
  alphas[0] = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const auto idx = static_cast<std::size_t>(
        std::lround(static_cast<double>(t) * kTrainSteps / steps) - 1);
    alphas[static_cast<std::size_t>(t)] = train[idx];
  }
  return AlphaSchedule(std::move(alphas));
}

Matrix Matrix::gaussian(std::size_t rows, std::size_t cols, double stddev,
                        std::mt19937_64& rng) {
  return {rows, cols, gaussian_vector(rows * cols, 0.0, stddev, rng)};
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) m.data[i * n + i] = 1.0;
  return m;
}

FeatureVec matmul(const FeatureVec& x, const Matrix& w) {
  const std::size_t tokens = token_count(x, w.rows);
  std::vector<double> out(tokens * w.cols, 0.0);
  const auto in = x.values();
  for (std::size_t i = 0; i < tokens; ++i) {
    for (std::size_t k = 0; k < w.rows; ++k) {
      const double a = in[i * w.rows + k];
      const double* row = &w.data[k * w.cols];
      double* dst = &out[i * w.cols];
      for (std::size_t j = 0; j < w.cols; ++j) dst[j] += a * row[j];
    }
  }
  return FeatureVec(std::move(out), {tokens, w.cols});
}

BlockParams BlockParams::make(std::size_t width, std::uint64_t seed, int block_index) {
  auto rng = make_rng(seed, 1, static_cast<std::uint32_t>(block_index));
  const double s = 1.0 / std::sqrt(static_cast<double>(width));
  BlockParams b;
  b.attn_pre = make_pre_op(width, rng);
  b.attn.wq = Matrix::gaussian(width, width, s, rng);
  b.attn.wk = Matrix::gaussian(width, width, s, rng);
  b.attn.wv = Matrix::gaussian(width, width, s, rng);
  b.mlp_pre = make_pre_op(width, rng);
  const std::size_t hidden = 2 * width;
  b.mlp.w1 = Matrix::gaussian(width, hidden, s, rng);
  b.mlp.b1 = gaussian_vector(hidden, 0.0, 0.1, rng);
  b.mlp.w2 = Matrix::gaussian(hidden, width, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  b.mlp.b2 = gaussian_vector(width, 0.0, 0.1, rng);
  b.mlp.activation = Activation::Gelu;
  return b;
}

std::vector<double> timestep_embedding(double s) {
  constexpr std::size_t half = kTimeEmbeddingDim / 2;
  std::vector<double> emb(kTimeEmbeddingDim);
  for (std::size_t j = 0; j < half; ++j) {
    const double freq = 0.5 * std::numbers::pi * static_cast<double>(j + 1);
    emb[j] = std::sin(s * freq);
    emb[j + half] = std::cos(s * freq);
  }
  return emb;
}

std::pair<std::vector<double>, std::vector<double>> timestep_modulation(
    double s, const PreOpParams& params) {
  const auto emb = timestep_embedding(s);
  const std::size_t width = params.mod_scale.cols;
  std::vector<double> scale(width, 0.0), shift(width, 0.0);
  for (std::size_t j = 0; j < kTimeEmbeddingDim; ++j) {
    for (std::size_t c = 0; c < width; ++c) {
      scale[c] += emb[j] * params.mod_scale(j, c);
      shift[c] += emb[j] * params.mod_shift(j, c);
    }
  }
  return {std::move(scale), std::move(shift)};
}

FeatureVec block_pre_op(const FeatureVec& hidden, double s, const PreOpParams& params) {
  const std::size_t width = params.norm_scale.size();
  const std::size_t tokens = token_count(hidden, width);
  const auto [scale, shift] = timestep_modulation(s, params);
  const auto in = hidden.values();
  std::vector<double> out(hidden.size());
  for (std::size_t i = 0; i < tokens; ++i) {
    const double* row = &in[i * width];
    double mean = 0.0;
    for (std::size_t c = 0; c < width; ++c) mean += row[c];
    mean /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t c = 0; c < width; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<double>(width);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t c = 0; c < width; ++c) {
      const double normed = (row[c] - mean) * inv * params.norm_scale[c] + params.norm_shift[c];
      out[i * width + c] = normed * (1.0 + scale[c]) + shift[c];
    }
  }
  return FeatureVec(std::move(out), hidden.shape());
}

FeatureVec attention_op(const FeatureVec& input, const AttentionWeights& w) {
  const std::size_t width = w.wq.rows;
  const std::size_t tokens = token_count(input, width);
  const FeatureVec q = matmul(input, w.wq);
  const FeatureVec k = matmul(input, w.wk);
  const FeatureVec v = matmul(input, w.wv);
  const std::size_t d = w.wq.cols;
  const std::size_t dv = w.wv.cols;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> out(tokens * dv, 0.0);
  std::vector<double> weights(tokens);
  for (std::size_t i = 0; i < tokens; ++i) {
    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < tokens; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q[i * d + c] * k[j * d + c];
      weights[j] = s * inv_sqrt_d;
      max_score = std::max(max_score, weights[j]);
    }
    double total = 0.0;
    for (auto& wj : weights) {
      wj = std::exp(wj - max_score);
      total += wj;
    }
    for (std::size_t j = 0; j < tokens; ++j) {
      const double a = weights[j] / total;
      for (std::size_t c = 0; c < dv; ++c) out[i * dv + c] += a * v[j * dv + c];
    }
  }
  return FeatureVec(std::move(out), {tokens, dv});
}

FeatureVec mlp_op(const FeatureVec& input, const MlpWeights& w) {
  FeatureVec h = matmul(input, w.w1);
  std::vector<double> act(h.data());
  for (std::size_t i = 0; i < act.size(); ++i) {
    const double z = act[i] + (w.b1.empty() ? 0.0 : w.b1[i % w.w1.cols]);
    act[i] = w.activation == Activation::Gelu ? gelu(z) : z;
  }
  FeatureVec out = matmul(FeatureVec(std::move(act), h.shape()), w.w2);
  if (w.b2.empty()) return out;
  std::vector<double> biased(out.data());
  for (std::size_t i = 0; i < biased.size(); ++i) biased[i] += w.b2[i % w.w2.cols];
  return FeatureVec(std::move(biased), out.shape());
}

FeatureVec block_expensive_op(const FeatureVec& input, const BlockParams& params,
                              ModuleKind kind) {
  return kind == ModuleKind::Attention ? attention_op(input, params.attn)
                                       : mlp_op(input, params.mlp);
}

FeatureVec forward_noise(const FeatureVec& x0, int t, const AlphaSchedule& schedule,
                         const FeatureVec& noise) {
  if (!x0.same_shape(noise)) throw Error(ErrorKind::ShapeMismatch, "x0 and noise differ in shape");
  const double a = schedule[t];
  return std::sqrt(a) * x0 + std::sqrt(1.0 - a) * noise;
}

FeatureVec ddim_step(const FeatureVec& x_t, const FeatureVec& eps_pred, int t,
                     const AlphaSchedule& schedule) {
  if (!x_t.same_shape(eps_pred)) throw Error(ErrorKind::ShapeMismatch, "x_t and eps differ in shape");
  if (t < 1) throw Error(ErrorKind::InvalidArgument, "ddim_step needs t >= 1");
  const double a_t = schedule[t];
  const double a_prev = schedule[t - 1];
  const FeatureVec x0_pred = (1.0 / std::sqrt(a_t)) * (x_t - std::sqrt(1.0 - a_t) * eps_pred);
  return std::sqrt(a_prev) * x0_pred + std::sqrt(1.0 - a_prev) * eps_pred;
}

FeatureVec gaussian_feature(const Shape& shape, std::mt19937_64& rng) {
  return FeatureVec(gaussian_vector(shape_size(shape), 0.0, 1.0, rng), shape);
}

Pipeline Pipeline::build(const PipelineConfig& config) {
  config.validate();
  Pipeline p;
  p.config_ = config;
  p.schedule_ = AlphaSchedule::make(config.schedule, config.steps);
  const auto width = static_cast<std::size_t>(config.width);
  auto rng = make_rng(config.seed, 0, 0);
  const double s = 1.0 / std::sqrt(static_cast<double>(width));
  p.embed_ = Matrix::gaussian(width, width, s, rng);
  p.head_ = Matrix::gaussian(width, width, s, rng);
  for (int b = 0; b < config.depth; ++b) {
    p.blocks_.push_back(BlockParams::make(width, config.seed, b));
  }
  return p;
}

Shape Pipeline::latent_shape() const {
  return {static_cast<std::size_t>(config_.seq_len), static_cast<std::size_t>(config_.width)};
}

ModuleKind Pipeline::module_kind(int module) const {
  if (module < 0 || module >= n_modules()) {
    throw Error(ErrorKind::InvalidArgument, "module index out of range");
  }
  return module % 2 == 0 ? ModuleKind::Attention : ModuleKind::Mlp;
}

FeatureVec Pipeline::embed(const FeatureVec& latent) const { return matmul(latent, embed_); }

FeatureVec Pipeline::module_input(int module, const FeatureVec& hidden, int t) const {
  const auto& block = blocks_.at(static_cast<std::size_t>(module / 2));
  const double s = static_cast<double>(t) / static_cast<double>(config_.steps);
  return block_pre_op(hidden, s,
                      module_kind(module) == ModuleKind::Attention ? block.attn_pre
                                                                   : block.mlp_pre);
}

FeatureVec Pipeline::module_output(int module, const FeatureVec& input) const {
  return block_expensive_op(input, blocks_.at(static_cast<std::size_t>(module / 2)),
                            module_kind(module));
}

FeatureVec Pipeline::predict_noise(const FeatureVec& hidden) const {
  const std::size_t width = head_.rows;
  const std::size_t tokens = token_count(hidden, width);
  std::vector<double> normed(hidden.size());
  const auto in = hidden.values();
  for (std::size_t i = 0; i < tokens; ++i) {
    double mean = 0.0, var = 0.0;
    for (std::size_t c = 0; c < width; ++c) mean += in[i * width + c];
    mean /= static_cast<double>(width);
    for (std::size_t c = 0; c < width; ++c) {
      var += (in[i * width + c] - mean) * (in[i * width + c] - mean);
    }
    const double inv = 1.0 / std::sqrt(var / static_cast<double>(width) + kLayerNormEps);
    for (std::size_t c = 0; c < width; ++c) normed[i * width + c] = (in[i * width + c] - mean) * inv;
  }
  return matmul(FeatureVec(std::move(normed), hidden.shape()), head_);
}

FeatureVec Pipeline::initial_latent(std::uint64_t seed) const {
  auto rng = make_rng(seed, 2, 0);
  return gaussian_feature(latent_shape(), rng);
}

}  // namespace relcache
