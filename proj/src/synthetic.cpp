// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcache/synthetic.hpp"

#include <cmath>
#include <string>

#include "relcache/error.hpp"
#include "relcache/toy_diffusion.hpp"

namespace relcache {

namespace {

std::vector<double> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> u(dim);
  double norm = 0.0;
  for (auto& x : u) {
    x = n(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : u) x /= norm;
  return u;
}

// Unit vector orthogonal to `a` (Gram-Schmidt on a random draw).
std::vector<double> orthogonal_unit(const std::vector<double>& a, std::mt19937_64& rng) {
  auto b = random_unit(a.size(), rng);
  double proj = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) proj += a[i] * b[i];
  double norm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    b[i] -= proj * a[i];
    norm += b[i] * b[i];
  }
  norm = std::sqrt(norm);
  for (auto& x : b) x /= norm;
  return b;
}

struct AffineMap {
  Matrix a;
  std::vector<double> b;

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y(b);
    for (std::size_t r = 0; r < a.rows; ++r) {
      for (std::size_t c = 0; c < a.cols; ++c) y[r] += a(r, c) * x[c];
    }
    return y;
  }
};

AffineMap make_map(const SyntheticParams& p, std::mt19937_64& rng) {
  const auto dim = static_cast<std::size_t>(p.dim);
  if (p.isotropic_gain) {
    Matrix a = Matrix::identity(dim);
    for (auto& v : a.data) v *= *p.isotropic_gain;
    return {std::move(a), std::vector<double>(dim, 0.0)};
  }
  AffineMap m{Matrix::gaussian(dim, dim, 1.0 / std::sqrt(static_cast<double>(dim)), rng), {}};
  std::normal_distribution<double> n(0.0, 1.0);
  m.b.resize(dim);
  for (auto& x : m.b) x = n(rng);
  return m;
}

void fill_module(Trace& trace, int module, const SyntheticParams& p) {
  std::seed_seq seq{static_cast<std::uint32_t>(p.seed), static_cast<std::uint32_t>(p.seed >> 32),
                    static_cast<std::uint32_t>(module), 7u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto dim = static_cast<std::size_t>(p.dim);
  const Shape shape{dim};

  if (p.kind == SyntheticKind::PolynomialDegree) {
    std::vector<double> ci((p.degree + 1) * dim), co((p.degree + 1) * dim);
    for (auto& c : ci) c = n(rng);
    for (auto& c : co) c = n(rng);
    for (int t : trace.timesteps()) {
      const double s = static_cast<double>(t) / p.steps;
      std::vector<double> in(dim, 0.0), out(dim, 0.0);
      for (std::size_t e = 0; e < dim; ++e) {
        double pw = 1.0;
        for (int j = 0; j <= p.degree; ++j) {
          in[e] += ci[j * dim + e] * pw;
          out[e] += co[j * dim + e] * pw;
          pw *= s;
        }
      }
      trace.set(t, module, Stream::Input, FeatureVec(std::move(in), shape));
      trace.set(t, module, Stream::Output, FeatureVec(std::move(out), shape));
    }
    return;
  }

  std::vector<double> base(dim);
  for (auto& x : base) x = n(rng);
  double base_norm = 0.0;
  for (double x : base) base_norm += x * x;
  base_norm = std::sqrt(base_norm);
  const auto u = random_unit(dim, rng);
  const auto v = orthogonal_unit(u, rng);
  const AffineMap map = make_map(p, rng);
  const auto r = irregular_magnitude_profile(p.steps, p.irregularity, rng);
  const double travel = p.travel * base_norm;

  const auto& ts = trace.timesteps();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double angle = p.kind == SyntheticKind::AffineDriftingDirection
                             ? p.drift_rate * static_cast<double>(i)
                             : 0.0;
    std::vector<double> in(dim);
    for (std::size_t e = 0; e < dim; ++e) {
      const double dir = std::cos(angle) * u[e] + std::sin(angle) * v[e];
      in[e] = base[e] + travel * r[i] * dir;
    }
    std::vector<double> out = map.apply(in);
    if (p.kind == SyntheticKind::IrregularMagnitude) {
      for (auto& z : out) z = std::tanh(z) + 0.3 * z * z;
    }
    trace.set(ts[i], module, Stream::Input, FeatureVec(std::move(in), shape));
    trace.set(ts[i], module, Stream::Output, FeatureVec(std::move(out), shape));
  }
}

}  // namespace

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "polynomial") return SyntheticKind::PolynomialDegree;
  if (name == "affine-constant") return SyntheticKind::AffineConstantDirection;
  if (name == "affine-drifting") return SyntheticKind::AffineDriftingDirection;
  if (name == "irregular") return SyntheticKind::IrregularMagnitude;
  throw Error(ErrorKind::InvalidConfig, "unknown synthetic kind '" + std::string(name) + "'");
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::PolynomialDegree: return "polynomial";
    case SyntheticKind::AffineConstantDirection: return "affine-constant";
    case SyntheticKind::AffineDriftingDirection: return "affine-drifting";
    case SyntheticKind::IrregularMagnitude: return "irregular";
  }
  return "?";
}

std::vector<double> irregular_magnitude_profile(int steps, double irregularity,
                                                std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> r(static_cast<std::size_t>(steps), 0.0);
  for (std::size_t i = 1; i < r.size(); ++i) r[i] = r[i - 1] + std::exp(irregularity * n(rng));
  const double last = r.back();
  if (last > 0.0) {
    for (auto& x : r) x /= last;
  }
  return r;
}

Trace synthetic_trajectory(const SyntheticParams& params) {
  if (params.steps < 4) throw Error(ErrorKind::InvalidConfig, "synthetic steps must be >= 4");
  if (params.dim < 2) throw Error(ErrorKind::InvalidConfig, "synthetic dim must be >= 2");
  if (params.n_modules < 1) throw Error(ErrorKind::InvalidConfig, "n_modules must be >= 1");
  if (params.kind == SyntheticKind::PolynomialDegree && params.degree < 0) {
    throw Error(ErrorKind::InvalidConfig, "polynomial degree must be >= 0");
  }
  if (params.irregularity < 0.0) throw Error(ErrorKind::InvalidConfig, "irregularity must be >= 0");
  std::vector<int> ts;
  for (int t = params.steps; t >= 1; --t) ts.push_back(t);
  Trace trace(params.n_modules, Shape{static_cast<std::size_t>(params.dim)}, std::move(ts));
  for (int m = 0; m < params.n_modules; ++m) fill_module(trace, m, params);
  return trace;
}

}  // namespace relcache
