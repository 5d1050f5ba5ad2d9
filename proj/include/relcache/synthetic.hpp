// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "relcache/trace.hpp"

namespace relcache {

/// Paired input/output trajectories with known structure:
///   PolynomialDegree        per-element polynomials in t of the given degree
///   AffineConstantDirection I = I0 + r(t) u,    O = A I + b
///   AffineDriftingDirection I = I0 + r(t) u(t), O = A I + b, u rotating
///   IrregularMagnitude      I = I0 + r(t) u,    O = tanh(z) + 0.3 z^2, z = A I + b
/// r(t) is monotone with irregular (log-normal) step sizes.
enum class SyntheticKind {
  PolynomialDegree,
  AffineConstantDirection,
  AffineDriftingDirection,
  IrregularMagnitude,
};

SyntheticKind parse_synthetic_kind(std::string_view name);
std::string_view to_string(SyntheticKind kind);

struct SyntheticParams {
  SyntheticKind kind = SyntheticKind::AffineConstantDirection;
  int degree = 1;
  int steps = 30;
  int dim = 64;
  int n_modules = 1;
  std::uint64_t seed = 0;
  /// When set, A = gain * identity and b = 0; otherwise A and b are random.
  std::optional<double> isotropic_gain;
  /// Log-normal sigma of the per-step increments of r(t).
  double irregularity = 0.6;
  /// Rotation of u(t) per step, radians (drifting kind only).
  double drift_rate = 0.25;
  /// Total displacement of the input along r(t) relative to ||I0||.
  double travel = 1.0;
};

/// Trace over timesteps steps..1. Deterministic in params.
Trace synthetic_trajectory(const SyntheticParams& params);

/// Monotone r(t) for t = steps..1 (index 0 is t = steps), r(steps) = 0 and
/// r(1) = 1, built from positive log-normal increments.
std::vector<double> irregular_magnitude_profile(int steps, double irregularity,
                                                std::mt19937_64& rng);

}  // namespace relcache
