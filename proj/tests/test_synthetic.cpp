// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "oracles.hpp"
#include "relcache/analysis.hpp"
#include "relcache/synthetic.hpp"
#include "test_util.hpp"

using namespace relcache;

TEST_SUITE("synthetic") {
  TEST_CASE("trajectories are deterministic in their parameters") {
    SyntheticParams p;
    p.kind = SyntheticKind::AffineDriftingDirection;
    p.seed = 4;
    CHECK(synthetic_trajectory(p) == synthetic_trajectory(p));
    auto q = p;
    q.seed = 5;
    CHECK_FALSE(synthetic_trajectory(p) == synthetic_trajectory(q));
    const auto tr = synthetic_trajectory(p);
    CHECK(tr.timesteps().front() == 30);
    CHECK(tr.timesteps().back() == 1);
    CHECK(tr.shape() == Shape{64});
    CHECK(tr.complete());
  }

  TEST_CASE("magnitude profile is monotone from 0 to 1") {
    std::mt19937_64 rng(3);
    const auto r = irregular_magnitude_profile(30, 0.6, rng);
    REQUIRE(r.size() == 30);
    CHECK(r.front() == 0.0);
    CHECK(r.back() == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] > r[i - 1]);
    std::mt19937_64 flat_rng(3);
    const auto even = irregular_magnitude_profile(11, 0.0, flat_rng);
    for (std::size_t i = 0; i < even.size(); ++i) CHECK(even[i] == doctest::Approx(i / 10.0));
  }

  TEST_CASE("polynomial trajectories are reproduced by taylor of matching order") {
    for (int degree : {1, 2, 3}) {
      SyntheticParams p;
      p.kind = SyntheticKind::PolynomialDegree;
      p.degree = degree;
      p.dim = 8;
      const auto tr = synthetic_trajectory(p);
      const auto r = replay_policy(tr, PolicySpec::taylor(degree), SchedulerSpec::fixed(3));
      for (const auto& step : r.log.steps)
        for (double e : step.eps_out) CHECK(e <= 1e-9);
    }
  }

  TEST_CASE("unit gain makes outputs equal inputs") {
    SyntheticParams p;
    p.isotropic_gain = 1.0;
    const auto tr = synthetic_trajectory(p);
    for (int t : tr.timesteps()) CHECK(tr.at(t, 0, Stream::Input) == tr.at(t, 0, Stream::Output));
  }

  TEST_CASE("names parse and print") {
    for (const char* n : {"polynomial", "affine-constant", "affine-drifting", "irregular"}) {
      CHECK(to_string(parse_synthetic_kind(n)) == n);
    }
    CHECK_ERROR(parse_synthetic_kind("spiral"), InvalidConfig);
    SyntheticParams p;
    p.steps = 3;
    CHECK_ERROR(synthetic_trajectory(p), InvalidConfig);
  }
}
