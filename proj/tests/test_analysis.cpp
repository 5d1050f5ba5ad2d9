// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "oracles.hpp"
#include "relcache/analysis.hpp"
#include "relcache/synthetic.hpp"
#include "relcache/toy_diffusion.hpp"
#include "test_util.hpp"

using namespace relcache;
using testutil::fv;

namespace {

Trace make(SyntheticKind kind, std::uint64_t seed, int steps = 30, int dim = 64) {
  SyntheticParams p;
  p.kind = kind;
  p.seed = seed;
  p.steps = steps;
  p.dim = dim;
  return synthetic_trajectory(p);
}

// F(T - i) = e_1 + ... + e_i: a walk with orthonormal increments.
Trace orthogonal_walk(int steps) {
  std::vector<int> ts;
  for (int t = steps; t >= 1; --t) ts.push_back(t);
  Trace tr(1, Shape{static_cast<std::size_t>(steps)}, ts);
  std::vector<double> acc(static_cast<std::size_t>(steps), 0.0);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i > 0) acc[i - 1] = 1.0;
    tr.set(ts[i], 0, Stream::Input, fv(acc));
    tr.set(ts[i], 0, Stream::Output, fv(acc));
  }
  return tr;
}

double walk_consistency(int k_max) {
  double sum = 0.0;
  int pairs = 0;
  for (int i = 1; i <= k_max; ++i)
    for (int j = i + 1; j <= k_max; ++j) {
      sum += i / std::sqrt(static_cast<double>(i) * j);
      ++pairs;
    }
  return sum / pairs;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("min-max normalization") {
    CHECK(min_max_normalize({2, 4, 3}) == std::vector<double>{0, 1, 0.5});
    CHECK(min_max_normalize({5, 5, 5}) == std::vector<double>{0, 0, 0});
    CHECK(min_max_normalize({}).empty());
  }

  TEST_CASE("consecutive distances") {
    Trace flat(1, Shape{2}, {3, 2, 1});
    Trace lin(1, Shape{2}, {3, 2, 1});
    for (int t : {3, 2, 1}) {
      flat.set(t, 0, Stream::Input, fv({1, 1}));
      flat.set(t, 0, Stream::Output, fv({1, 1}));
      lin.set(t, 0, Stream::Input, fv({2.0 * t, -1.0 * t}));
      lin.set(t, 0, Stream::Output, fv({1.0 * t, 0}));
    }
    CHECK(consecutive_l2_raw(flat, 0, Stream::Input) == std::vector<double>{0, 0});
    CHECK(consecutive_l2_series(flat, 0, Stream::Input) == std::vector<double>{0, 0});
    CHECK(consecutive_l2_series(lin, 0, Stream::Input) == std::vector<double>{0, 0});
    CHECK(consecutive_l2_raw(lin, 0, Stream::Input)[0] == doctest::Approx(std::sqrt(5.0)));

    const auto tr = make(SyntheticKind::AffineConstantDirection, 3);
    const auto in = consecutive_l2_series(tr, 0, Stream::Input);
    const auto out = consecutive_l2_series(tr, 0, Stream::Output);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(std::fabs(in[i] - out[i]) < 1e-9);

    Trace one(1, Shape{1}, {1});
    one.set(1, 0, Stream::Input, fv({1}));
    one.set(1, 0, Stream::Output, fv({1}));
    CHECK_ERROR(consecutive_l2_raw(one, 0, Stream::Input), InsufficientData);
  }

  TEST_CASE("s ratios and their spread") {
    SyntheticParams p;
    p.isotropic_gain = 2.0;
    p.seed = 5;
    const auto iso = synthetic_trajectory(p);
    for (int t : {30, 25, 12}) {
      for (double s : s_ratio_values(iso, 0, t, 9)) CHECK(s == doctest::Approx(2.0).epsilon(1e-12));
    }

    const auto tr = make(SyntheticKind::AffineConstantDirection, 1);
    const auto s = s_ratio_values(tr, 0, 20, 9);
    for (int k = 1; k <= 9; ++k) {
      const auto expected = compute_s_ratio(tr.at(20 - k, 0, Stream::Input) - tr.at(20, 0, Stream::Input),
                                            tr.at(20 - k, 0, Stream::Output) - tr.at(20, 0, Stream::Output));
      CHECK(s[static_cast<std::size_t>(k - 1)] == *expected);
    }
    CHECK(s_ratio_rsd(tr, 0, 20, 9) <= 1e-8);

    const auto drift = make(SyntheticKind::AffineDriftingDirection, 1);
    CHECK(s_ratio_rsd(drift, 0, 20, 9) > s_ratio_rsd(tr, 0, 20, 9));

    CHECK_ERROR(s_ratio_values(tr, 0, 5, 9), InsufficientData);
    const auto series = s_ratio_rsd_series(tr, 0, 9);
    CHECK(series.size() == 21);
    CHECK(series.front().t == 30);
    CHECK(series.back().t == 10);

    Trace still(1, Shape{1}, {3, 2, 1});
    for (int t : {3, 2, 1}) {
      still.set(t, 0, Stream::Input, fv({1}));
      still.set(t, 0, Stream::Output, fv({1.0 * t}));
    }
    CHECK_ERROR(s_ratio_values(still, 0, 3, 2), UndefinedRatio);
  }

  TEST_CASE("linearity of affine and non-affine modules") {
    for (std::uint64_t seed : {0, 1, 2}) {
      const auto affine = make(SyntheticKind::AffineConstantDirection, seed);
      CHECK(std::fabs(linearity_r2(affine, 0) - 1.0) <= 1e-9);
      const auto drift = make(SyntheticKind::AffineDriftingDirection, seed);
      CHECK(std::fabs(linearity_r2(drift, 0) - 1.0) <= 1e-9);
      CHECK(timestep_linearity_r2(affine, 0) < linearity_r2(affine, 0));
    }
    const auto irregular = make(SyntheticKind::IrregularMagnitude, 4);
    const double r2 = linearity_r2(irregular, 0);
    CHECK(r2 < 1.0 - 1e-6);
    MESSAGE("non-affine window R^2: " << r2);
    CHECK_ERROR(linearity_r2(irregular, 0, 2), InvalidArgument);
    CHECK_ERROR(linearity_r2(make(SyntheticKind::AffineConstantDirection, 0, 4), 0, 5),
                InsufficientData);
  }

  TEST_CASE("linearity needs varying inputs") {
    Trace tr(1, Shape{2}, {5, 4, 3, 2, 1});
    for (int t = 5; t >= 1; --t) {
      tr.set(t, 0, Stream::Input, fv({1, 2}));
      tr.set(t, 0, Stream::Output, fv({1.0 * t, 0}));
    }
    CHECK_ERROR(linearity_r2(tr, 0), SingularFit);

    Trace flat(1, Shape{1}, {5, 4, 3, 2, 1});
    for (int t = 5; t >= 1; --t) {
      flat.set(t, 0, Stream::Input, fv({1.0 * t}));
      flat.set(t, 0, Stream::Output, fv({3}));
    }
    CHECK_ERROR(linearity_r2(flat, 0), InsufficientData);
  }

  TEST_CASE("timestep fit on a linear-in-t trajectory") {
    SyntheticParams p;
    p.kind = SyntheticKind::PolynomialDegree;
    p.degree = 1;
    const auto tr = synthetic_trajectory(p);
    CHECK(std::fabs(timestep_linearity_r2(tr, 0) - 1.0) <= 1e-9);
    CHECK(std::fabs(linearity_r2(tr, 0) - 1.0) <= 1e-9);
  }

  TEST_CASE("directional consistency") {
    const auto tr = make(SyntheticKind::AffineConstantDirection, 2);
    CHECK(std::fabs(directional_consistency(tr, 0, Stream::Input) - 1.0) <= 1e-9);
    CHECK(std::fabs(directional_consistency(tr, 0, Stream::Output) - 1.0) <= 1e-9);
    const auto drift = make(SyntheticKind::AffineDriftingDirection, 2);
    CHECK(directional_consistency(drift, 0, Stream::Input) < directional_consistency(tr, 0, Stream::Input));
    CHECK(directional_consistency(drift, 0, Stream::Output) < directional_consistency(tr, 0, Stream::Output));

    // every difference from the anchor along its own axis
    Trace axes(1, Shape{4}, {5, 4, 3, 2, 1});
    axes.set(5, 0, Stream::Input, fv({0, 0, 0, 0}));
    axes.set(5, 0, Stream::Output, fv({0, 0, 0, 0}));
    for (int k = 1; k <= 4; ++k) {
      std::vector<double> e(4, 0.0);
      e[static_cast<std::size_t>(k - 1)] = 0.5 * k;
      axes.set(5 - k, 0, Stream::Input, fv(e));
      axes.set(5 - k, 0, Stream::Output, fv(e));
    }
    CHECK(directional_consistency(axes, 0, Stream::Input) == 0.0);

    const auto walk = orthogonal_walk(12);
    CHECK(directional_consistency(walk, 0, Stream::Input) ==
          doctest::Approx(walk_consistency(4)).epsilon(1e-12));

    Trace still(1, Shape{1}, {3, 2, 1});
    for (int t : {3, 2, 1}) {
      still.set(t, 0, Stream::Input, fv({1}));
      still.set(t, 0, Stream::Output, fv({1}));
    }
    CHECK_ERROR(directional_consistency(still, 0, Stream::Input, 2), UndefinedDirection);
    CHECK_ERROR(directional_consistency(still, 0, Stream::Input, 4), InsufficientData);
  }

  TEST_CASE("consistency ignores the length of each difference") {
    oracle::Gen g(8);
    for (int trial = 0; trial < 10; ++trial) {
      const auto anchor = g.vec(6);
      Trace plain(1, Shape{6}, {5, 4, 3, 2, 1});
      Trace scaled(1, Shape{6}, {5, 4, 3, 2, 1});
      for (Stream s : {Stream::Input, Stream::Output}) {
        plain.set(5, 0, s, fv(anchor));
        scaled.set(5, 0, s, fv(anchor));
      }
      for (int k = 1; k <= 4; ++k) {
        const auto d = fv(g.nonzero_vec(6));
        const double c = g.uniform(0.01, 100.0);
        for (Stream s : {Stream::Input, Stream::Output}) {
          plain.set(5 - k, 0, s, fv(anchor) + d);
          scaled.set(5 - k, 0, s, fv(anchor) + c * d);
        }
      }
      CHECK(directional_consistency(plain, 0, Stream::Input) ==
            doctest::Approx(directional_consistency(scaled, 0, Stream::Input)).epsilon(1e-9));
    }
  }

  TEST_CASE("interval profile") {
    const std::vector<std::vector<int>> fixed{{50, 46, 42, 38}, {30, 26, 22}};
    CHECK(interval_profile(fixed) == std::vector<double>{4, 4, 4});
    const std::vector<std::vector<int>> one{{50, 46, 44}};
    CHECK(interval_profile(one) == std::vector<double>{4, 2});
    const std::vector<std::vector<int>> mixed{{50, 46, 44}, {50, 40}};
    CHECK(interval_profile(mixed) == std::vector<double>{7, 2});
    CHECK_ERROR(interval_profile(std::span<const std::vector<int>>{}), InsufficientData);
    const std::vector<std::vector<int>> single{{50}};
    CHECK_ERROR(interval_profile(single), InsufficientData);
  }

  TEST_CASE("replay of a fully computed trace has zero error") {
    const auto tr = make(SyntheticKind::IrregularMagnitude, 6, 20, 8);
    const auto r = replay_policy(tr, PolicySpec::rfe(1), SchedulerSpec::fixed(1));
    CHECK(r.nfc() == 20);
    for (const auto& step : r.log.steps)
      for (double e : step.eps_out) CHECK(e == 0.0);
  }

  TEST_CASE("replay ordering on constant-direction affine traces") {
    const auto tr = make(SyntheticKind::AffineConstantDirection, 7, 50, 64);
    const auto sched = SchedulerSpec::fixed(4);
    const double rfe = replay_policy(tr, PolicySpec::rfe(1), sched).log.mean_eps_out();
    const double taylor = replay_policy(tr, PolicySpec::taylor(1), sched).log.mean_eps_out();
    const double reuse = replay_policy(tr, PolicySpec::reuse(), sched).log.mean_eps_out();
    CHECK(rfe < taylor);
    CHECK(taylor < reuse);
    CHECK(rfe < 1e-12);
  }

  TEST_CASE("replay is deterministic") {
    const auto tr = make(SyntheticKind::IrregularMagnitude, 9, 30, 16);
    const auto a = replay_policy(tr, PolicySpec::taylor(2), SchedulerSpec::rcs(0.05));
    const auto b = replay_policy(tr, PolicySpec::taylor(2), SchedulerSpec::rcs(0.05));
    CHECK(a.log.full_compute_log == b.log.full_compute_log);
    for (std::size_t i = 0; i < a.log.steps.size(); ++i) {
      CHECK(a.log.steps[i].eps_out == b.log.steps[i].eps_out);
    }
  }

  TEST_CASE("replay rejects incomplete traces") {
    Trace tr(1, Shape{1}, {2, 1});
    CHECK_ERROR(replay_policy(tr, PolicySpec::reuse(), SchedulerSpec::fixed(2)), InsufficientData);
  }

  TEST_CASE("trace analysis fills what is defined") {
    const auto tr = make(SyntheticKind::AffineConstantDirection, 10, 20, 8);
    const auto report = analyze_trace(tr);
    REQUIRE(report.modules.size() == 1);
    const auto& d = report.modules[0];
    CHECK(d.rsd_mean);
    CHECK(*d.r2_input == doctest::Approx(1.0));
    CHECK(d.l2_input.size() == 19);

    Trace short_tr(1, Shape{1}, {2, 1});
    for (int t : {2, 1}) {
      short_tr.set(t, 0, Stream::Input, fv({1.0 * t}));
      short_tr.set(t, 0, Stream::Output, fv({1.0 * t}));
    }
    const auto partial = analyze_trace(short_tr);
    CHECK_FALSE(partial.modules[0].r2_input);
    CHECK_FALSE(partial.modules[0].rsd_mean);
    CHECK(partial.modules[0].l2_input.size() == 1);
  }

  TEST_CASE("report json lists every module") {
    const auto tr = make(SyntheticKind::IrregularMagnitude, 11, 20, 8);
    auto report = replay_policy(tr, PolicySpec::rfe(1), SchedulerSpec::fixed(3));
    report.modules = analyze_trace(tr).modules;
    std::ostringstream out;
    write_report_json(report, out);
    const auto j = nlohmann::json::parse(out.str());
    CHECK(j["nfc"] == report.nfc());
    CHECK(j["full_compute_log"].size() == report.log.full_compute_log.size());
    CHECK(j["modules"].size() == 1);
    CHECK(j["modules"][0].contains("r2_input"));
  }
}
