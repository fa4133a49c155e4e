// Copyright 2026 The stardro Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "stardro/reweighter.hpp"

using namespace stardro;

namespace {

ReweighterConfig active_config() {
  ReweighterConfig c;
  c.activation_step = 0;
  return c;
}

// Random observation stream over a skewed group distribution; some
// observations belong to several groups.
std::vector<Observation> random_batch(Rng& rng, int num_groups, int batch) {
  std::vector<Observation> obs;
  for (int i = 0; i < batch; ++i) {
    Observation o;
    const int g = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_groups)));
    o.groups.push_back(g);
    if (rng.uniform() < 0.3) {
      int g2 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_groups - 1)));
      if (g2 >= g) ++g2;
      o.groups.push_back(g2);
      std::sort(o.groups.begin(), o.groups.end());
    }
    o.unit_loss = std::exp(rng.normal());  // lognormal, strictly positive
    obs.push_back(std::move(o));
  }
  return obs;
}

}  // namespace

TEST_CASE("estimate_group_losses overlap correction fixture") {
  std::vector<Observation> obs = {{{0, 1}, 2.0}, {{0}, 1.0}};
  GroupLossEstimate est = estimate_group_losses(obs, 3);
  CHECK(est.raw[0] == doctest::Approx((0.5 * 2.0 + 1.0) / 1.5).epsilon(1e-12));
  CHECK(est.raw[0] == doctest::Approx(1.3333).epsilon(1e-4));
  CHECK(est.raw[1] == doctest::Approx(2.0));
  CHECK(std::isnan(est.raw[2]));
  CHECK(est.counts[0] == 2.0);
  CHECK(est.counts[1] == 1.0);
  CHECK(est.present == std::vector<int>{0, 1});
}

TEST_CASE("estimate_group_losses simple means") {
  GroupLossEstimate one = estimate_group_losses({{{0}, 3.7}}, 1);
  CHECK(one.raw[0] == doctest::Approx(3.7));

  GroupLossEstimate two = estimate_group_losses({{{0}, 1.0}, {{0}, 3.0}}, 1);
  CHECK(two.raw[0] == doctest::Approx(2.0));
}

TEST_CASE("estimate_group_losses error and empty cases") {
  GroupLossEstimate empty = estimate_group_losses({}, 4);
  CHECK(empty.present.empty());
  CHECK_THROWS_AS(estimate_group_losses({{{}, 1.0}}, 2), std::invalid_argument);
  CHECK_THROWS_AS(estimate_group_losses({{{5}, 1.0}}, 2), std::invalid_argument);
  CHECK_THROWS_AS(
      estimate_group_losses({{{0}, std::numeric_limits<double>::infinity()}}, 1),
      std::invalid_argument);
}

TEST_CASE("update_ema branches") {
  ReweighterState state(3);
  GroupLossEstimate est;
  est.present = {0};
  est.raw = Vector::Constant(3, std::numeric_limits<double>::quiet_NaN());
  est.raw[0] = 2.0;
  est.counts = Vector::Zero(3);
  est.counts[0] = 1.0;

  // first observation seeds
  update_ema(state, est, 0.03);
  CHECK(state.ema_losses[0] == 2.0);
  CHECK(!state.seen(1));

  // subsequent observations blend: (1-rho) * 1.0 + rho * 2.0 with prev 1.0
  state.ema_losses[0] = 1.0;
  update_ema(state, est, 0.03);
  CHECK(state.ema_losses[0] == doctest::Approx(1.03).epsilon(1e-12));

  // absent groups stay bit-identical
  state.ema_losses[1] = 0.7;
  const double before = state.ema_losses[1];
  for (int k = 0; k < 5; ++k) update_ema(state, est, 0.03);
  CHECK(std::memcmp(&before, &state.ema_losses[1], sizeof(double)) == 0);
}

TEST_CASE("compute_ascent fixture and normalization") {
  Vector smoothed(2);
  smoothed << 1.0, 2.0;
  Vector counts(2);
  counts << 3.0, 1.0;
  AscentSignal a = compute_ascent(smoothed, counts, {0, 1});
  CHECK(a.scale == doctest::Approx(1.25));
  CHECK(a.ascent[0] == doctest::Approx(0.8));
  CHECK(a.ascent[1] == doctest::Approx(1.6));
  CHECK(0.75 * a.ascent[0] + 0.25 * a.ascent[1] == doctest::Approx(1.0).epsilon(1e-12));

  // single present group self-normalizes
  Vector s1(2);
  s1 << 0.9, 5.0;
  Vector c1(2);
  c1 << 4.0, 0.0;
  AscentSignal a1 = compute_ascent(s1, c1, {0});
  CHECK(a1.ascent[0] == doctest::Approx(1.0));
  CHECK(a1.ascent[1] == 0.0);

  // equal losses give ascent one everywhere present
  Vector se = Vector::Constant(3, 0.42);
  Vector ce = Vector::Ones(3);
  AscentSignal ae = compute_ascent(se, ce, {0, 1, 2});
  for (int g = 0; g < 3; ++g) CHECK(ae.ascent[g] == doctest::Approx(1.0));

  // all-zero losses are a degenerate scale, not an error
  Vector sz = Vector::Zero(2);
  AscentSignal az = compute_ascent(sz, ce.head(2), {0, 1});
  CHECK(az.degenerate);
  CHECK(az.ascent[0] == 0.0);
}

TEST_CASE("multiplier shaping fixtures") {
  ReweighterConfig cfg = active_config();
  const int G = 9;

  // at uniform the multiplier is exactly one
  ReweighterState state(G);
  std::vector<Observation> all;
  for (int g = 0; g < G; ++g) all.push_back({{g}, 1.0});
  StepResult r = star_dro_step(state, cfg, all);
  for (int g = 0; g < G; ++g) CHECK(r.multipliers.per_group[g] == 1.0);

  // shaping formula: q = 2/9 -> m = 1 + 9 * (1/8)^0.75
  const double e = (2.0 - 1.0) / 8.0;
  const double expected = 1.0 + 9.0 * std::pow(e, 0.75);
  CHECK(expected == doctest::Approx(2.892).epsilon(1e-3));

  // full concentration hits the ceiling
  const double e_full = (9.0 - 1.0) / 8.0;
  CHECK(1.0 + 9.0 * std::pow(std::min(1.0, e_full), 0.75) == doctest::Approx(10.0));
}

TEST_CASE("star_dro_step is neutral before activation and warm-starts the EMA") {
  ReweighterConfig cfg;
  cfg.activation_step = 5;
  ReweighterState state(4);
  Rng rng(1);
  for (int t = 0; t < 5; ++t) {
    StepResult r = star_dro_step(state, cfg, random_batch(rng, 4, 8));
    for (int g = 0; g < 4; ++g) {
      CHECK(r.multipliers.per_group[g] == 1.0);
      CHECK(state.q[g] == doctest::Approx(0.25));
    }
    for (double m : r.multipliers.per_example) CHECK(m == 1.0);
  }
  // EMA accumulated during the neutral phase
  int seen = 0;
  for (int g = 0; g < 4; ++g) seen += state.seen(g);
  CHECK(seen > 0);
  CHECK(state.step == 5);
}

TEST_CASE("star_dro_step invariants over randomized streams") {
  Rng rng(42);
  for (int run = 0; run < 30; ++run) {
    const int G = 2 + static_cast<int>(rng.uniform_int(9));
    ReweighterConfig cfg = active_config();
    cfg.alpha = 1.02 + rng.uniform();
    cfg.eta = 0.001 + 0.05 * rng.uniform();
    cfg.rho = 0.01 + 0.3 * rng.uniform();
    ReweighterState state(static_cast<Eigen::Index>(G));
    for (int t = 0; t < 60; ++t) {
      StepResult r = star_dro_step(state, cfg, random_batch(rng, G, 6));
      double sum = 0.0;
      for (int g = 0; g < G; ++g) {
        CHECK(state.q[g] >= 0.0);
        sum += state.q[g];
        const double m = r.multipliers.per_group[g];
        CHECK(m >= 1.0);
        CHECK(m <= cfg.ceiling);
        if (G * state.q[g] <= 1.0) CHECK(m == 1.0);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
      // ascent normalization: count-weighted mean over present groups is one
      if (!r.stats.degenerate_scale && !r.stats.present.empty()) {
        double total = 0.0;
        for (int g : r.stats.present) total += r.stats.counts[g];
        double mean = 0.0;
        for (int g : r.stats.present) {
          mean += (r.stats.counts[g] / total) * r.stats.ascent[g];
        }
        CHECK(std::abs(mean - 1.0) <= 1e-9);
      }
      // per-example multiplier is the mean of its groups'
      for (std::size_t i = 0; i < r.multipliers.per_example.size(); ++i) {
        CHECK(r.multipliers.per_example[i] >= 1.0 - 1e-12);
        CHECK(r.multipliers.per_example[i] <= cfg.ceiling + 1e-12);
      }
    }
  }
}

TEST_CASE("monotone response: raising a group's loss never lowers its next q") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int G = 3 + static_cast<int>(rng.uniform_int(5));
    ReweighterConfig cfg = active_config();
    cfg.eta = 0.05;
    ReweighterState base(static_cast<Eigen::Index>(G));
    // seed the EMA with one uniform pass
    std::vector<Observation> warm;
    for (int g = 0; g < G; ++g) warm.push_back({{g}, 1.0 + rng.uniform()});
    star_dro_step(base, cfg, warm);

    ReweighterState raised = base;
    const int target = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(G)));
    std::vector<Observation> batch;
    std::vector<Observation> batch_hi;
    for (int g = 0; g < G; ++g) {
      const double l = 0.5 + rng.uniform();
      batch.push_back({{g}, l});
      batch_hi.push_back({{g}, g == target ? l + 2.0 : l});
    }
    star_dro_step(base, cfg, batch);
    star_dro_step(raised, cfg, batch_hi);
    CHECK(raised.q[target] >= base.q[target] - 1e-9);
  }
}

TEST_CASE("over-concentration: large eta_eff with two persistently hard groups") {
  ReweighterConfig cfg = active_config();
  cfg.alpha = 2.0;
  cfg.eta = 0.024;
  ReweighterState state(6);
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    std::vector<Observation> obs;
    for (int g = 0; g < 6; ++g) {
      const double base = (g == 0 || g == 1) ? 2.0 : 0.4;
      obs.push_back({{g}, base + 0.05 * rng.normal()});
    }
    star_dro_step(state, cfg, obs);
  }
  ReweighterDiagnostics d = diagnostics(state, cfg);
  CHECK(d.entropy < 0.5 * std::log(6.0));
  int zeros = 0;
  for (int g = 0; g < 6; ++g) zeros += state.q[g] == 0.0;
  CHECK(zeros >= 1);
  CHECK(state.q[0] + state.q[1] > 0.94);
}

TEST_CASE("under-differentiation: tiny eta_eff keeps q near uniform") {
  ReweighterConfig cfg = active_config();
  cfg.alpha = 1.08;
  cfg.eta = 1e-6 / (cfg.alpha - 1.0);  // eta_eff = 1e-6
  ReweighterState state(9);
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<Observation> obs;
    for (int g = 0; g < 9; ++g) {
      obs.push_back({{g}, (g < 2 ? 2.0 : 0.5) + 0.1 * rng.normal()});
    }
    star_dro_step(state, cfg, obs);
  }
  for (int g = 0; g < 9; ++g) {
    CHECK(std::abs(state.q[g] - 1.0 / 9.0) < 0.02);
  }
}

TEST_CASE("standard_dro_step fixtures") {
  ReweighterConfig cfg = active_config();
  cfg.eta = 1.0;

  // uniform q, equal losses: q unchanged, all weights one
  ReweighterState state(2);
  StepResult r = standard_dro_step(state, cfg, {{{0}, 1.0}, {{1}, 1.0}});
  CHECK(state.q[0] == doctest::Approx(0.5).epsilon(1e-12));
  for (double w : r.multipliers.per_example) CHECK(w == doctest::Approx(1.0));

  // exponentiated-gradient fixture
  ReweighterState s2(2);
  standard_dro_step(s2, cfg, {{{0}, 1.0}, {{1}, 0.0}});
  CHECK(s2.q[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(s2.q[1] == doctest::Approx(0.2689).epsilon(1e-4));

  // absent group: its component is multiplied by exp(0)
  ReweighterState s3(3);
  standard_dro_step(s3, cfg, {{{0}, 1.0}, {{1}, 1.0}});
  CHECK(s3.q[2] == doctest::Approx(std::exp(0.0) / (2.0 * std::exp(1.0) + 1.0)).epsilon(1e-9));

  // batch weights are normalized to mean one
  ReweighterState s4(3);
  StepResult r4 = standard_dro_step(s4, cfg, {{{0}, 3.0}, {{1}, 0.5}, {{0, 2}, 1.0}});
  double mean = 0.0;
  for (double w : r4.multipliers.per_example) mean += w;
  mean /= static_cast<double>(r4.multipliers.per_example.size());
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("update-signal variance: STaR's smoothed dual increments vary less "
          "than standard DRO's raw-loss increments at matched eta_eff") {
  // Paired streams; the dual update per step is eta_eff * signal. For
  // standard DRO the signal is the raw minibatch loss; for STaR it is the
  // EMA-smoothed, rescaled ascent.
  Rng rng(19);
  const int G = 6;
  ReweighterConfig star_cfg = active_config();
  star_cfg.alpha = 1.08;
  star_cfg.eta = 0.5 / (star_cfg.alpha - 1.0);  // eta_eff = 0.5, a large step
  ReweighterState star(G);
  std::vector<double> star_signal;
  std::vector<double> raw_signal;
  for (int t = 0; t < 300; ++t) {
    std::vector<Observation> obs = random_batch(rng, G, 4);
    StepResult r = star_dro_step(star, star_cfg, obs);
    GroupLossEstimate est = estimate_group_losses(obs, G);
    for (int g : est.present) {
      raw_signal.push_back(est.raw[g]);
      star_signal.push_back(r.stats.ascent[g]);
    }
  }
  const auto variance = [](const std::vector<double>& xs) {
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return acc / xs.size();
  };
  CHECK(variance(star_signal) < variance(raw_signal));
}

TEST_CASE("diagnostics fixtures") {
  ReweighterConfig cfg;
  cfg.alpha = 1.08;
  cfg.eta = 0.003;
  ReweighterState state(9);
  ReweighterDiagnostics d = diagnostics(state, cfg);
  CHECK(d.entropy == doctest::Approx(std::log(9.0)).epsilon(1e-9));
  CHECK(d.entropy == doctest::Approx(2.1972).epsilon(1e-4));
  CHECK(d.active_set_size == 9);
  CHECK(d.eta_eff == doctest::Approx(2.4e-4).epsilon(1e-9));

  Vector point = Vector::Zero(5);
  point[3] = 1.0;
  state.q = SimplexVector(point);
  d = diagnostics(state, cfg);
  CHECK(d.entropy == 0.0);
  CHECK(d.active_set_size == 1);
}

TEST_CASE("state snapshot JSON round-trip") {
  ReweighterConfig cfg;
  cfg.alpha = 1.1;
  cfg.eta = 0.004;
  cfg.rho = 0.05;
  cfg.ceiling = 8.0;
  cfg.curvature = 0.9;
  cfg.activation_step = 47;
  ReweighterState state(3);
  state.ema_losses[1] = 0.812345678901234;
  state.step = 12;
  Vector q(3);
  q << 0.2, 0.5, 0.3;
  state.q = SimplexVector(q);

  const std::string text = to_json(state, cfg);
  CHECK(text.find("\"q\"") != std::string::npos);
  CHECK(text.find("\"ema_losses\"") != std::string::npos);
  CHECK(text.find("\"activation_step\"") != std::string::npos);

  ReweighterState loaded(1);
  ReweighterConfig loaded_cfg;
  from_json(text, loaded, loaded_cfg);
  CHECK(loaded.num_groups() == 3);
  CHECK(loaded.q[1] == doctest::Approx(0.5));
  CHECK(!loaded.seen(0));
  CHECK(loaded.ema_losses[1] == doctest::Approx(state.ema_losses[1]).epsilon(1e-15));
  CHECK(loaded.step == 12);
  CHECK(loaded_cfg.alpha == doctest::Approx(1.1));
  CHECK(loaded_cfg.activation_step == 47);

  // never-activated round-trips through the -1 sentinel
  cfg.activation_step = ReweighterConfig::kNever;
  from_json(to_json(state, cfg), loaded, loaded_cfg);
  CHECK(loaded_cfg.activation_step == ReweighterConfig::kNever);

  CHECK_THROWS_AS(from_json("not json", loaded, loaded_cfg), std::invalid_argument);
  CHECK_THROWS_AS(from_json("{\"q\": [0.5, 0.5]}", loaded, loaded_cfg), SchemaError);
}
