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

// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Each criterion is self-contained and seeded; expected values come
// from independent oracles (lambda-grid search, sparsemax closed form) or
// hand-verified arithmetic.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stardro/metrics.hpp"
#include "stardro/trainer.hpp"

using namespace stardro;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
  std::printf("[%s] criterion %d: %s (%s, %.1fs)\n", pass ? "PASS" : "FAIL", number,
              name.c_str(), detail.c_str(), seconds);
  if (!pass) ++g_failures;
}

void run_criterion(int number, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
  const auto start = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    auto [p, d] = body();
    pass = p;
    detail = d;
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(number, name, pass, detail, seconds);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

RunConfig default_config(TrainMethod method, std::uint64_t seed) {
  RunConfig cfg;
  cfg.method = method;
  cfg.seed = seed;
  return cfg;
}

// 1. Projection oracle equivalence.
std::pair<bool, std::string> criterion_projection_oracle() {
  Rng rng(101);
  const double alphas[] = {1.05, 1.08, 1.2, 2.0};
  double worst_grid = 0.0;
  double worst_sparsemax = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int G = 2 + static_cast<int>(rng.uniform_int(5));
    Vector u(G);
    for (int g = 0; g < G; ++g) u[g] = 2.5 * rng.uniform() - 0.75;
    const double alpha = alphas[trial % 4];
    const Projection p = entmax_project(u, TsallisOrder(alpha));
    if (!p.converged) return {false, "bisection did not converge"};
    const oracles::GridResult grid = oracles::lambda_grid_search_fast(u, alpha, 1e-3, 1e-7);
    for (int g = 0; g < G; ++g) {
      worst_grid = std::max(worst_grid, std::abs(p.q[g] - grid.q[g]));
    }
    if (alpha == 2.0) {
      const oracles::SparsemaxResult sm = oracles::sparsemax(u);
      for (int g = 0; g < G; ++g) {
        worst_sparsemax = std::max(worst_sparsemax, std::abs(p.q[g] - sm.q[g]));
      }
    }
  }
  const bool pass = worst_grid <= 1e-5 && worst_sparsemax <= 1e-10;
  return {pass, fmt("max |q - grid| = %.2e (tol 1e-5), max |q - sparsemax| = %.2e (tol 1e-10)",
                    worst_grid, worst_sparsemax)};
}

// 2. Softmax-limit check.
std::pair<bool, std::string> criterion_softmax_limit() {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int G = 9;
    Vector w(G);
    for (int g = 0; g < G; ++g) w[g] = -std::log(1.0 - rng.uniform());
    const SimplexVector q(w / w.sum());
    Vector ascent(G);
    for (int g = 0; g < G; ++g) ascent[g] = 2.0 * rng.uniform();
    const double eta = 0.1 * rng.uniform();
    const Projection m = mirror_ascent_step(q, ascent, TsallisOrder(1.01), eta);
    const SimplexVector e = exponentiated_gradient_step(q, ascent, eta);
    for (int g = 0; g < G; ++g) worst = std::max(worst, std::abs(m.q[g] - e[g]));
  }
  return {worst <= 1e-3, fmt("max-norm gap %.2e (tol 1e-3) over 100 mirror steps", worst)};
}

// 3 and 4. Controller invariants over randomized steps, including the ascent
// normalization on every step.
std::pair<bool, std::string> criterion_controller_invariants(bool check_ascent_only) {
  Rng rng(303);
  long long steps_done = 0;
  double worst_sum = 0.0;
  double worst_ascent = 0.0;
  bool bounds_ok = true;
  for (int stream = 0; stream < 100; ++stream) {
    const int G = 2 + static_cast<int>(rng.uniform_int(9));
    ReweighterConfig cfg;
    cfg.alpha = 1.02 + 1.2 * rng.uniform();
    cfg.eta = 0.001 + 0.05 * rng.uniform();
    cfg.rho = 0.01 + 0.25 * rng.uniform();
    cfg.activation_step = rng.uniform_int(4);
    ReweighterState state(G);
    for (int t = 0; t < 100; ++t, ++steps_done) {
      std::vector<Observation> obs;
      const int batch = 2 + static_cast<int>(rng.uniform_int(7));
      for (int i = 0; i < batch; ++i) {
        Observation o;
        const int g = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(G)));
        o.groups.push_back(g);
        if (G > 1 && rng.uniform() < 0.3) {
          int g2 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(G - 1)));
          if (g2 >= g) ++g2;
          o.groups.push_back(g2);
          std::sort(o.groups.begin(), o.groups.end());
        }
        o.unit_loss = std::exp(rng.normal());
        obs.push_back(std::move(o));
      }
      const StepResult r = star_dro_step(state, cfg, obs);
      double sum = 0.0;
      for (int g = 0; g < G; ++g) {
        sum += state.q[g];
        if (state.q[g] < 0.0) bounds_ok = false;
        const double m = r.multipliers.per_group[g];
        if (m < 1.0 || m > cfg.ceiling) bounds_ok = false;
        if (G * state.q[g] <= 1.0 && m != 1.0) bounds_ok = false;
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      if (!r.stats.degenerate_scale && !r.stats.present.empty()) {
        double total = 0.0;
        for (int g : r.stats.present) total += r.stats.counts[g];
        double mean = 0.0;
        for (int g : r.stats.present) mean += (r.stats.counts[g] / total) * r.stats.ascent[g];
        worst_ascent = std::max(worst_ascent, std::abs(mean - 1.0));
      }
    }
  }
  if (check_ascent_only) {
    return {worst_ascent <= 1e-9,
            fmt("max |sum pi*a - 1| = %.2e (tol 1e-9) over %.0f steps", worst_ascent,
                static_cast<double>(steps_done))};
  }
  const bool pass = bounds_ok && worst_sum <= 1e-9 && steps_done >= 10000;
  return {pass, fmt("%.0f steps, max |sum q - 1| = %.2e, multiplier bounds ",
                    static_cast<double>(steps_done), worst_sum) +
                    (bounds_ok ? "held" : "violated")};
}

// 5. Worst-group improvement at desk scale.
std::pair<bool, std::string> criterion_worst_group_improvement() {
  std::vector<double> erm_worst;
  std::vector<double> star_worst;
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RunRecord erm = execute_run(default_config(TrainMethod::kErm, seed));
    RunRecord star = execute_run(default_config(TrainMethod::kStarDro, seed));
    erm_worst.push_back(erm.final_worst_val);
    star_worst.push_back(star.final_worst_val);
    wins += star.final_worst_val < erm.final_worst_val;
  }
  const double rel = (median(erm_worst) - median(star_worst)) / median(erm_worst);
  const bool pass = wins >= 4 && rel >= 0.05;
  return {pass, fmt("STaR-DRO below ERM in %.0f/5 seeds, median relative reduction %.1f%% "
                    "(needs >= 4/5 and >= 5%%)",
                    static_cast<double>(wins), 100.0 * rel)};
}

// 6. Regime reproduction via the three-point sweep.
std::pair<bool, std::string> criterion_regime_sweep() {
  RunConfig base = default_config(TrainMethod::kStarDro, 0);
  const std::vector<SweepEntry> entries = make_regime_sweep(base);
  const std::vector<RunRecord> records = sweep(entries, 3);
  for (const RunRecord& r : records) {
    if (!r.error.empty()) return {false, "sweep run failed: " + r.error};
  }
  const RegimeResult& b = records[0].regime;
  const RegimeResult& o = records[1].regime;
  const RegimeResult& u = records[2].regime;
  const bool pass = b.label == RegimeLabel::kBalanced &&
                    o.label == RegimeLabel::kOverConcentrated && o.top2_mass >= 0.94 &&
                    o.exact_zeros >= 1 &&
                    u.label == RegimeLabel::kUnderDifferentiated &&
                    u.max_uniform_deviation < 0.02;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "baseline=%s(dev %.3f), x100=%s(top2 %.3f, zeros %d), /100=%s(dev %.4f)",
                to_string(b.label).c_str(), b.max_uniform_deviation,
                to_string(o.label).c_str(), o.top2_mass, o.exact_zeros,
                to_string(u.label).c_str(), u.max_uniform_deviation);
  return {pass, buf};
}

// 7. Regularization direction.
std::pair<bool, std::string> criterion_regularization_direction() {
  std::vector<Vector> lo;
  std::vector<Vector> hi;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RunConfig a = default_config(TrainMethod::kStarDro, seed);
    a.model.weight_decay = 0.01;
    RunConfig b = default_config(TrainMethod::kStarDro, seed);
    b.model.weight_decay = 0.1;
    lo.push_back(execute_run(a).final_per_group_val);
    hi.push_back(execute_run(b).final_per_group_val);
  }
  const int G = static_cast<int>(lo[0].size());
  int improved = 0;
  double lo_max = -1e300, lo_min = 1e300, hi_max = -1e300, hi_min = 1e300;
  for (int g = 0; g < G; ++g) {
    std::vector<double> lg, hg;
    for (int s = 0; s < 5; ++s) {
      lg.push_back(lo[static_cast<std::size_t>(s)][g]);
      hg.push_back(hi[static_cast<std::size_t>(s)][g]);
    }
    const double ml = median(lg);
    const double mh = median(hg);
    improved += mh <= ml;
    lo_max = std::max(lo_max, ml);
    lo_min = std::min(lo_min, ml);
    hi_max = std::max(hi_max, mh);
    hi_min = std::min(hi_min, mh);
  }
  const double spread_lo = lo_max - lo_min;
  const double spread_hi = hi_max - hi_min;
  const bool pass = improved >= 7 && spread_hi < spread_lo;
  return {pass, fmt("lambda 0.1 improves %.0f/9 groups (needs >= 7), spread %.3f -> %.3f",
                    static_cast<double>(improved), spread_lo, spread_hi)};
}

// 8. Metrics fidelity on hand fixtures.
std::pair<bool, std::string> criterion_metrics_fidelity() {
  bool ok = true;
  // multi-label set arithmetic: pred {A,B} vs gold {A,C}
  const LevelMetrics m = multilabel_f1({{"A", "B"}}, {{"A", "C"}});
  ok &= std::abs(m.precision - 0.5) < 1e-12 && std::abs(m.recall - 0.5) < 1e-12 &&
        std::abs(m.f1 - 0.5) < 1e-12;
  // containment branch on the worked span
  ok &= span_match("submitted application", "I submitted application");
  // Jaccard 0.5 with no containment fails
  ok &= !span_match("a b c", "a b d");
  // Jaccard exactly 0.6 matches (inclusive boundary), no containment
  ok &= span_match("a b c x", "a b c y");
  // literal one-to-many counting: two predictions on one gold
  const SpanLevelResult two = span_f1({{"a b", "a b c"}}, {{"a b"}});
  ok &= two.counts.tp == 2 && two.counts.fp == 0 && two.counts.fn == 0;
  // unmatched prediction and gold
  const SpanLevelResult none = span_f1({{"x y z"}}, {{"p q r"}});
  ok &= none.counts.tp == 0 && none.counts.fp == 1 && none.counts.fn == 1 &&
        none.metrics.f1 == 0.0;
  return {ok, ok ? "all worked examples reproduced exactly" : "fixture mismatch"};
}

// 9. ERM equivalence of the never-activated controller.
std::pair<bool, std::string> criterion_erm_equivalence() {
  RunConfig erm = default_config(TrainMethod::kErm, 0);
  RunConfig star = default_config(TrainMethod::kStarDro, 0);
  star.activation_epoch = 0;  // never activates
  const RunRecord a = execute_run(erm);
  const RunRecord b = execute_run(star);
  if (a.loss_trajectory.size() != b.loss_trajectory.size()) {
    return {false, "trajectory lengths differ"};
  }
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < a.loss_trajectory.size(); ++i) {
    mismatches += a.loss_trajectory[i] != b.loss_trajectory[i];
  }
  return {mismatches == 0,
          fmt("%.0f/%.0f steps pointwise identical",
              static_cast<double>(a.loss_trajectory.size() - mismatches),
              static_cast<double>(a.loss_trajectory.size()))};
}

}  // namespace

int main() {
  std::printf("STaR-DRO acceptance suite\n");
  run_criterion(1, "projection oracle equivalence", criterion_projection_oracle);
  run_criterion(2, "softmax-limit agreement", criterion_softmax_limit);
  run_criterion(3, "simplex and multiplier bound invariants",
                [] { return criterion_controller_invariants(false); });
  run_criterion(4, "ascent normalization",
                [] { return criterion_controller_invariants(true); });
  run_criterion(5, "worst-group improvement at desk scale",
                criterion_worst_group_improvement);
  run_criterion(6, "regime reproduction (three-point sweep)", criterion_regime_sweep);
  run_criterion(7, "regularization direction", criterion_regularization_direction);
  run_criterion(8, "metrics fidelity", criterion_metrics_fidelity);
  run_criterion(9, "ERM equivalence of the inactive controller",
                criterion_erm_equivalence);
  if (g_failures == 0) {
    std::printf("all 9 criteria passed\n");
  } else {
    std::printf("%d criteria FAILED\n", g_failures);
  }
  return g_failures;
}
