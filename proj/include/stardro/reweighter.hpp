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

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stardro/simplex.hpp"

// The stateful STaR-DRO controller and the standard group-DRO baseline.
//
// Per step the controller consumes one observation per training unit (its
// group-membership set S_i and unit loss u_i), maintains EMA difficulty
// estimates and the adversarial simplex, and emits bounded per-group and
// per-example multipliers. A single training loop owns a ReweighterState and
// calls steps sequentially; the state is plain data and can be snapshotted.

namespace stardro {

struct Observation {
  std::vector<int> groups;  // membership set S_i, distinct group ids
  double unit_loss = 0.0;   // u_i
};

struct ReweighterConfig {
  double alpha = 1.08;       // Tsallis order
  double eta = 3e-3;         // mirror-ascent step size
  double rho = 0.03;         // EMA coefficient
  double ceiling = 10.0;     // multiplier ceiling U
  double curvature = 0.75;   // shaping exponent gamma
  // Global step at which robust reweighting turns on; kNever disables it.
  std::uint64_t activation_step = 0;

  static constexpr std::uint64_t kNever =
      std::numeric_limits<std::uint64_t>::max();

  void validate() const;
  double eta_effective() const { return (alpha - 1.0) * eta; }
};

struct ReweighterState {
  SimplexVector q;              // adversarial weights q_t
  Vector ema_losses;            // L_{t,g}; NaN until the group is first seen
  std::uint64_t step = 0;       // t

  explicit ReweighterState(Eigen::Index groups)
      : q(SimplexVector::uniform(groups)),
        ema_losses(Vector::Constant(groups, std::numeric_limits<double>::quiet_NaN())) {}

  Eigen::Index num_groups() const { return q.size(); }
  bool seen(Eigen::Index g) const { return !std::isnan(ema_losses[g]); }
};

// Raw overlap-corrected minibatch group-loss estimates. `raw` holds NaN for
// absent groups; `counts` holds n_{t,g} (zero when absent).
struct GroupLossEstimate {
  std::vector<int> present;  // sorted
  Vector counts;
  Vector raw;
};

struct AscentSignal {
  double scale = 0.0;  // s_t
  Vector ascent;       // a_{t,g}; zero for absent groups
  bool degenerate = false;  // s_t == 0: no usable signal this step
};

// Everything observed and derived in one controller step.
struct GroupBatchStats {
  std::vector<int> present;
  Vector counts;
  Vector raw_losses;
  Vector smoothed_losses;
  double scale = 0.0;
  Vector ascent;
  bool degenerate_scale = false;
};

// Robust weights emitted for one step. per_group is in [1, U] with absent
// groups exactly 1 (populated by the STaR path; the standard-DRO path leaves
// it empty and fills only per_example). per_example aligns with the
// observation order. per_token, when used, is produced downstream by the
// attribution layer.
struct MultiplierSet {
  Vector per_group;
  std::vector<double> per_example;
};

struct StepResult {
  MultiplierSet multipliers;
  GroupBatchStats stats;
};

// Overlap-corrected group-loss estimation: each example contributes 1/nu_i
// of its unit loss to every group it belongs to.
GroupLossEstimate estimate_group_losses(const std::vector<Observation>& observations,
                                        Eigen::Index num_groups);

// EMA update: first observation seeds the value, later observations blend
// with coefficient rho, absent groups keep their value unchanged.
void update_ema(ReweighterState& state, const GroupLossEstimate& estimate,
                double rho);

// Count-weighted rescaling of smoothed losses into the relative-hardness
// ascent signal; the count-weighted mean of the ascent over present groups
// is one by construction.
AscentSignal compute_ascent(const Vector& smoothed, const Vector& counts,
                            const std::vector<int>& present);

// One STaR-DRO controller step: estimate -> EMA -> ascent -> mirror step ->
// multiplier shaping -> aggregation. Before the activation step the EMA still
// accumulates but q stays untouched and all multipliers are 1.
StepResult star_dro_step(ReweighterState& state, const ReweighterConfig& config,
                         const std::vector<Observation>& observations);

// Standard group-DRO baseline step: exponentiated-gradient update on the raw
// minibatch group losses (no EMA, no rescale); per-example weights are
// sum_{g in S_i} q_g / nu_i, normalized to batch mean one.
StepResult standard_dro_step(ReweighterState& state, const ReweighterConfig& config,
                             const std::vector<Observation>& observations);

struct ReweighterDiagnostics {
  double entropy = 0.0;      // -sum q ln q over positive entries, nats
  int active_set_size = 0;   // count of strictly positive weights
  double eta_eff = 0.0;      // (alpha - 1) * eta
};

ReweighterDiagnostics diagnostics(const ReweighterState& state,
                                  const ReweighterConfig& config);

// JSON snapshot of state plus config for checkpoint/resume. Field names are
// fixed: "q", "ema_losses", "step", "alpha", "eta", "rho", "ceiling",
// "curvature", "activation_step". Never-seen EMA entries serialize as null.
std::string to_json(const ReweighterState& state, const ReweighterConfig& config);
void from_json(const std::string& text, ReweighterState& state,
               ReweighterConfig& config);

}  // namespace stardro
