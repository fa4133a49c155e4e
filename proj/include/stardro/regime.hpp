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

#include <string>

#include "stardro/simplex.hpp"

// Regime classification of a converged adversarial distribution, and
// group-count-bucketed hyperparameter recommendations.

namespace stardro {

enum class RegimeLabel { kBalanced, kOverConcentrated, kUnderDifferentiated };

std::string to_string(RegimeLabel label);

struct RegimeThresholds {
  double top2_mass = 0.94;          // over-concentration: top-2 mass at least this
  double uniform_band = 0.02;       // under-differentiation: max |q - 1/G| below this
  double entropy_floor_factor = 0.5;  // over-concentration entropy floor, x ln G
};

struct RegimeResult {
  RegimeLabel label = RegimeLabel::kBalanced;
  double top2_mass = 0.0;
  double max_uniform_deviation = 0.0;
  double entropy = 0.0;
  int active_set_size = 0;
  int exact_zeros = 0;
};

// Total and deterministic; over-concentration is checked first, then
// under-differentiation, else balanced.
RegimeResult classify_regime(const SimplexVector& q,
                             const RegimeThresholds& thresholds = {});

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double midpoint() const { return 0.5 * (lo + hi); }
};

struct HyperparamRecommendation {
  Range eta;
  Range rho;
  Range alpha;
  double eta_eff_target = 0.0;
  Range weight_decay;
  int activation_epoch = 2;
  bool degenerate = false;  // G == 1: group-robust reweighting is vacuous
  std::string note;
};

// Recommended operating ranges by group count; the effective dual step target
// scales like 1/G.
HyperparamRecommendation recommend_hyperparams(int num_groups);

}  // namespace stardro
