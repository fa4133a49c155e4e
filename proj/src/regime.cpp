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

#include "stardro/regime.hpp"

#include <algorithm>
#include <cmath>

namespace stardro {

std::string to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::kBalanced: return "balanced";
    case RegimeLabel::kOverConcentrated: return "over_concentrated";
    case RegimeLabel::kUnderDifferentiated: return "under_differentiated";
  }
  return "balanced";
}

RegimeResult classify_regime(const SimplexVector& q, const RegimeThresholds& th) {
  const Eigen::Index G = q.size();
  RegimeResult r;
  double top1 = 0.0;
  double top2 = 0.0;
  const double uniform = 1.0 / static_cast<double>(G);
  for (Eigen::Index g = 0; g < G; ++g) {
    const double w = q[g];
    if (w > top1) {
      top2 = top1;
      top1 = w;
    } else if (w > top2) {
      top2 = w;
    }
    r.max_uniform_deviation = std::max(r.max_uniform_deviation, std::abs(w - uniform));
    if (w > 0.0) {
      r.entropy -= w * std::log(w);
      r.active_set_size += 1;
    } else {
      r.exact_zeros += 1;
    }
  }
  r.top2_mass = G >= 2 ? top1 + top2 : top1;

  const double entropy_floor = th.entropy_floor_factor * std::log(static_cast<double>(G));
  const bool over = r.top2_mass >= th.top2_mass ||
                    (r.exact_zeros >= 1 && r.active_set_size <= static_cast<int>(G) - 1 &&
                     r.entropy < entropy_floor);
  if (G >= 2 && over) {
    r.label = RegimeLabel::kOverConcentrated;
  } else if (r.max_uniform_deviation < th.uniform_band) {
    r.label = RegimeLabel::kUnderDifferentiated;
  } else {
    r.label = RegimeLabel::kBalanced;
  }
  return r;
}

HyperparamRecommendation recommend_hyperparams(int num_groups) {
  if (num_groups < 1) throw std::invalid_argument("recommend_hyperparams: G must be >= 1");
  HyperparamRecommendation rec;
  if (num_groups == 1) {
    rec.degenerate = true;
    rec.note = "single group: group-robust reweighting is vacuous, train with ERM";
    rec.eta = {0.0, 0.0};
    rec.rho = {0.0, 0.0};
    rec.alpha = {1.0, 1.0};
    rec.weight_decay = {0.0, 0.0};
    return rec;
  }
  if (num_groups <= 10) {
    rec.eta = {3e-3, 5e-3};
    rec.rho = {0.02, 0.05};
    rec.alpha = {1.05, 1.15};
    rec.eta_eff_target = 2e-4;
    rec.weight_decay = {0.05, 0.10};
    rec.activation_epoch = 2;
  } else if (num_groups <= 30) {
    rec.eta = {1e-3, 3e-3};
    rec.rho = {0.03, 0.08};
    rec.alpha = {1.03, 1.10};
    rec.eta_eff_target = 1e-4;
    rec.weight_decay = {0.05, 0.10};
    rec.activation_epoch = 2;
  } else if (num_groups <= 100) {
    rec.eta = {5e-4, 1e-3};
    rec.rho = {0.05, 0.10};
    rec.alpha = {1.02, 1.05};
    rec.eta_eff_target = 5e-5;
    rec.weight_decay = {0.05, 0.15};
    rec.activation_epoch = 2;
  } else {
    rec.eta = {1e-4, 1e-3};
    rec.rho = {0.08, 0.15};
    rec.alpha = {1.01, 1.03};
    rec.eta_eff_target = 1e-5;
    rec.weight_decay = {0.10, 0.20};
    rec.activation_epoch = 3;
  }
  return rec;
}

}  // namespace stardro
