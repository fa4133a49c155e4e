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
#include <vector>

#include "stardro/regime.hpp"
#include "stardro/runconfig.hpp"

// Desk-scale training harness: a multinomial logistic model over the
// synthetic grouped data, trained with plain gradient descent plus decoupled
// weight decay under ERM, standard group DRO, or STaR-DRO. Minibatches are
// drawn by uniform shuffling without group stratification, so minibatch group
// sparsity genuinely occurs. Each run is single-threaded and deterministic
// given its seed; sweeps may run entries concurrently.

namespace stardro {

// Multinomial logistic regression. Parameters are (features + 1) x classes
// with the bias in the last row; the bias is excluded from weight decay.
struct ToyModel {
  Eigen::MatrixXd theta;
  double learning_rate = 0.2;
  double weight_decay = 0.1;

  ToyModel(int feature_dim, int classes, double lr, double wd)
      : theta(Eigen::MatrixXd::Zero(feature_dim + 1, classes)),
        learning_rate(lr),
        weight_decay(wd) {}

  int feature_dim() const { return static_cast<int>(theta.rows()) - 1; }
  int classes() const { return static_cast<int>(theta.cols()); }
};

struct StepLog {
  std::uint64_t step = 0;
  double entropy = 0.0;
  int active_set = 0;
  double eta_eff = 0.0;
  Vector q;           // adversarial weights after the step
  Vector raw_losses;  // minibatch group-loss estimates (NaN when absent)
  Vector ema_losses;  // controller EMA (NaN before first observation)
  double batch_loss = 0.0;
  double mult_mean = 1.0;
  double mult_max = 1.0;
};

struct EpochVal {
  int epoch = 0;           // 1-based
  Vector per_group;        // per-group validation loss
  double worst = 0.0;
  double mean = 0.0;
};

struct RunRecord {
  RunConfig config;
  std::vector<std::string> group_keys;
  std::vector<StepLog> steps;
  std::vector<EpochVal> val_history;
  std::vector<double> loss_trajectory;  // batch objective per step
  bool diverged = false;
  std::string error;  // non-empty when the run failed (sweep keeps going)
  Vector final_q;
  Vector final_per_group_val;
  double final_worst_val = 0.0;
  double final_mean_val = 0.0;
  ReweighterDiagnostics final_diagnostics;
  RegimeResult regime;
};

// Train on prepared datasets. The inventory must cover every group realized
// in both splits.
RunRecord train(const std::vector<ExampleRecord>& train_set,
                const std::vector<ExampleRecord>& val_set,
                const GroupInventory& inventory, const RunConfig& config);

// Build the data (synthetic task or dataset files) and train.
RunRecord execute_run(const RunConfig& config);

struct SweepEntry {
  std::string name;
  RunConfig config;
};

// Independent runs; per-run failures are captured in the record and the
// sweep continues. jobs > 1 runs entries concurrently.
std::vector<RunRecord> sweep(const std::vector<SweepEntry>& entries, int jobs = 1);

// The three-point regime sweep around a base configuration: baseline,
// effective dual step x100 (raising both alpha and eta), and /100.
std::vector<SweepEntry> make_regime_sweep(const RunConfig& base);

}  // namespace stardro
