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

#include "stardro/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>

#include "stardro/dataset.hpp"

namespace stardro {

namespace {

constexpr double kDivergenceThreshold = 1e6;

// One classification unit: an annotation with features, label, group id and
// its share of the completion tokens.
struct Unit {
  Vector features;  // augmented with trailing 1 for the bias
  int label = 0;
  int group = 0;
  double token_weight = 0.0;  // |T_a| / completion length
  int token_len = 1;
};

struct PreparedExample {
  std::vector<Unit> units;
  std::vector<int> groups;  // membership set, sorted distinct
};

int max_range_end(const std::vector<ExampleRecord>& records) {
  int m = 0;
  for (const ExampleRecord& ex : records) {
    for (const AnnotationRecord& a : ex.annotations) {
      if (a.token_range.has_value()) m = std::max(m, a.token_range->end);
    }
  }
  return m;
}

PreparedExample prepare_example(const ExampleRecord& ex, const GroupInventory& inventory,
                                int completion_length) {
  PreparedExample out;
  Membership m = memberships(ex, inventory);
  out.groups = m.groups;
  bool all_ranged = true;
  for (const AnnotationRecord& a : ex.annotations) {
    if (a.features.size() == 0 || !a.label.has_value()) {
      throw SchemaError("record " + ex.id + ": training requires features and label");
    }
    Unit u;
    u.features = Vector(a.features.size() + 1);
    u.features.head(a.features.size()) = a.features;
    u.features[a.features.size()] = 1.0;
    u.label = *a.label;
    u.group = inventory.id(group_key(inventory.scheme(), a, ex.annotations.size()));
    if (a.token_range.has_value() && a.token_range->length() > 0) {
      u.token_len = a.token_range->length();
    } else {
      all_ranged = false;
    }
    out.units.push_back(std::move(u));
  }
  if (out.units.empty()) throw SchemaError("record " + ex.id + ": no annotations");
  for (Unit& u : out.units) {
    u.token_weight = all_ranged && completion_length > 0
                         ? static_cast<double>(u.token_len) / completion_length
                         : 1.0 / static_cast<double>(out.units.size());
  }
  return out;
}

struct UnitEval {
  double ce = 0.0;
  Vector grad_logits;  // softmax(z) - onehot(y)
};

UnitEval eval_unit(const ToyModel& model, const Unit& u) {
  Vector z = model.theta.transpose() * u.features;
  const double zmax = z.maxCoeff();
  Vector p = (z.array() - zmax).exp();
  p /= p.sum();
  UnitEval out;
  out.ce = -std::log(std::max(p[u.label], 1e-300));
  out.grad_logits = p;
  out.grad_logits[u.label] -= 1.0;
  return out;
}

// Masked-mean example loss: each annotation token carries the annotation's
// per-token loss, tokens outside any annotation carry zero, and the example
// loss is the mean over completion tokens. With a constant completion length
// this makes sample mode, annotation mode and the plain masked mean agree
// exactly at neutral multipliers.
double example_loss(const PreparedExample& ex, const std::vector<UnitEval>& evals) {
  double acc = 0.0;
  for (std::size_t k = 0; k < ex.units.size(); ++k) {
    acc += ex.units[k].token_weight * evals[k].ce;
  }
  return acc;
}

struct ValStats {
  Vector per_group;
  double worst = 0.0;
  double mean = 0.0;
};

ValStats validate_model(const ToyModel& model, const std::vector<PreparedExample>& val,
                        Eigen::Index num_groups) {
  std::vector<Observation> obs;
  obs.reserve(val.size());
  double total = 0.0;
  for (const PreparedExample& ex : val) {
    std::vector<UnitEval> evals;
    evals.reserve(ex.units.size());
    for (const Unit& u : ex.units) evals.push_back(eval_unit(model, u));
    const double l = example_loss(ex, evals);
    obs.push_back(Observation{ex.groups, l});
    total += l;
  }
  GroupLossEstimate est = estimate_group_losses(obs, num_groups);
  ValStats out;
  out.per_group = est.raw;
  out.mean = val.empty() ? 0.0 : total / static_cast<double>(val.size());
  double worst = -std::numeric_limits<double>::infinity();
  for (int g : est.present) worst = std::max(worst, est.raw[g]);
  out.worst = std::isfinite(worst) ? worst : 0.0;
  return out;
}

}  // namespace

RunRecord train(const std::vector<ExampleRecord>& train_set,
                const std::vector<ExampleRecord>& val_set,
                const GroupInventory& inventory, const RunConfig& config) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (config.mode == LossMode::kAnnotation && config.method == TrainMethod::kStandardDro) {
    throw std::invalid_argument("train: annotation mode applies to erm|stardro only");
  }

  const Eigen::Index G = inventory.size();
  const int completion_length =
      std::max({config.task.completion_length, max_range_end(train_set), max_range_end(val_set)});

  std::vector<PreparedExample> train_prepared;
  train_prepared.reserve(train_set.size());
  for (const ExampleRecord& ex : train_set) {
    train_prepared.push_back(prepare_example(ex, inventory, completion_length));
  }
  std::vector<PreparedExample> val_prepared;
  val_prepared.reserve(val_set.size());
  for (const ExampleRecord& ex : val_set) {
    val_prepared.push_back(prepare_example(ex, inventory, completion_length));
  }

  const int feature_dim =
      static_cast<int>(train_prepared.front().units.front().features.size()) - 1;
  int classes = 0;
  for (const PreparedExample& ex : train_prepared) {
    for (const Unit& u : ex.units) classes = std::max(classes, u.label + 1);
  }
  if (classes < 2) throw SchemaError("train: need at least two classes");

  ToyModel model(feature_dim, classes, config.model.learning_rate,
                 config.model.weight_decay);

  const std::size_t N = train_prepared.size();
  const std::size_t B = static_cast<std::size_t>(config.model.batch_size);
  const std::uint64_t steps_per_epoch = (N + B - 1) / B;

  ReweighterConfig rw = config.reweighter;
  rw.activation_step = config.activation_epoch >= 1
                           ? (static_cast<std::uint64_t>(config.activation_epoch) - 1) *
                                 steps_per_epoch
                           : ReweighterConfig::kNever;
  ReweighterState state(G);

  RunRecord record;
  record.config = config;
  record.group_keys = inventory.keys();

  Rng rng(fnv1a64("trainer:" + std::to_string(config.seed)));
  std::vector<std::size_t> order(N);
  for (std::size_t i = 0; i < N; ++i) order[i] = i;

  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= config.model.epochs && !record.diverged; ++epoch) {
    rng.shuffle(order);
    for (std::size_t b0 = 0; b0 < N && !record.diverged; b0 += B, ++step) {
      const std::size_t b1 = std::min(N, b0 + B);

      std::vector<const PreparedExample*> batch;
      std::vector<std::vector<UnitEval>> evals;
      std::vector<double> ex_losses;
      for (std::size_t i = b0; i < b1; ++i) {
        const PreparedExample& ex = train_prepared[order[i]];
        std::vector<UnitEval> ev;
        ev.reserve(ex.units.size());
        for (const Unit& u : ex.units) ev.push_back(eval_unit(model, u));
        ex_losses.push_back(example_loss(ex, ev));
        batch.push_back(&ex);
        evals.push_back(std::move(ev));
      }

      for (double l : ex_losses) {
        if (!std::isfinite(l)) {
          record.diverged = true;
          record.error = "divergence at step " + std::to_string(step) +
                         " (non-finite batch loss)";
          break;
        }
      }
      if (record.diverged) break;

      std::vector<Observation> obs;
      if (config.mode == LossMode::kSample) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
          obs.push_back(Observation{batch[i]->groups, ex_losses[i]});
        }
      } else {
        for (std::size_t i = 0; i < batch.size(); ++i) {
          for (std::size_t k = 0; k < batch[i]->units.size(); ++k) {
            obs.push_back(Observation{{batch[i]->units[k].group}, evals[i][k].ce});
          }
        }
      }

      StepResult ctrl;
      double objective = 0.0;
      Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(model.theta.rows(), model.theta.cols());

      if (config.method == TrainMethod::kErm) {
        // Plain batch mean; the controller is never consulted.
        double num = 0.0;
        for (double l : ex_losses) num += l;
        objective = num / static_cast<double>(ex_losses.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
          for (std::size_t k = 0; k < batch[i]->units.size(); ++k) {
            grad.noalias() +=
                batch[i]->units[k].token_weight *
                (batch[i]->units[k].features * evals[i][k].grad_logits.transpose());
          }
        }
        grad /= static_cast<double>(ex_losses.size());
        ctrl.multipliers.per_example.assign(batch.size(), 1.0);
        std::vector<Observation> sample_obs;
        for (std::size_t i = 0; i < batch.size(); ++i) {
          sample_obs.push_back(Observation{batch[i]->groups, ex_losses[i]});
        }
        ctrl.stats.raw_losses = estimate_group_losses(sample_obs, G).raw;
        ctrl.stats.smoothed_losses =
            Vector::Constant(G, std::numeric_limits<double>::quiet_NaN());
      } else {
        ctrl = config.method == TrainMethod::kStarDro ? star_dro_step(state, rw, obs)
                                                      : standard_dro_step(state, rw, obs);
        if (config.mode == LossMode::kSample) {
          const std::vector<double>& m = ctrl.multipliers.per_example;
          double num = 0.0;
          double den = 0.0;
          for (std::size_t i = 0; i < batch.size(); ++i) {
            num += m[i] * ex_losses[i];
            den += m[i];
          }
          objective = num / den;
          for (std::size_t i = 0; i < batch.size(); ++i) {
            for (std::size_t k = 0; k < batch[i]->units.size(); ++k) {
              grad.noalias() +=
                  (m[i] * batch[i]->units[k].token_weight) *
                  (batch[i]->units[k].features * evals[i][k].grad_logits.transpose());
            }
          }
          grad /= den;
        } else {
          // Annotation mode: each annotated token inherits its group's
          // multiplier; unannotated completion tokens stay neutral with zero
          // loss, so they only enter the denominator.
          Vector mg = ctrl.multipliers.per_group.size() == G
                          ? ctrl.multipliers.per_group
                          : Vector::Ones(G);
          double num = 0.0;
          double den = 0.0;
          for (std::size_t i = 0; i < batch.size(); ++i) {
            double annotated = 0.0;
            for (std::size_t k = 0; k < batch[i]->units.size(); ++k) {
              const Unit& u = batch[i]->units[k];
              num += mg[u.group] * u.token_len * evals[i][k].ce;
              den += mg[u.group] * u.token_len;
              annotated += u.token_len;
            }
            den += completion_length - annotated;
          }
          objective = num / den;
          for (std::size_t i = 0; i < batch.size(); ++i) {
            for (std::size_t k = 0; k < batch[i]->units.size(); ++k) {
              const Unit& u = batch[i]->units[k];
              grad.noalias() += (mg[u.group] * u.token_len) *
                                (u.features * evals[i][k].grad_logits.transpose());
            }
          }
          grad /= den;
        }
      }

      record.loss_trajectory.push_back(objective);
      if (!std::isfinite(objective) || objective > kDivergenceThreshold) {
        record.diverged = true;
        record.error = "divergence at step " + std::to_string(step) + " (objective " +
                       std::to_string(objective) + ")";
        break;
      }

      // Decoupled weight decay on the weight rows, bias exempt.
      model.theta.topRows(model.theta.rows() - 1) *=
          (1.0 - model.learning_rate * model.weight_decay);
      model.theta.noalias() -= model.learning_rate * grad;

      StepLog log;
      log.step = step;
      const ReweighterDiagnostics diag = diagnostics(state, rw);
      log.entropy = diag.entropy;
      log.active_set = diag.active_set_size;
      log.eta_eff = diag.eta_eff;
      log.q = state.q.weights();
      log.raw_losses = ctrl.stats.raw_losses;
      log.ema_losses = ctrl.stats.smoothed_losses;
      log.batch_loss = objective;
      if (!ctrl.multipliers.per_example.empty()) {
        double mx = 0.0;
        double sum = 0.0;
        for (double m : ctrl.multipliers.per_example) {
          mx = std::max(mx, m);
          sum += m;
        }
        log.mult_mean = sum / static_cast<double>(ctrl.multipliers.per_example.size());
        log.mult_max = mx;
      }
      record.steps.push_back(std::move(log));
    }

    if (!record.diverged && !val_prepared.empty()) {
      ValStats vs = validate_model(model, val_prepared, G);
      record.val_history.push_back(EpochVal{epoch, vs.per_group, vs.worst, vs.mean});
    }
  }

  record.final_q = state.q.weights();
  record.final_diagnostics = diagnostics(state, rw);
  record.regime = classify_regime(state.q);
  if (!record.val_history.empty()) {
    const EpochVal& last = record.val_history.back();
    record.final_per_group_val = last.per_group;
    record.final_worst_val = last.worst;
    record.final_mean_val = last.mean;
  }
  return record;
}

RunRecord execute_run(const RunConfig& config) {
  config.validate();
  std::vector<ExampleRecord> train_set;
  std::vector<ExampleRecord> val_set;
  if (config.dataset.has_value()) {
    train_set = load_jsonl(config.dataset->train);
    val_set = load_jsonl(config.dataset->validation);
  } else {
    SyntheticDataset data = generate_synthetic(config.task);
    train_set = std::move(data.train);
    val_set = std::move(data.validation);
  }
  // The inventory is built from the training split; validation examples whose
  // groups never occur in training are excluded from group-loss reports
  // rather than silently merged.
  GroupInventory inventory = build_inventory(train_set, config.scheme);
  std::vector<ExampleRecord> usable_val;
  std::size_t excluded = 0;
  for (ExampleRecord& ex : val_set) {
    bool known = true;
    for (const AnnotationRecord& a : ex.annotations) {
      if (!inventory.find(group_key(config.scheme, a, ex.annotations.size())).has_value()) {
        known = false;
        break;
      }
    }
    if (known) {
      usable_val.push_back(std::move(ex));
    } else {
      ++excluded;
    }
  }
  if (excluded > 0) {
    std::fprintf(stderr,
                 "note: excluded %zu validation examples whose groups never occur "
                 "in training\n",
                 excluded);
  }
  return train(train_set, usable_val, inventory, config);
}

std::vector<RunRecord> sweep(const std::vector<SweepEntry>& entries, int jobs) {
  std::vector<RunRecord> records(entries.size());
  const auto run_one = [&](std::size_t i) {
    try {
      records[i] = execute_run(entries[i].config);
    } catch (const std::exception& e) {
      records[i].config = entries[i].config;
      records[i].error = e.what();
    }
  };
  if (jobs <= 1) {
    for (std::size_t i = 0; i < entries.size(); ++i) run_one(i);
    return records;
  }
  std::vector<std::future<void>> pending;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    pending.push_back(std::async(std::launch::async, run_one, i));
    if (pending.size() >= static_cast<std::size_t>(jobs)) {
      pending.front().get();
      pending.erase(pending.begin());
    }
  }
  for (auto& f : pending) f.get();
  return records;
}

std::vector<SweepEntry> make_regime_sweep(const RunConfig& base) {
  const double eta_eff = base.reweighter.eta_effective();

  RunConfig over = base;
  // x100 effective dual step, realized by raising both the Tsallis order and
  // the step size: at small alpha the mapback exponent keeps thresholded
  // coordinates positive, so exact zeros need the flatter geometry too.
  over.reweighter.alpha = 2.0;
  over.reweighter.eta = 100.0 * eta_eff / (over.reweighter.alpha - 1.0);

  RunConfig under = base;
  under.reweighter.eta = base.reweighter.eta / 100.0;

  return {SweepEntry{"baseline", base}, SweepEntry{"eta_eff_x100", over},
          SweepEntry{"eta_eff_div100", under}};
}

}  // namespace stardro
