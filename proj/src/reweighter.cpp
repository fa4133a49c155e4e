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

#include "stardro/reweighter.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace stardro {

void ReweighterConfig::validate() const {
  if (!(alpha > 1.0)) throw std::invalid_argument("ReweighterConfig: alpha must be > 1");
  if (!(eta > 0.0)) throw std::invalid_argument("ReweighterConfig: eta must be > 0");
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("ReweighterConfig: rho must be in (0, 1]");
  }
  if (!(ceiling > 1.0)) throw std::invalid_argument("ReweighterConfig: ceiling must be > 1");
  if (!(curvature > 0.0)) throw std::invalid_argument("ReweighterConfig: curvature must be > 0");
}

GroupLossEstimate estimate_group_losses(const std::vector<Observation>& observations,
                                        Eigen::Index num_groups) {
  GroupLossEstimate out;
  out.counts = Vector::Zero(num_groups);
  out.raw = Vector::Constant(num_groups, std::numeric_limits<double>::quiet_NaN());
  Vector num = Vector::Zero(num_groups);
  Vector den = Vector::Zero(num_groups);
  for (const Observation& obs : observations) {
    if (obs.groups.empty()) {
      throw std::invalid_argument("estimate_group_losses: empty membership set");
    }
    if (!std::isfinite(obs.unit_loss)) {
      throw std::invalid_argument("estimate_group_losses: non-finite loss");
    }
    const double inv_nu = 1.0 / static_cast<double>(obs.groups.size());
    for (int g : obs.groups) {
      if (g < 0 || g >= num_groups) {
        throw std::invalid_argument("estimate_group_losses: group id out of range");
      }
      num[g] += inv_nu * obs.unit_loss;
      den[g] += inv_nu;
      out.counts[g] += 1.0;
    }
  }
  for (Eigen::Index g = 0; g < num_groups; ++g) {
    if (den[g] > 0.0) {
      out.raw[g] = num[g] / den[g];
      out.present.push_back(static_cast<int>(g));
    }
  }
  return out;
}

void update_ema(ReweighterState& state, const GroupLossEstimate& estimate,
                double rho) {
  for (int g : estimate.present) {
    const double raw = estimate.raw[g];
    state.ema_losses[g] =
        state.seen(g) ? (1.0 - rho) * state.ema_losses[g] + rho * raw : raw;
  }
}

AscentSignal compute_ascent(const Vector& smoothed, const Vector& counts,
                            const std::vector<int>& present) {
  AscentSignal out;
  out.ascent = Vector::Zero(smoothed.size());
  if (present.empty()) {
    out.degenerate = true;
    return out;
  }
  double total = 0.0;
  for (int g : present) total += counts[g];
  if (!(total > 0.0)) throw std::invalid_argument("compute_ascent: total count is zero");
  double s = 0.0;
  for (int g : present) {
    if (std::isnan(smoothed[g])) {
      throw std::invalid_argument("compute_ascent: present group without smoothed loss");
    }
    s += (counts[g] / total) * smoothed[g];
  }
  out.scale = s;
  if (!(s > 0.0)) {
    // All present losses zero: no usable hardness signal, skip the mirror
    // step this round rather than divide by zero.
    out.degenerate = true;
    return out;
  }
  for (int g : present) out.ascent[g] = smoothed[g] / s;
  return out;
}

namespace {

GroupBatchStats make_stats(const ReweighterState& state,
                           const GroupLossEstimate& estimate,
                           const AscentSignal& ascent) {
  GroupBatchStats stats;
  stats.present = estimate.present;
  stats.counts = estimate.counts;
  stats.raw_losses = estimate.raw;
  stats.smoothed_losses = state.ema_losses;
  stats.scale = ascent.scale;
  stats.ascent = ascent.ascent;
  stats.degenerate_scale = ascent.degenerate;
  return stats;
}

std::vector<double> aggregate_per_example(const std::vector<Observation>& observations,
                                          const Vector& per_group) {
  std::vector<double> out;
  out.reserve(observations.size());
  for (const Observation& obs : observations) {
    double acc = 0.0;
    for (int g : obs.groups) acc += per_group[g];
    out.push_back(acc / static_cast<double>(obs.groups.size()));
  }
  return out;
}

}  // namespace

StepResult star_dro_step(ReweighterState& state, const ReweighterConfig& config,
                         const std::vector<Observation>& observations) {
  config.validate();
  const Eigen::Index G = state.num_groups();
  GroupLossEstimate estimate = estimate_group_losses(observations, G);
  update_ema(state, estimate, config.rho);
  AscentSignal ascent = compute_ascent(state.ema_losses, estimate.counts,
                                       estimate.present);

  const std::uint64_t t = state.step;
  state.step += 1;

  StepResult result;
  result.stats = make_stats(state, estimate, ascent);

  if (t < config.activation_step) {
    // Warm-start the EMA, cold-start q: statistics accumulate from step zero
    // but the adversary stays uniform and every multiplier is neutral.
    result.multipliers.per_group = Vector::Ones(G);
    result.multipliers.per_example.assign(observations.size(), 1.0);
    return result;
  }
  if (t == config.activation_step) {
    state.q = SimplexVector::uniform(G);
  }

  if (!ascent.degenerate) {
    Projection proj = mirror_ascent_step(state.q, ascent.ascent,
                                         TsallisOrder(config.alpha), config.eta);
    state.q = proj.q;
  }

  // Bounded excess-only multipliers from the post-update simplex: only mass
  // above the uniform baseline 1/G maps to extra weight.
  Vector m = Vector::Ones(G);
  const double gd = static_cast<double>(G);
  for (int g : estimate.present) {
    const double r = gd * state.q[g];
    double e = G > 1 ? (r - 1.0) / (gd - 1.0) : 0.0;
    e = std::clamp(e, 0.0, 1.0);
    m[g] = 1.0 + (config.ceiling - 1.0) * std::pow(e, config.curvature);
  }
  result.multipliers.per_group = m;
  result.multipliers.per_example = aggregate_per_example(observations, m);
  return result;
}

StepResult standard_dro_step(ReweighterState& state, const ReweighterConfig& config,
                             const std::vector<Observation>& observations) {
  config.validate();
  const Eigen::Index G = state.num_groups();
  GroupLossEstimate estimate = estimate_group_losses(observations, G);

  const std::uint64_t t = state.step;
  state.step += 1;

  StepResult result;
  result.stats = make_stats(state, estimate, AscentSignal{0.0, Vector::Zero(G), false});

  if (t < config.activation_step) {
    result.multipliers.per_example.assign(observations.size(), 1.0);
    return result;
  }
  if (t == config.activation_step) {
    state.q = SimplexVector::uniform(G);
  }

  // Raw minibatch losses drive the dense update; absent groups contribute a
  // zero gradient (exp(0), unchanged before renormalization).
  Vector losses = Vector::Zero(G);
  for (int g : estimate.present) losses[g] = estimate.raw[g];
  state.q = exponentiated_gradient_step(state.q, losses, config.eta);

  std::vector<double> w;
  w.reserve(observations.size());
  double total = 0.0;
  for (const Observation& obs : observations) {
    double acc = 0.0;
    for (int g : obs.groups) acc += state.q[g];
    acc /= static_cast<double>(obs.groups.size());
    w.push_back(acc);
    total += acc;
  }
  if (total > 0.0) {
    const double scale = static_cast<double>(w.size()) / total;
    for (double& x : w) x *= scale;
  } else {
    // Entire batch drawn from zero-mass groups; fall back to neutral weights.
    std::fill(w.begin(), w.end(), 1.0);
  }
  result.multipliers.per_example = std::move(w);
  return result;
}

ReweighterDiagnostics diagnostics(const ReweighterState& state,
                                  const ReweighterConfig& config) {
  ReweighterDiagnostics d;
  for (Eigen::Index g = 0; g < state.num_groups(); ++g) {
    const double q = state.q[g];
    if (q > 0.0) {
      d.entropy -= q * std::log(q);
      d.active_set_size += 1;
    }
  }
  d.eta_eff = config.eta_effective();
  return d;
}

std::string to_json(const ReweighterState& state, const ReweighterConfig& config) {
  nlohmann::json j;
  j["q"] = std::vector<double>(state.q.weights().begin(), state.q.weights().end());
  nlohmann::json ema = nlohmann::json::array();
  for (Eigen::Index g = 0; g < state.num_groups(); ++g) {
    if (state.seen(g)) {
      ema.push_back(state.ema_losses[g]);
    } else {
      ema.push_back(nullptr);
    }
  }
  j["ema_losses"] = std::move(ema);
  j["step"] = state.step;
  j["alpha"] = config.alpha;
  j["eta"] = config.eta;
  j["rho"] = config.rho;
  j["ceiling"] = config.ceiling;
  j["curvature"] = config.curvature;
  if (config.activation_step == ReweighterConfig::kNever) {
    j["activation_step"] = -1;
  } else {
    j["activation_step"] = config.activation_step;
  }
  return j.dump();
}

void from_json(const std::string& text, ReweighterState& state,
               ReweighterConfig& config) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("reweighter snapshot: ") + e.what());
  }
  try {
    std::vector<double> q = j.at("q").get<std::vector<double>>();
    ReweighterState loaded(static_cast<Eigen::Index>(q.size()));
    loaded.q = SimplexVector(Eigen::Map<Vector>(q.data(), static_cast<Eigen::Index>(q.size())));
    const nlohmann::json& ema = j.at("ema_losses");
    if (ema.size() != q.size()) throw SchemaError("reweighter snapshot: ema length mismatch");
    for (std::size_t g = 0; g < ema.size(); ++g) {
      loaded.ema_losses[static_cast<Eigen::Index>(g)] =
          ema[g].is_null() ? std::numeric_limits<double>::quiet_NaN()
                           : ema[g].get<double>();
    }
    loaded.step = j.at("step").get<std::uint64_t>();
    ReweighterConfig cfg;
    cfg.alpha = j.at("alpha").get<double>();
    cfg.eta = j.at("eta").get<double>();
    cfg.rho = j.at("rho").get<double>();
    cfg.ceiling = j.at("ceiling").get<double>();
    cfg.curvature = j.at("curvature").get<double>();
    const auto act = j.at("activation_step");
    if (act.is_number_integer() && act.get<std::int64_t>() < 0) {
      cfg.activation_step = ReweighterConfig::kNever;
    } else {
      cfg.activation_step = act.get<std::uint64_t>();
    }
    cfg.validate();
    state = std::move(loaded);
    config = cfg;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("reweighter snapshot: ") + e.what());
  }
}

}  // namespace stardro
