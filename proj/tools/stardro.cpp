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

// Command-line entry point: run | sweep | project | evaluate | generate |
// recommend. Exit codes: 0 success, 2 input error (missing/malformed files,
// bad flags), 3 schema error (valid JSON, wrong shape / id mismatch),
// 4 numerical failure or divergence.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "stardro/dataset.hpp"
#include "stardro/diagnostics.hpp"
#include "stardro/metrics.hpp"
#include "stardro/trainer.hpp"

namespace {

using namespace stardro;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitSchema = 3;
constexpr int kExitNumerical = 4;

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// STARDRO_OUT overrides any --out flag.
std::string resolve_out(const std::string& flag_value) {
  if (const char* env = std::getenv("STARDRO_OUT"); env != nullptr && *env != '\0') {
    return env;
  }
  return flag_value;
}

Vector parse_vector_line(const std::string& line) {
  std::istringstream in(line);
  std::vector<double> xs;
  double x = 0.0;
  while (in >> x) xs.push_back(x);
  if (!in.eof()) throw std::invalid_argument("expected whitespace-separated numbers");
  if (xs.empty()) throw std::invalid_argument("empty input line");
  return Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

int cmd_run(const std::string& config_path, const std::string& method_override,
            std::int64_t seed_override, const std::string& out_override) {
  RunConfig config = load_run_config(config_path);
  if (!method_override.empty()) config.method = method_from_string(method_override);
  if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) config.out_dir = out_override;
  config.out_dir = resolve_out(config.out_dir);

  RunRecord record = execute_run(config);
  const std::filesystem::path dir =
      std::filesystem::path(config.out_dir) / run_id(config);
  const std::filesystem::path summary = export_trace(record, dir);
  std::cout << "run " << run_id(config) << " method=" << to_string(config.method)
            << " seed=" << config.seed << " regime=" << to_string(record.regime.label)
            << "\n"
            << "worst_group_val_loss=" << fmt12(record.final_worst_val)
            << " mean_val_loss=" << fmt12(record.final_mean_val) << "\n"
            << "summary: " << summary.string() << std::endl;
  if (record.diverged) {
    std::cerr << "error: " << record.error << std::endl;
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& out_override,
              bool regimes, int jobs) {
  std::vector<SweepEntry> entries;
  if (regimes) {
    RunConfig base = load_run_config(config_path);
    if (!out_override.empty()) base.out_dir = out_override;
    base.out_dir = resolve_out(base.out_dir);
    entries = make_regime_sweep(base);
  } else {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot open config file: " + config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument(std::string("malformed sweep config: ") + e.what());
    }
    if (!j.contains("runs") || !j.at("runs").is_array()) {
      throw SchemaError("sweep config must hold a \"runs\" array");
    }
    int k = 0;
    for (const nlohmann::json& rj : j.at("runs")) {
      RunConfig c = run_config_from_json(rj.dump());
      if (!out_override.empty()) c.out_dir = out_override;
      c.out_dir = resolve_out(c.out_dir);
      entries.push_back(SweepEntry{"run" + std::to_string(k++), c});
    }
  }

  std::vector<RunRecord> records = sweep(entries, jobs);
  bool any_failed = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RunRecord& r = records[i];
    if (!r.error.empty() && r.steps.empty()) {
      any_failed = true;
      std::cout << entries[i].name << ": FAILED (" << r.error << ")" << std::endl;
      continue;
    }
    const std::filesystem::path dir =
        std::filesystem::path(entries[i].config.out_dir) / run_id(entries[i].config);
    export_trace(r, dir);
    std::cout << entries[i].name << ": regime=" << to_string(r.regime.label)
              << " top2=" << fmt12(r.regime.top2_mass)
              << " zeros=" << r.regime.exact_zeros
              << " worst=" << fmt12(r.final_worst_val) << std::endl;
  }
  return any_failed ? kExitNumerical : kExitOk;
}

int cmd_project(double alpha, double eta, double tol) {
  TsallisOrder order(alpha);
  std::string line;
  if (!std::getline(std::cin, line)) throw std::invalid_argument("no input on stdin");
  if (eta > 0.0) {
    // Mirror-step mode: first line is the simplex point, second the ascent.
    const Vector qv = parse_vector_line(line);
    std::string line2;
    if (!std::getline(std::cin, line2)) {
      throw std::invalid_argument("mirror-step mode expects a second input line");
    }
    const Vector ascent = parse_vector_line(line2);
    Projection p = mirror_ascent_step(SimplexVector(qv), ascent, order, eta, tol);
    for (Eigen::Index g = 0; g < p.q.size(); ++g) {
      std::cout << (g > 0 ? " " : "") << fmt12(p.q[g]);
    }
    std::cout << " | lambda=" << fmt12(p.lambda) << std::endl;
    return kExitOk;
  }
  const Vector u = parse_vector_line(line);
  Projection p = entmax_project(u, order, tol);
  for (Eigen::Index g = 0; g < p.q.size(); ++g) {
    std::cout << (g > 0 ? " " : "") << fmt12(p.q[g]);
  }
  std::cout << " | lambda=" << fmt12(p.lambda) << std::endl;
  return kExitOk;
}

struct LoadedPredictions {
  std::vector<std::string> ids;
  PredictionSet sets;
};

LoadedPredictions load_predictions(const std::string& path) {
  LoadedPredictions out;
  for (const ExampleRecord& ex : load_jsonl(path)) {
    LabelSet codes;
    LabelSet subcodes;
    LabelSet spans;
    for (const AnnotationRecord& a : ex.annotations) {
      codes.insert(a.code);
      subcodes.insert(a.subcode);
      spans.insert(a.span);
    }
    out.ids.push_back(ex.id);
    out.sets.codes.push_back(std::move(codes));
    out.sets.subcodes.push_back(std::move(subcodes));
    out.sets.spans.push_back(std::move(spans));
  }
  return out;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gold_path,
                 bool one_to_one) {
  LoadedPredictions pred = load_predictions(pred_path);
  LoadedPredictions gold = load_predictions(gold_path);

  std::map<std::string, std::size_t> pred_index;
  for (std::size_t i = 0; i < pred.ids.size(); ++i) pred_index[pred.ids[i]] = i;
  std::vector<std::string> missing;
  PredictionSet aligned;
  for (std::size_t i = 0; i < gold.ids.size(); ++i) {
    auto it = pred_index.find(gold.ids[i]);
    if (it == pred_index.end()) {
      missing.push_back(gold.ids[i]);
      continue;
    }
    aligned.codes.push_back(pred.sets.codes[it->second]);
    aligned.subcodes.push_back(pred.sets.subcodes[it->second]);
    aligned.spans.push_back(pred.sets.spans[it->second]);
    pred_index.erase(it);
  }
  for (const auto& [id, idx] : pred_index) {
    (void)idx;
    missing.push_back(id);
  }
  if (!missing.empty()) {
    std::cerr << "instance-id mismatch; unmatched ids:";
    for (const std::string& id : missing) std::cerr << " " << id;
    std::cerr << std::endl;
    return kExitSchema;
  }

  const MetricsReport report =
      evaluate(aligned, gold.sets,
               one_to_one ? SpanMatchPolicy::kOneToOne : SpanMatchPolicy::kOneToMany);
  std::cout << report_to_json(report) << std::endl;
  return kExitOk;
}

int cmd_generate(const std::string& task_path, std::int64_t seed_override,
                 const std::string& out_dir_flag) {
  SyntheticTaskSpec spec;
  if (!task_path.empty()) {
    RunConfig carrier = load_run_config(task_path);
    spec = carrier.task;
  }
  if (seed_override >= 0) spec.seed = static_cast<std::uint64_t>(seed_override);
  const std::string out_dir = resolve_out(out_dir_flag);
  std::filesystem::create_directories(out_dir);
  SyntheticDataset data = generate_synthetic(spec);
  save_jsonl(std::filesystem::path(out_dir) / "train.jsonl", data.train);
  save_jsonl(std::filesystem::path(out_dir) / "val.jsonl", data.validation);
  GroupInventory inv = build_inventory(data.train, GroupScheme::kCode);
  std::cout << "wrote " << data.train.size() << " train / " << data.validation.size()
            << " val examples to " << out_dir << " (" << inv.size()
            << " code groups)" << std::endl;
  return kExitOk;
}

int cmd_recommend(int groups) {
  HyperparamRecommendation rec = recommend_hyperparams(groups);
  nlohmann::json j;
  j["groups"] = groups;
  if (rec.degenerate) {
    j["degenerate"] = true;
    j["notice"] = rec.note;
  } else {
    j["eta"] = {rec.eta.lo, rec.eta.hi};
    j["rho"] = {rec.rho.lo, rec.rho.hi};
    j["alpha"] = {rec.alpha.lo, rec.alpha.hi};
    j["eta_eff_target"] = rec.eta_eff_target;
    j["weight_decay"] = {rec.weight_decay.lo, rec.weight_decay.hi};
    j["activation_epoch"] = rec.activation_epoch;
  }
  std::cout << j.dump(2) << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STaR-DRO: stateful Tsallis-robust group reweighting harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "train one configuration and export its trace");
  std::string run_config;
  std::string run_method;
  std::int64_t run_seed = -1;
  std::string run_out;
  run->add_option("--config", run_config, "run config JSON")->required();
  run->add_option("--method", run_method, "override method: erm|dro|stardro");
  run->add_option("--seed", run_seed, "override seed");
  run->add_option("--out", run_out, "override output directory");

  auto* sw = app.add_subcommand("sweep", "run a list of configurations");
  std::string sweep_config;
  std::string sweep_out;
  bool sweep_regimes = false;
  int sweep_jobs = 1;
  sw->add_option("--config", sweep_config, "sweep config JSON ({\"runs\": [...]})")
      ->required();
  sw->add_flag("--regimes", sweep_regimes,
               "treat --config as one run config and sweep eta_eff x100 / div100");
  sw->add_option("--out", sweep_out, "override output directory");
  sw->add_option("--jobs", sweep_jobs, "concurrent runs");

  auto* proj = app.add_subcommand("project",
                                  "project a dual vector read from stdin; with "
                                  "--eta > 0 read q and ascent lines and take a "
                                  "mirror-ascent step");
  double proj_alpha = 0.0;
  double proj_eta = 0.0;
  double proj_tol = 1e-13;
  proj->add_option("--alpha", proj_alpha, "Tsallis order (> 1)")->required();
  proj->add_option("--eta", proj_eta, "mirror-ascent step size (0 = plain projection)");
  proj->add_option("--tol", proj_tol, "bisection tolerance");

  auto* ev = app.add_subcommand("evaluate", "three-level metrics report");
  std::string ev_pred;
  std::string ev_gold;
  bool ev_one_to_one = false;
  ev->add_option("--pred", ev_pred, "predictions JSONL")->required();
  ev->add_option("--gold", ev_gold, "gold JSONL")->required();
  ev->add_flag("--one-to-one", ev_one_to_one, "greedy one-to-one span matching");

  auto* gen = app.add_subcommand("generate", "write a synthetic grouped dataset");
  std::string gen_task;
  std::int64_t gen_seed = -1;
  std::string gen_out = "data";
  gen->add_option("--task", gen_task, "run config JSON carrying a task spec");
  gen->add_option("--seed", gen_seed, "override task seed");
  gen->add_option("--out", gen_out, "output directory");

  auto* rec = app.add_subcommand("recommend", "hyperparameter ranges for a group count");
  int rec_groups = 0;
  rec->add_option("--groups", rec_groups, "number of groups")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*run) return cmd_run(run_config, run_method, run_seed, run_out);
    if (*sw) return cmd_sweep(sweep_config, sweep_out, sweep_regimes, sweep_jobs);
    if (*proj) return cmd_project(proj_alpha, proj_eta, proj_tol);
    if (*ev) return cmd_evaluate(ev_pred, ev_gold, ev_one_to_one);
    if (*gen) return cmd_generate(gen_task, gen_seed, gen_out);
    if (*rec) return cmd_recommend(rec_groups);
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << std::endl;
    return kExitSchema;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << " (residual " << e.residual() << ")"
              << std::endl;
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << std::endl;
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitInput;
  }
  return kExitOk;
}
