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

#include "stardro/diagnostics.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace stardro {

namespace {

using nlohmann::json;

// Shortest round-trippable decimal form.
std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json vector_map(const std::vector<std::string>& keys, const Vector& values) {
  json out = json::object();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double v = values.size() > static_cast<Eigen::Index>(i)
                         ? values[static_cast<Eigen::Index>(i)]
                         : std::numeric_limits<double>::quiet_NaN();
    if (std::isnan(v)) {
      out[keys[i]] = nullptr;
    } else {
      out[keys[i]] = v;
    }
  }
  return out;
}

}  // namespace

std::string summary_to_json(const RunRecord& record) {
  json j;
  j["run_id"] = run_id(record.config);
  j["method"] = to_string(record.config.method);
  j["seed"] = record.config.seed;
  j["regime"] = to_string(record.regime.label);
  j["regime_stats"] = {{"top2_mass", record.regime.top2_mass},
                       {"max_uniform_deviation", record.regime.max_uniform_deviation},
                       {"entropy", record.regime.entropy},
                       {"active_set", record.regime.active_set_size},
                       {"exact_zeros", record.regime.exact_zeros}};
  j["steps"] = record.steps.size();
  j["diverged"] = record.diverged;
  if (!record.error.empty()) j["error"] = record.error;

  json fin;
  fin["worst_group_val_loss"] = record.final_worst_val;
  fin["mean_val_loss"] = record.final_mean_val;
  fin["per_group_val_loss"] = vector_map(record.group_keys, record.final_per_group_val);
  fin["entropy"] = record.final_diagnostics.entropy;
  fin["active_set"] = record.final_diagnostics.active_set_size;
  fin["eta_eff"] = record.final_diagnostics.eta_eff;
  fin["q"] = vector_map(record.group_keys, record.final_q);
  j["final"] = std::move(fin);

  json hist = json::array();
  for (const EpochVal& ev : record.val_history) {
    hist.push_back({{"epoch", ev.epoch},
                    {"per_group", vector_map(record.group_keys, ev.per_group)},
                    {"worst", ev.worst},
                    {"mean", ev.mean}});
  }
  j["val_history"] = std::move(hist);
  j["config"] = json::parse(run_config_to_json(record.config));
  return j.dump(2);
}

std::filesystem::path export_trace(const RunRecord& record,
                                   const std::filesystem::path& run_dir) {
  if (record.steps.empty() && record.error.empty()) {
    throw std::invalid_argument("export_trace: empty record");
  }
  std::error_code ec;
  std::filesystem::create_directories(run_dir, ec);
  if (ec) {
    throw std::runtime_error("export_trace: cannot create " + run_dir.string() + ": " +
                             ec.message());
  }

  const std::filesystem::path trace_path = run_dir / "trace.csv";
  {
    std::ofstream out(trace_path);
    if (!out) throw std::runtime_error("export_trace: cannot write " + trace_path.string());
    out << "step,entropy,active_set,eta_eff";
    for (const std::string& k : record.group_keys) out << ",q_" << k;
    for (const std::string& k : record.group_keys) out << ",loss_" << k;
    for (const std::string& k : record.group_keys) out << ",ema_" << k;
    out << ",batch_loss,mult_mean,mult_max\n";
    for (const StepLog& s : record.steps) {
      out << s.step << ',' << fmt(s.entropy) << ',' << s.active_set << ','
          << fmt(s.eta_eff);
      for (Eigen::Index g = 0; g < s.q.size(); ++g) out << ',' << fmt(s.q[g]);
      for (Eigen::Index g = 0; g < s.raw_losses.size(); ++g) {
        out << ',' << fmt(s.raw_losses[g]);
      }
      for (Eigen::Index g = 0; g < s.ema_losses.size(); ++g) {
        out << ',' << fmt(s.ema_losses[g]);
      }
      out << ',' << fmt(s.batch_loss) << ',' << fmt(s.mult_mean) << ','
          << fmt(s.mult_max) << '\n';
    }
    if (!out) throw std::runtime_error("export_trace: I/O error on " + trace_path.string());
  }

  const std::filesystem::path summary_path = run_dir / "summary.json";
  {
    std::ofstream out(summary_path);
    if (!out) throw std::runtime_error("export_trace: cannot write " + summary_path.string());
    out << summary_to_json(record) << "\n";
    if (!out) throw std::runtime_error("export_trace: I/O error on " + summary_path.string());
  }
  return summary_path;
}

}  // namespace stardro
