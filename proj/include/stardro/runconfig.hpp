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

#include <filesystem>
#include <optional>
#include <string>

#include "stardro/grouping.hpp"
#include "stardro/reweighter.hpp"
#include "stardro/synthetic.hpp"

// Run configuration: method, controller and model settings, and the data
// source (synthetic task spec or dataset files). Serializes to JSON and
// round-trips losslessly; the run id is a stable hash of the configuration.

namespace stardro {

enum class TrainMethod { kErm, kStandardDro, kStarDro };

std::string to_string(TrainMethod method);
TrainMethod method_from_string(const std::string& name);

struct ModelConfig {
  double learning_rate = 0.2;
  double weight_decay = 0.1;
  int epochs = 8;
  int batch_size = 16;

  void validate() const;
};

struct DatasetPaths {
  std::filesystem::path train;
  std::filesystem::path validation;
};

struct RunConfig {
  TrainMethod method = TrainMethod::kStarDro;
  GroupScheme scheme = GroupScheme::kCode;
  LossMode mode = LossMode::kSample;
  ReweighterConfig reweighter;  // activation_step derived from activation_epoch
  // 1-based epoch at which robust reweighting activates; 0 disables it.
  int activation_epoch = 2;
  ModelConfig model;
  SyntheticTaskSpec task;                 // used when dataset is not set
  std::optional<DatasetPaths> dataset;    // overrides task when present
  std::uint64_t seed = 0;
  std::string out_dir = "runs";

  void validate() const;
};

std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Stable id derived from the config hash and seed, e.g. "run_1a2b3c4d5e6f7a8b".
std::string run_id(const RunConfig& config);

}  // namespace stardro
