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

#include <map>
#include <vector>

#include "stardro/grouping.hpp"

// Synthetic group-heterogeneous classification tasks. Groups draw their
// class prototypes from a shared inventory; designated hard groups use
// prototypes rotated into separate feature coordinates (so a linear model
// must allocate capacity to them), carry higher label noise, and tighter
// feature noise. Sizes follow a long-tail skew. Every example becomes an
// ExampleRecord whose annotations hold synthetic (Code, Sub-code, Span) keys,
// token ranges, features and labels.

namespace stardro {

struct HardGroupParams {
  double label_noise = 0.08;
  double feature_sigma = 0.6;
};

struct SyntheticTaskSpec {
  int num_groups = 9;
  std::vector<int> group_sizes = {300, 180, 108, 65, 39, 23, 14, 8, 5};
  std::map<int, HardGroupParams> hard_groups = {{2, {}}, {6, {}}};
  double easy_label_noise = 0.03;
  double feature_sigma = 1.2;
  int feature_dim = 120;
  int classes = 3;
  double prototype_scale = 5.0;
  double offset_amplitude = 1.0;
  double multi_annotation_fraction = 0.2;
  int val_per_group = 200;
  int completion_length = 24;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDataset {
  std::vector<ExampleRecord> train;
  std::vector<ExampleRecord> validation;
};

// Deterministic: the same spec (including seed) yields byte-identical
// datasets.
SyntheticDataset generate_synthetic(const SyntheticTaskSpec& spec);

// Group key used by the generator for group g ("G00", "G01", ...). The Code
// grouping scheme over generated data recovers the generator's groups.
std::string synthetic_group_code(int group);

}  // namespace stardro
