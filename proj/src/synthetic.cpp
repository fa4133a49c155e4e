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

#include "stardro/synthetic.hpp"

#include <cstdio>

namespace stardro {

void SyntheticTaskSpec::validate() const {
  if (num_groups < 1) throw std::invalid_argument("task spec: num_groups must be >= 1");
  if (static_cast<int>(group_sizes.size()) != num_groups) {
    throw std::invalid_argument("task spec: group_sizes length must equal num_groups");
  }
  long long total = 0;
  for (int n : group_sizes) {
    if (n < 0) throw std::invalid_argument("task spec: negative group size");
    total += n;
  }
  if (total == 0) throw std::invalid_argument("task spec: group sizes sum to zero");
  for (const auto& [g, params] : hard_groups) {
    if (g < 0 || g >= num_groups) {
      throw std::invalid_argument("task spec: hard group id out of range");
    }
    (void)params;
  }
  if (classes < 2) throw std::invalid_argument("task spec: need at least 2 classes");
  if (feature_dim < 2 * classes) {
    throw std::invalid_argument("task spec: feature_dim must be >= 2 * classes");
  }
  if (!(multi_annotation_fraction >= 0.0 && multi_annotation_fraction <= 1.0)) {
    throw std::invalid_argument("task spec: multi_annotation_fraction must be in [0,1]");
  }
  if (completion_length < 20) {
    throw std::invalid_argument("task spec: completion_length must be >= 20");
  }
}

std::string synthetic_group_code(int group) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "G%02d", group);
  return buf;
}

namespace {

struct Prototypes {
  // easy prototypes occupy coords [0, C); hard ones [C, 2C); per-group
  // offsets live in [2C, d).
  std::vector<Vector> easy;
  std::vector<Vector> hard;
  std::vector<Vector> offsets;
};

Prototypes make_prototypes(const SyntheticTaskSpec& spec) {
  Prototypes p;
  const int C = spec.classes;
  const int d = spec.feature_dim;
  for (int y = 0; y < C; ++y) {
    Vector e = Vector::Zero(d);
    e[y] = spec.prototype_scale;
    p.easy.push_back(e);
    Vector h = Vector::Zero(d);
    h[C + y] = spec.prototype_scale;
    p.hard.push_back(h);
  }
  Rng rng(fnv1a64("offsets:" + std::to_string(spec.seed)));
  for (int g = 0; g < spec.num_groups; ++g) {
    Vector o = Vector::Zero(d);
    double norm2 = 0.0;
    for (int k = 2 * C; k < d; ++k) {
      o[k] = rng.normal();
      norm2 += o[k] * o[k];
    }
    if (norm2 > 0.0) o *= spec.offset_amplitude / std::sqrt(norm2);
    p.offsets.push_back(o);
  }
  return p;
}

struct Unit {
  Vector features;
  int label;
};

Unit sample_unit(const SyntheticTaskSpec& spec, const Prototypes& protos, int g,
                 Rng& rng) {
  const int C = spec.classes;
  int y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(C)));
  const auto hard_it = spec.hard_groups.find(g);
  const bool hard = hard_it != spec.hard_groups.end();
  const double sigma = hard ? hard_it->second.feature_sigma : spec.feature_sigma;
  const double noise = hard ? hard_it->second.label_noise : spec.easy_label_noise;
  Vector x = (hard ? protos.hard[static_cast<std::size_t>(y)]
                   : protos.easy[static_cast<std::size_t>(y)]) +
             protos.offsets[static_cast<std::size_t>(g)];
  for (Eigen::Index k = 0; k < x.size(); ++k) x[k] += sigma * rng.normal();
  if (rng.uniform() < noise) {
    y = (y + 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(C - 1)))) % C;
  }
  return Unit{std::move(x), y};
}

AnnotationRecord make_annotation(int g, Unit unit,
                                 long long serial, TokenRange range) {
  AnnotationRecord a;
  a.code = synthetic_group_code(g);
  a.subcode = "S" + std::to_string(g) + (unit.label % 2 == 0 ? "a" : "b");
  a.span = "grp" + std::to_string(g) + " cls" + std::to_string(unit.label) +
           " item" + std::to_string(serial);
  a.token_range = range;
  a.features = std::move(unit.features);
  a.label = unit.label;
  return a;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticTaskSpec& spec) {
  spec.validate();
  const Prototypes protos = make_prototypes(spec);
  SyntheticDataset out;

  // Annotations tile the whole completion: a lone annotation covers [0, T),
  // a pair splits it in half. Constant completion length with full coverage
  // keeps sample- and annotation-level objectives exactly comparable.
  const int T = spec.completion_length;
  const TokenRange full{0, T};
  const TokenRange first_half{0, T / 2};
  const TokenRange second_half{T / 2, T};

  Rng train_rng(fnv1a64("train:" + std::to_string(spec.seed)));
  long long serial = 0;
  for (int g = 0; g < spec.num_groups; ++g) {
    for (int i = 0; i < spec.group_sizes[static_cast<std::size_t>(g)]; ++i) {
      ExampleRecord ex;
      ex.id = "tr_" + std::to_string(serial);
      ex.sentence = "synthetic sample " + std::to_string(serial);
      ex.directed = g % 2 == 0;
      const bool multi = spec.num_groups > 1 &&
                         train_rng.uniform() < spec.multi_annotation_fraction;
      ex.annotations.push_back(make_annotation(
          g, sample_unit(spec, protos, g, train_rng), serial, multi ? first_half : full));
      if (multi) {
        int g2 = static_cast<int>(
            train_rng.uniform_int(static_cast<std::uint64_t>(spec.num_groups - 1)));
        if (g2 >= g) ++g2;
        ex.annotations.push_back(make_annotation(
            g2, sample_unit(spec, protos, g2, train_rng), serial, second_half));
      }
      out.train.push_back(std::move(ex));
      ++serial;
    }
  }

  Rng val_rng(fnv1a64("val:" + std::to_string(spec.seed)));
  long long vserial = 0;
  for (int g = 0; g < spec.num_groups; ++g) {
    for (int i = 0; i < spec.val_per_group; ++i) {
      ExampleRecord ex;
      ex.id = "va_" + std::to_string(vserial);
      ex.sentence = "synthetic holdout " + std::to_string(vserial);
      ex.directed = g % 2 == 0;
      ex.annotations.push_back(
          make_annotation(g, sample_unit(spec, protos, g, val_rng), vserial, full));
      out.validation.push_back(std::move(ex));
      ++vserial;
    }
  }
  return out;
}

}  // namespace stardro
