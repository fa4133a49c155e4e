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
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stardro/reweighter.hpp"
#include "stardro/simplex.hpp"

// Group inventories over structured (Code, Sub-code, Span) annotations, the
// five grouping strategies, and the attribution of per-group multipliers back
// to examples and tokens. Inventories are immutable after construction and
// the attribution operations are pure.

namespace stardro {

// Half-open token index range [start, end) within the completion.
struct TokenRange {
  int start = 0;
  int end = 0;
  int length() const { return end - start; }
};

struct AnnotationRecord {
  std::string code;      // kappa
  std::string subcode;   // varsigma
  std::string span;      // pi, evidence text
  std::optional<double> unit_loss;       // u_{i,a}
  std::optional<TokenRange> token_range; // T_{i,a}
  // Desk-scale stand-ins for tokenized content: a feature vector and class
  // label for the toy classifier. Absent (empty / nullopt) in pure
  // evaluation data.
  Vector features;
  std::optional<int> label;
};

struct ExampleRecord {
  std::string id;
  std::string sentence;
  std::string context_prev;
  std::string context_next;
  bool directed = false;  // direction flag, "Y" or "N" on the wire
  std::vector<AnnotationRecord> annotations;
  std::optional<double> example_loss;  // sample-level unit loss
};

// Hierarchical Code -> valid Sub-codes mapping.
class ValidityMap {
 public:
  ValidityMap() = default;
  explicit ValidityMap(std::map<std::string, std::set<std::string>> mapping)
      : mapping_(std::move(mapping)) {}

  static ValidityMap from_dataset(const std::vector<ExampleRecord>& dataset);

  bool valid(const std::string& code, const std::string& subcode) const {
    auto it = mapping_.find(code);
    return it != mapping_.end() && it->second.count(subcode) > 0;
  }
  const std::map<std::string, std::set<std::string>>& mapping() const {
    return mapping_;
  }

 private:
  std::map<std::string, std::set<std::string>> mapping_;
};

enum class GroupScheme {
  kCode,
  kSubcode,
  kCodeSubcode,
  kNumAnnotations,
  kCodeSubcodeNumAnnotations,
};

std::string to_string(GroupScheme scheme);
GroupScheme scheme_from_string(const std::string& name);

// Dense 0..G-1 group ids over the keys realized in a dataset, ordered
// lexicographically so id assignment is stable across runs.
class GroupInventory {
 public:
  GroupInventory(GroupScheme scheme, std::vector<std::string> keys);

  GroupScheme scheme() const { return scheme_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(keys_.size()); }
  const std::vector<std::string>& keys() const { return keys_; }
  const std::string& key(int id) const { return keys_.at(static_cast<std::size_t>(id)); }
  // Id for a key; throws SchemaError when unknown.
  int id(const std::string& key) const;
  std::optional<int> find(const std::string& key) const;

 private:
  GroupScheme scheme_;
  std::vector<std::string> keys_;
  std::map<std::string, int> index_;
};

// Group key of one annotation under a scheme; num_annotations is the owning
// example's annotation count (used by the NA-based schemes).
std::string group_key(GroupScheme scheme, const AnnotationRecord& annotation,
                      std::size_t num_annotations);

// Inventory over the group keys realized in `dataset`. When `validity` is
// given every annotation is checked against it first; a violation raises
// SchemaError naming the offending record.
GroupInventory build_inventory(const std::vector<ExampleRecord>& dataset,
                               GroupScheme scheme,
                               const ValidityMap* validity = nullptr);

struct Membership {
  std::vector<int> groups;  // distinct ids, sorted
  int nu = 0;               // |S_i|
};

// Distinct group-set of one example under the inventory's scheme.
Membership memberships(const ExampleRecord& example, const GroupInventory& inventory);

// Length-normalized per-annotation update signals: the mean of masked token
// losses over each annotation's token range. `mask` marks completion tokens.
std::vector<double> annotation_signal(const ExampleRecord& example,
                                      const Vector& token_losses,
                                      const Vector& mask);

// Token-level robust weights: a completion token inside annotation a carries
// the multiplier of a's group, tokens outside any annotation carry one.
// Requires every annotation to have a token range; overlapping ranges raise
// SchemaError.
Vector token_weights(const ExampleRecord& example, const Vector& per_group,
                     const GroupInventory& inventory, int completion_length);

enum class LossMode { kSample, kAnnotation };

// Sample-mode robust objective: sum m_i * loss_i / sum m_i.
double weighted_objective(const std::vector<double>& example_losses,
                          const std::vector<double>& multipliers);

// Annotation-mode robust objective over per-example token losses, token
// weights and completion masks: sum d * loss / sum d * mask.
double weighted_objective(const std::vector<Vector>& token_losses,
                          const std::vector<Vector>& token_weight_rows,
                          const std::vector<Vector>& masks);

}  // namespace stardro
