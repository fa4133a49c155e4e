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

#include "stardro/grouping.hpp"

#include <algorithm>

namespace stardro {

ValidityMap ValidityMap::from_dataset(const std::vector<ExampleRecord>& dataset) {
  std::map<std::string, std::set<std::string>> mapping;
  for (const ExampleRecord& ex : dataset) {
    for (const AnnotationRecord& a : ex.annotations) {
      mapping[a.code].insert(a.subcode);
    }
  }
  return ValidityMap(std::move(mapping));
}

std::string to_string(GroupScheme scheme) {
  switch (scheme) {
    case GroupScheme::kCode: return "code";
    case GroupScheme::kSubcode: return "subcode";
    case GroupScheme::kCodeSubcode: return "code_subcode";
    case GroupScheme::kNumAnnotations: return "num_annotations";
    case GroupScheme::kCodeSubcodeNumAnnotations: return "code_subcode_na";
  }
  return "code";
}

GroupScheme scheme_from_string(const std::string& name) {
  if (name == "code") return GroupScheme::kCode;
  if (name == "subcode") return GroupScheme::kSubcode;
  if (name == "code_subcode") return GroupScheme::kCodeSubcode;
  if (name == "num_annotations") return GroupScheme::kNumAnnotations;
  if (name == "code_subcode_na") return GroupScheme::kCodeSubcodeNumAnnotations;
  throw std::invalid_argument("unknown grouping scheme: " + name);
}

GroupInventory::GroupInventory(GroupScheme scheme, std::vector<std::string> keys)
    : scheme_(scheme), keys_(std::move(keys)) {
  std::sort(keys_.begin(), keys_.end());
  keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
  if (keys_.empty()) throw std::invalid_argument("GroupInventory: no groups");
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    index_[keys_[i]] = static_cast<int>(i);
  }
}

int GroupInventory::id(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) throw SchemaError("unknown group key: " + key);
  return it->second;
}

std::optional<int> GroupInventory::find(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string group_key(GroupScheme scheme, const AnnotationRecord& annotation,
                      std::size_t num_annotations) {
  switch (scheme) {
    case GroupScheme::kCode:
      return annotation.code;
    case GroupScheme::kSubcode:
      return annotation.subcode;
    case GroupScheme::kCodeSubcode:
      return annotation.code + "/" + annotation.subcode;
    case GroupScheme::kNumAnnotations:
      return "NA_" + std::to_string(num_annotations);
    case GroupScheme::kCodeSubcodeNumAnnotations:
      return annotation.code + "/" + annotation.subcode + "/NA_" +
             std::to_string(num_annotations);
  }
  return annotation.code;
}

GroupInventory build_inventory(const std::vector<ExampleRecord>& dataset,
                               GroupScheme scheme, const ValidityMap* validity) {
  if (dataset.empty()) throw std::invalid_argument("build_inventory: empty dataset");
  std::vector<std::string> keys;
  for (const ExampleRecord& ex : dataset) {
    for (const AnnotationRecord& a : ex.annotations) {
      if (validity != nullptr && !validity->valid(a.code, a.subcode)) {
        throw SchemaError("record " + ex.id + ": Sub-code '" + a.subcode +
                          "' is not valid under Code '" + a.code + "'");
      }
      keys.push_back(group_key(scheme, a, ex.annotations.size()));
    }
  }
  return GroupInventory(scheme, std::move(keys));
}

Membership memberships(const ExampleRecord& example, const GroupInventory& inventory) {
  std::set<int> ids;
  for (const AnnotationRecord& a : example.annotations) {
    ids.insert(inventory.id(group_key(inventory.scheme(), a, example.annotations.size())));
  }
  Membership out;
  out.groups.assign(ids.begin(), ids.end());
  out.nu = static_cast<int>(out.groups.size());
  return out;
}

std::vector<double> annotation_signal(const ExampleRecord& example,
                                      const Vector& token_losses,
                                      const Vector& mask) {
  if (mask.size() != token_losses.size()) {
    throw std::invalid_argument("annotation_signal: mask length mismatch");
  }
  std::vector<double> out;
  out.reserve(example.annotations.size());
  for (const AnnotationRecord& a : example.annotations) {
    if (!a.token_range.has_value() || a.token_range->length() <= 0) {
      throw std::invalid_argument("annotation_signal: annotation without token range (record " +
                                  example.id + ")");
    }
    const TokenRange& r = *a.token_range;
    if (r.start < 0 || r.end > token_losses.size()) {
      throw std::invalid_argument("annotation_signal: token range out of bounds (record " +
                                  example.id + ")");
    }
    double acc = 0.0;
    int n = 0;
    for (int t = r.start; t < r.end; ++t) {
      acc += mask[t] * token_losses[t];
      n += 1;
    }
    out.push_back(acc / static_cast<double>(n));
  }
  return out;
}

Vector token_weights(const ExampleRecord& example, const Vector& per_group,
                     const GroupInventory& inventory, int completion_length) {
  Vector d = Vector::Ones(completion_length);
  std::vector<bool> covered(static_cast<std::size_t>(completion_length), false);
  for (const AnnotationRecord& a : example.annotations) {
    if (!a.token_range.has_value()) {
      throw std::invalid_argument("token_weights: annotation without token range (record " +
                                  example.id + ")");
    }
    const TokenRange& r = *a.token_range;
    if (r.start < 0 || r.end > completion_length || r.length() <= 0) {
      throw SchemaError("token_weights: token range out of bounds in record " + example.id);
    }
    const int g = inventory.id(group_key(inventory.scheme(), a, example.annotations.size()));
    for (int t = r.start; t < r.end; ++t) {
      if (covered[static_cast<std::size_t>(t)]) {
        throw SchemaError("token_weights: overlapping token ranges in record " + example.id);
      }
      covered[static_cast<std::size_t>(t)] = true;
      d[t] = per_group[g];
    }
  }
  return d;
}

double weighted_objective(const std::vector<double>& example_losses,
                          const std::vector<double>& multipliers) {
  if (example_losses.size() != multipliers.size()) {
    throw std::invalid_argument("weighted_objective: length mismatch");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < example_losses.size(); ++i) {
    num += multipliers[i] * example_losses[i];
    den += multipliers[i];
  }
  if (!(den > 0.0)) throw std::invalid_argument("weighted_objective: degenerate batch");
  return num / den;
}

double weighted_objective(const std::vector<Vector>& token_losses,
                          const std::vector<Vector>& token_weight_rows,
                          const std::vector<Vector>& masks) {
  if (token_losses.size() != token_weight_rows.size() ||
      token_losses.size() != masks.size()) {
    throw std::invalid_argument("weighted_objective: length mismatch");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < token_losses.size(); ++i) {
    const Vector& l = token_losses[i];
    const Vector& d = token_weight_rows[i];
    const Vector& r = masks[i];
    if (l.size() != d.size() || l.size() != r.size()) {
      throw std::invalid_argument("weighted_objective: token length mismatch");
    }
    for (Eigen::Index t = 0; t < l.size(); ++t) {
      num += d[t] * l[t];
      den += d[t] * r[t];
    }
  }
  if (!(den > 0.0)) throw std::invalid_argument("weighted_objective: degenerate batch");
  return num / den;
}

}  // namespace stardro
