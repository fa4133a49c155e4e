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

#include <set>
#include <string>
#include <vector>

// Hierarchical evaluation: micro-averaged multi-label precision/recall/F1 at
// the Code and Sub-code levels, and relaxed span matching (containment in
// either direction, or token Jaccard >= 0.6). All functions are pure.

namespace stardro {

using LabelSet = std::set<std::string>;

// Per-instance predicted triples split by level.
struct PredictionSet {
  std::vector<LabelSet> codes;
  std::vector<LabelSet> subcodes;
  std::vector<LabelSet> spans;
};

struct LevelMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the corresponding denominator was empty and the metric was
  // reported as zero.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

struct SpanCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
};

struct MetricsReport {
  LevelMetrics code;
  LevelMetrics subcode;
  LevelMetrics span;
  SpanCounts span_counts;
};

// Tokenization used by the relaxed span matcher: lowercase, strip ASCII
// punctuation, split on whitespace. Both steps are switchable.
struct TokenizeOptions {
  bool lowercase = true;
  bool strip_punctuation = true;
};

std::set<std::string> tokenize(const std::string& text,
                               const TokenizeOptions& options = {});

// Micro-aggregated multi-label precision/recall/F1 over aligned instance
// lists: P = sum |pred ∩ gold| / sum |pred|, R likewise over gold.
LevelMetrics multilabel_f1(const std::vector<LabelSet>& pred,
                           const std::vector<LabelSet>& gold);

// Relaxed token-level span match: containment in either direction or Jaccard
// similarity >= threshold (inclusive). Empty token sets never match.
bool span_match(const std::string& pred_span, const std::string& gold_span,
                double jaccard_threshold = 0.6,
                const TokenizeOptions& options = {});

// One gold span may be matched by several predictions without being
// consumed (the literal counting rule); kOneToOne is the stricter greedy
// assignment where each gold matches at most one prediction.
enum class SpanMatchPolicy { kOneToMany, kOneToOne };

struct SpanLevelResult {
  LevelMetrics metrics;
  SpanCounts counts;
};

SpanLevelResult span_f1(const std::vector<LabelSet>& pred,
                        const std::vector<LabelSet>& gold,
                        SpanMatchPolicy policy = SpanMatchPolicy::kOneToMany,
                        double jaccard_threshold = 0.6,
                        const TokenizeOptions& options = {});

MetricsReport evaluate(const PredictionSet& pred, const PredictionSet& gold,
                       SpanMatchPolicy policy = SpanMatchPolicy::kOneToMany);

// Three-level report as JSON: keys "code", "subcode", "span", each holding
// precision/recall/f1 as percentages rounded to two decimals; the span entry
// also carries the tp/fp/fn counts.
std::string report_to_json(const MetricsReport& report);

}  // namespace stardro
