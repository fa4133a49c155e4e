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

#include "stardro/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace stardro {

namespace {

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

double round2(double percent) { return std::round(percent * 100.0) / 100.0; }

std::size_t intersection_size(const std::set<std::string>& a,
                              const std::set<std::string>& b) {
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  std::size_t n = 0;
  for (const std::string& x : small) n += large.count(x);
  return n;
}

}  // namespace

std::set<std::string> tokenize(const std::string& text, const TokenizeOptions& options) {
  std::set<std::string> tokens;
  std::string current;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) tokens.insert(current);
      current.clear();
      continue;
    }
    if (options.strip_punctuation && std::ispunct(c)) continue;
    current.push_back(options.lowercase ? static_cast<char>(std::tolower(c)) : ch);
  }
  if (!current.empty()) tokens.insert(current);
  return tokens;
}

LevelMetrics multilabel_f1(const std::vector<LabelSet>& pred,
                           const std::vector<LabelSet>& gold) {
  if (pred.size() != gold.size()) {
    throw std::invalid_argument("multilabel_f1: instance count mismatch");
  }
  long long inter = 0;
  long long pred_total = 0;
  long long gold_total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += static_cast<long long>(intersection_size(pred[i], gold[i]));
    pred_total += static_cast<long long>(pred[i].size());
    gold_total += static_cast<long long>(gold[i].size());
  }
  LevelMetrics m;
  m.precision_undefined = pred_total == 0;
  m.recall_undefined = gold_total == 0;
  m.precision = pred_total > 0 ? static_cast<double>(inter) / static_cast<double>(pred_total) : 0.0;
  m.recall = gold_total > 0 ? static_cast<double>(inter) / static_cast<double>(gold_total) : 0.0;
  m.f1 = f1_of(m.precision, m.recall);
  return m;
}

bool span_match(const std::string& pred_span, const std::string& gold_span,
                double jaccard_threshold, const TokenizeOptions& options) {
  const std::set<std::string> p = tokenize(pred_span, options);
  const std::set<std::string> g = tokenize(gold_span, options);
  if (p.empty() || g.empty()) return false;
  const std::size_t inter = intersection_size(p, g);
  if (inter == g.size() || inter == p.size()) return true;  // containment
  const std::size_t uni = p.size() + g.size() - inter;
  return static_cast<double>(inter) >=
         jaccard_threshold * static_cast<double>(uni);
}

SpanLevelResult span_f1(const std::vector<LabelSet>& pred,
                        const std::vector<LabelSet>& gold,
                        SpanMatchPolicy policy, double jaccard_threshold,
                        const TokenizeOptions& options) {
  if (pred.size() != gold.size()) {
    throw std::invalid_argument("span_f1: instance count mismatch");
  }
  SpanCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::vector<std::string> golds(gold[i].begin(), gold[i].end());
    std::vector<bool> gold_matched(golds.size(), false);
    std::vector<bool> gold_consumed(golds.size(), false);
    for (const std::string& p : pred[i]) {
      bool matched = false;
      for (std::size_t k = 0; k < golds.size(); ++k) {
        if (policy == SpanMatchPolicy::kOneToOne && gold_consumed[k]) continue;
        if (span_match(p, golds[k], jaccard_threshold, options)) {
          matched = true;
          gold_matched[k] = true;
          if (policy == SpanMatchPolicy::kOneToOne) {
            gold_consumed[k] = true;
            break;
          }
        }
      }
      if (matched) {
        c.tp += 1;
      } else {
        c.fp += 1;
      }
    }
    for (std::size_t k = 0; k < golds.size(); ++k) {
      if (!gold_matched[k]) c.fn += 1;
    }
  }
  SpanLevelResult out;
  out.counts = c;
  out.metrics.precision_undefined = c.tp + c.fp == 0;
  out.metrics.recall_undefined = c.tp + c.fn == 0;
  out.metrics.precision =
      c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  out.metrics.recall =
      c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  out.metrics.f1 = f1_of(out.metrics.precision, out.metrics.recall);
  return out;
}

MetricsReport evaluate(const PredictionSet& pred, const PredictionSet& gold,
                       SpanMatchPolicy policy) {
  MetricsReport report;
  report.code = multilabel_f1(pred.codes, gold.codes);
  report.subcode = multilabel_f1(pred.subcodes, gold.subcodes);
  SpanLevelResult spans = span_f1(pred.spans, gold.spans, policy);
  report.span = spans.metrics;
  report.span_counts = spans.counts;
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  const auto level = [](const LevelMetrics& m) {
    nlohmann::json out;
    out["precision"] = round2(100.0 * m.precision);
    out["recall"] = round2(100.0 * m.recall);
    out["f1"] = round2(100.0 * m.f1);
    return out;
  };
  j["code"] = level(report.code);
  j["subcode"] = level(report.subcode);
  j["span"] = level(report.span);
  j["span"]["tp"] = report.span_counts.tp;
  j["span"]["fp"] = report.span_counts.fp;
  j["span"]["fn"] = report.span_counts.fn;
  return j.dump(2);
}

}  // namespace stardro
