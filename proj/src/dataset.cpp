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

#include "stardro/dataset.hpp"

#include <fstream>

#include "json.hpp"

namespace stardro {

namespace {

using nlohmann::json;

json annotation_to_json(const AnnotationRecord& a) {
  json j;
  j["Code"] = a.code;
  j["Sub-code"] = a.subcode;
  j["Span"] = a.span;
  if (a.token_range.has_value()) {
    j["token_range"] = {a.token_range->start, a.token_range->end};
  }
  if (a.unit_loss.has_value()) j["unit_loss"] = *a.unit_loss;
  if (a.label.has_value()) j["label"] = *a.label;
  if (a.features.size() > 0) {
    j["features"] = std::vector<double>(a.features.begin(), a.features.end());
  }
  return j;
}

AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord a;
  a.code = j.at("Code").get<std::string>();
  a.subcode = j.at("Sub-code").get<std::string>();
  a.span = j.at("Span").get<std::string>();
  if (j.contains("token_range")) {
    const auto& r = j.at("token_range");
    if (!r.is_array() || r.size() != 2) {
      throw SchemaError("annotation token_range must be [start, end)");
    }
    a.token_range = TokenRange{r[0].get<int>(), r[1].get<int>()};
  }
  if (j.contains("unit_loss")) a.unit_loss = j.at("unit_loss").get<double>();
  if (j.contains("label")) a.label = j.at("label").get<int>();
  if (j.contains("features")) {
    std::vector<double> f = j.at("features").get<std::vector<double>>();
    a.features = Eigen::Map<Vector>(f.data(), static_cast<Eigen::Index>(f.size()));
  }
  return a;
}

}  // namespace

std::string example_to_json_line(const ExampleRecord& record) {
  json j;
  j["id"] = record.id;
  j["sentence"] = record.sentence;
  j["context_prev"] = record.context_prev;
  j["context_next"] = record.context_next;
  j["direction"] = record.directed ? "Y" : "N";
  json anns = json::array();
  for (const AnnotationRecord& a : record.annotations) anns.push_back(annotation_to_json(a));
  j["annotations"] = std::move(anns);
  if (record.example_loss.has_value()) j["example_loss"] = *record.example_loss;
  return j.dump();
}

ExampleRecord example_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed JSONL line: ") + e.what());
  }
  try {
    ExampleRecord r;
    r.id = j.at("id").is_string() ? j.at("id").get<std::string>()
                                  : j.at("id").dump();
    r.sentence = j.value("sentence", std::string());
    r.context_prev = j.value("context_prev", std::string());
    r.context_next = j.value("context_next", std::string());
    const std::string dir = j.value("direction", std::string("N"));
    if (dir != "Y" && dir != "N") {
      throw SchemaError("record " + r.id + ": direction must be \"Y\" or \"N\"");
    }
    r.directed = dir == "Y";
    if (!j.contains("annotations") || !j.at("annotations").is_array()) {
      throw SchemaError("record " + r.id + ": missing annotations array");
    }
    for (const json& a : j.at("annotations")) {
      r.annotations.push_back(annotation_from_json(a));
    }
    if (j.contains("example_loss")) r.example_loss = j.at("example_loss").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bad record: ") + e.what());
  }
}

std::vector<ExampleRecord> load_jsonl(const std::filesystem::path& path,
                                      const ValidityMap* validity) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset file: " + path.string());
  std::vector<ExampleRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ExampleRecord r;
    try {
      r = example_from_json_line(line);
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": " +
                                  e.what());
    }
    if (validity != nullptr) {
      for (const AnnotationRecord& a : r.annotations) {
        if (!validity->valid(a.code, a.subcode)) {
          throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": record " +
                            r.id + ": Sub-code '" + a.subcode +
                            "' is not valid under Code '" + a.code + "'");
        }
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_jsonl(const std::filesystem::path& path,
                const std::vector<ExampleRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write dataset file: " + path.string());
  for (const ExampleRecord& r : records) out << example_to_json_line(r) << "\n";
  if (!out) throw std::runtime_error("I/O error while writing " + path.string());
}

}  // namespace stardro
