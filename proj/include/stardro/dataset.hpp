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
#include <string>
#include <vector>

#include "stardro/grouping.hpp"

// Grouped JSONL dataset files: one JSON object per line with fields
// "id", "sentence", "context_prev", "context_next", "direction" ("Y"|"N"),
// "annotations" [{"Code", "Sub-code", "Span", ...}]. Annotations may carry
// the optional training extras "token_range" ([start, end)), "label" and
// "features"; examples may carry "example_loss".

namespace stardro {

std::vector<ExampleRecord> load_jsonl(const std::filesystem::path& path,
                                      const ValidityMap* validity = nullptr);
void save_jsonl(const std::filesystem::path& path,
                const std::vector<ExampleRecord>& records);

// Single-record conversions, exposed for tests and tools.
std::string example_to_json_line(const ExampleRecord& record);
ExampleRecord example_from_json_line(const std::string& line);

}  // namespace stardro
