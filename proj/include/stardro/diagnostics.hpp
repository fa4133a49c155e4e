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

#include "stardro/trainer.hpp"

// Trajectory export: <run_dir>/trace.csv with one row per optimizer step and
// <run_dir>/summary.json with final metrics, regime and a config echo. Column
// order is deterministic and re-exporting identical records is byte-stable.

namespace stardro {

// Writes trace.csv and summary.json under `run_dir` (created if missing).
// Returns the summary path.
std::filesystem::path export_trace(const RunRecord& record,
                                   const std::filesystem::path& run_dir);

std::string summary_to_json(const RunRecord& record);

}  // namespace stardro
