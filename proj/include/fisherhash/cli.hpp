/*
 * Copyright 2026 The FisherHash Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fisherhash/data_io.hpp"
#include "fisherhash/encoder.hpp"
#include "fisherhash/trainer.hpp"

namespace fisherhash::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kNumericalFailure = 4,
};

/// Merged JSON config plus where it came from.
struct RunConfig {
  nlohmann::json values;
  std::filesystem::path base_dir;  // relative dataset paths resolve here

  /// FNV-1a 64 of the canonical (sorted-key) dump, as 16 hex digits.
  std::string hash() const;
};

/// Reads `path` (may be empty for an all-defaults config) and applies
/// "key=value" overrides; dotted keys address nested objects and values are
/// parsed as JSON when possible, otherwise taken as strings.
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

HyperParams hyper_params_from(const nlohmann::json& cfg);
EncoderSpec encoder_spec_from(const nlohmann::json& cfg);
/// Either {"manifest": path} or {"synthetic": {...}} under "dataset".
Dataset dataset_from(const RunConfig& cfg);

std::string fnv1a_hex(const std::string& bytes);

/// Entry point shared by the fisherhash binary and the tests.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace fisherhash::cli
