// Copyright 2026 The semimark Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef SEMIMARK_CONFIG_HPP
#define SEMIMARK_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "semimark/benchmark.hpp"
#include "semimark/distortions.hpp"
#include "semimark/metrics.hpp"
#include "semimark/model.hpp"
#include "semimark/training.hpp"

namespace semimark {

// Layered configuration, lowest to highest precedence:
//   preset defaults < JSON config file < environment < --set flags.
// The preset itself is the "preset" key, looked up through the same layers.
// Environment: SEMIMARK_SET holds ';'-separated key=value assignments;
// SEMIMARK_<A>__<B>=v sets a.b (lower-cased). Values parse as JSON and fall
// back to plain strings. Keys outside "adapters" must already exist.
struct ConfigLayers {
  std::optional<std::filesystem::path> file;
  std::vector<std::string> env;    // assignments, e.g. from env_assignments()
  std::vector<std::string> flags;  // --set assignments
};

nlohmann::json default_config(const std::string& preset = "desk");
std::vector<std::string> env_assignments(char** envp);
// Applies "dotted.key=value"; throws ConfigError on unknown keys or a
// malformed assignment.
void apply_assignment(nlohmann::json& cfg, const std::string& assignment);
nlohmann::json resolve_config(const ConfigLayers& layers);

ModelConfig model_config_from(const nlohmann::json& cfg);
TrainConfig train_config_from(const nlohmann::json& cfg);
BenchOptions bench_options_from(const nlohmann::json& cfg);
CodecRegistry codecs_from(const nlohmann::json& cfg);
AdapterRegistry metric_adapters_from(const nlohmann::json& cfg);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace semimark

#endif  // SEMIMARK_CONFIG_HPP
