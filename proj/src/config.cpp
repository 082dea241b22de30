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


#include "semimark/config.hpp"

#include <cstring>
#include <fstream>

#include <openssl/evp.h>

#include "semimark/errors.hpp"

namespace semimark {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Subtrees whose keys are user-defined.
bool free_form(const std::string& top) { return top == "codecs" || top == "metrics" || top == "paths"; }

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

void merge(json& dst, const json& src, const std::string& where, bool open) {
  if (!src.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : src.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    const bool child_open = open || (where.empty() && free_form(key));
    if (!dst.contains(key)) {
      if (!open) throw ConfigError("unknown config key \"" + path + "\"");
      dst[key] = value;
    } else if (dst[key].is_object() && value.is_object()) {
      merge(dst[key], value, path, child_open);
    } else {
      dst[key] = value;
    }
  }
}

std::string find_preset(const ConfigLayers& layers, const json& file_cfg) {
  std::string preset = "desk";
  if (file_cfg.contains("preset")) preset = file_cfg.at("preset").get<std::string>();
  auto scan = [&](const std::vector<std::string>& list) {
    for (const auto& a : list) {
      const auto eq = a.find('=');
      if (eq != std::string::npos && a.substr(0, eq) == "preset") preset = parse_value(a.substr(eq + 1)).get<std::string>();
    }
  };
  scan(layers.env);
  scan(layers.flags);
  return preset;
}

}  // namespace

json default_config(const std::string& preset_name) {
  const auto preset = preset_by_name(preset_name);
  const BenchOptions bench;
  return json{{"preset", preset_name},
              {"model", preset.model},
              {"train", preset.train},
              {"paths", {{"corpus", ""}, {"index", ""}, {"out_dir", "runs/" + preset_name}, {"checkpoint", ""}}},
              {"bench",
               {{"seed", bench.seed},
                {"fragile_threshold", bench.thresholds.fragile},
                {"robust_threshold", bench.thresholds.robust},
                {"max_clips", bench.max_clips},
                {"workers", bench.workers}}},
              {"codecs", {{"max_processes", 2}, {"codecs", json::object()}}},
              {"metrics", json::object()}};
}

std::vector<std::string> env_assignments(char** envp) {
  std::vector<std::string> out;
  std::vector<std::string> set_lists;
  for (char** e = envp; e && *e; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const auto name = entry.substr(0, eq);
    const auto value = entry.substr(eq + 1);
    if (name == "SEMIMARK_SET") {
      set_lists.push_back(value);
      continue;
    }
    if (name.rfind("SEMIMARK_", 0) != 0) continue;
    std::string key;
    const auto rest = name.substr(std::strlen("SEMIMARK_"));
    for (size_t i = 0; i < rest.size(); ++i) {
      if (rest.compare(i, 2, "__") == 0) {
        key += '.';
        ++i;
      } else {
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(rest[i])));
      }
    }
    out.push_back(key + "=" + value);
  }
  std::sort(out.begin(), out.end());
  for (const auto& list : set_lists) {
    size_t start = 0;
    while (start <= list.size()) {
      const auto end = list.find(';', start);
      const auto item = list.substr(start, end == std::string::npos ? std::string::npos : end - start);
      if (!item.empty()) out.push_back(item);
      if (end == std::string::npos) break;
      start = end + 1;
    }
  }
  return out;
}

void apply_assignment(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got \"" + assignment + "\"");
  const auto key = assignment.substr(0, eq);
  json* node = &cfg;
  size_t start = 0;
  bool open = false;
  for (;;) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("malformed config key \"" + key + "\"");
    if (start == 0 && free_form(part)) open = true;
    if (open && node->is_null()) *node = json::object();
    if (!node->is_object()) throw ConfigError("config key \"" + key + "\" descends into a non-object");
    if (!node->contains(part) && !open) throw ConfigError("unknown config key \"" + key + "\"");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = parse_value(assignment.substr(eq + 1));
}

json resolve_config(const ConfigLayers& layers) {
  json file_cfg = json::object();
  if (layers.file) {
    std::ifstream in(*layers.file);
    if (!in) throw ConfigError("cannot read config file " + layers.file->string());
    try {
      file_cfg = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(layers.file->string() + ": " + e.what());
    }
  }
  auto cfg = default_config(find_preset(layers, file_cfg));
  merge(cfg, file_cfg, "", false);
  for (const auto& a : layers.env) apply_assignment(cfg, a);
  for (const auto& a : layers.flags) apply_assignment(cfg, a);
  // Round-trip through the typed structs so type errors surface here.
  model_config_from(cfg);
  train_config_from(cfg);
  bench_options_from(cfg);
  return cfg;
}

ModelConfig model_config_from(const json& cfg) {
  try {
    auto m = cfg.at("model").get<ModelConfig>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

TrainConfig train_config_from(const json& cfg) {
  try {
    auto t = cfg.at("train").get<TrainConfig>();
    t.validate();
    return t;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
}

BenchOptions bench_options_from(const json& cfg) {
  try {
    const auto& b = cfg.at("bench");
    BenchOptions o;
    o.seed = b.at("seed").get<uint64_t>();
    o.thresholds.fragile = b.at("fragile_threshold").get<double>();
    o.thresholds.robust = b.at("robust_threshold").get<double>();
    o.max_clips = b.at("max_clips").get<int>();
    o.workers = b.at("workers").get<int>();
    if (o.max_clips < 0 || o.workers < 1) throw ConfigError("bench: max_clips >= 0 and workers >= 1 required");
    return o;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bench config: ") + e.what());
  }
}

CodecRegistry codecs_from(const json& cfg) {
  try {
    return CodecRegistry::from_json(cfg.value("codecs", json()));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("codecs config: ") + e.what());
  }
}

AdapterRegistry metric_adapters_from(const json& cfg) {
  try {
    return AdapterRegistry::from_json(cfg.value("metrics", json()));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("metrics config: ") + e.what());
  }
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw EnvironmentError("OpenSSL SHA-256 unavailable");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

}  // namespace semimark
