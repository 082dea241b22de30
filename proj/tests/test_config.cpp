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


#include <fstream>

#include "doctest_torch.hpp"
#include "semimark/config.hpp"
#include "semimark/errors.hpp"
#include "support.hpp"

using namespace semimark;
using nlohmann::json;

TEST_SUITE("config") {

TEST_CASE("layers override in order: preset, file, env, flags") {
  testing::Scratch dir("config");
  std::ofstream(dir / "c.json") << R"({"train":{"lr":0.001,"batch_size":4},"bench":{"seed":9}})";
  ConfigLayers layers;
  CHECK(resolve_config(layers) == default_config("desk"));

  layers.file = dir / "c.json";
  auto cfg = resolve_config(layers);
  CHECK(cfg["train"]["lr"] == 0.001);
  CHECK(cfg["train"]["batch_size"] == 4);
  CHECK(cfg["model"] == default_config("desk")["model"]);

  layers.env = {"train.batch_size=6", "bench.seed=10"};
  cfg = resolve_config(layers);
  CHECK(cfg["train"]["batch_size"] == 6);
  CHECK(cfg["bench"]["seed"] == 10);
  CHECK(cfg["train"]["lr"] == 0.001);

  layers.flags = {"bench.seed=11"};
  cfg = resolve_config(layers);
  CHECK(cfg["bench"]["seed"] == 11);
  CHECK(cfg["train"]["batch_size"] == 6);
  CHECK(bench_options_from(cfg).seed == 11);
  CHECK(train_config_from(cfg).batch_size == 6);
  CHECK(train_config_from(cfg).adam.lr == 0.001);

  layers.flags = {"preset=default"};
  cfg = resolve_config(layers);
  CHECK(model_config_from(cfg) == default_preset().model);
  CHECK(cfg["train"]["batch_size"] == 6);
}

TEST_CASE("unknown keys and bad values are config errors") {
  json cfg = default_config();
  CHECK_THROWS_AS(apply_assignment(cfg, "train.learning_rate=1"), ConfigError);
  CHECK_THROWS_AS(apply_assignment(cfg, "nokey"), ConfigError);
  CHECK_THROWS_AS(apply_assignment(cfg, "train..lr=1"), ConfigError);
  CHECK_THROWS_AS(apply_assignment(cfg, "train.lr.x=1"), ConfigError);
  CHECK_NOTHROW(apply_assignment(cfg, "paths.extra=/tmp/x"));
  CHECK(cfg["paths"]["extra"] == "/tmp/x");
  CHECK_NOTHROW(apply_assignment(cfg, "metrics.pesq.command=[\"pesq\",\"{ref}\",\"{test}\"]"));
  CHECK(metric_adapters_from(cfg).has("pesq"));

  testing::Scratch dir("badcfg");
  std::ofstream(dir / "bad.json") << R"({"model":{"widht":3}})";
  ConfigLayers layers;
  layers.file = dir / "bad.json";
  CHECK_THROWS_AS(resolve_config(layers), ConfigError);
  std::ofstream(dir / "broken.json") << "{";
  layers.file = dir / "broken.json";
  CHECK_THROWS_AS(resolve_config(layers), ConfigError);
  layers.file = dir / "absent.json";
  CHECK_THROWS_AS(resolve_config(layers), ConfigError);
  layers.file.reset();
  layers.flags = {"train.batch_size=0"};
  CHECK_THROWS_AS(resolve_config(layers), ConfigError);
  layers.flags = {"bench.workers=0"};
  CHECK_THROWS_AS(resolve_config(layers), ConfigError);
  layers.flags = {"preset=giant"};
  CHECK_THROWS_AS(resolve_config(layers), ConfigError);
}

TEST_CASE("environment variables become assignments") {
  std::string a = "SEMIMARK_TRAIN__BATCH_SIZE=3";
  std::string b = "SEMIMARK_SET=bench.seed=4;train.lr=0.01";
  std::string c = "HOME=/root";
  std::string d = "SEMIMARK_BENCH__WORKERS=2";
  char* envp[] = {a.data(), b.data(), c.data(), d.data(), nullptr};
  const auto assignments = env_assignments(envp);
  CHECK(assignments == std::vector<std::string>{"bench.workers=2", "train.batch_size=3", "bench.seed=4", "train.lr=0.01"});
  ConfigLayers layers;
  layers.env = assignments;
  const auto cfg = resolve_config(layers);
  CHECK(cfg["train"]["batch_size"] == 3);
  CHECK(cfg["bench"]["workers"] == 2);
  CHECK(cfg["train"]["lr"] == 0.01);
  CHECK(env_assignments(nullptr).empty());
}

TEST_CASE("values parse as json with a string fallback") {
  json cfg = default_config();
  apply_assignment(cfg, "paths.corpus=data/speech");
  CHECK(cfg["paths"]["corpus"] == "data/speech");
  apply_assignment(cfg, "model.widths=[8,8,8,8,8]");
  CHECK(model_config_from(cfg).widths == std::vector<int>{8, 8, 8, 8, 8});
  apply_assignment(cfg, "codecs.codecs.mp3.steps=[[\"lame\",\"{in}\",\"{out}\"]]");
  CHECK(codecs_from(cfg).codecs.count("mp3") == 1);
}

TEST_CASE("sha256 of files") {
  testing::Scratch dir("sha");
  std::ofstream(dir / "abc", std::ios::binary) << "abc";
  CHECK(sha256_file(dir / "abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::ofstream(dir / "empty", std::ios::binary).flush();
  CHECK(sha256_file(dir / "empty") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK_THROWS_AS(sha256_file(dir / "missing"), InvalidInput);
}

}  // TEST_SUITE
