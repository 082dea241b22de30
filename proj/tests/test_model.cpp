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


#include "doctest_torch.hpp"
#include "fixtures.hpp"
#include "semimark/errors.hpp"
#include "semimark/model.hpp"
#include "support.hpp"

using namespace semimark;

namespace {

double max_abs_diff(const torch::Tensor& a, const torch::Tensor& b) { return (a - b).abs().max().item<double>(); }

void set_gain(ModelBundle& m, double g) {
  torch::NoGradGuard guard;
  m.watermarker()->gain.fill_(g);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("default embedding side is about 0.9M parameters") {
  ModelBundle m(ModelConfig{});
  const auto n = m.embedding_parameter_count();
  CHECK(n >= 0.72e6);
  CHECK(n <= 1.08e6);
}

TEST_CASE("shapes and ranges") {
  ModelBundle m(testing::tiny_config(), 1);
  const auto x = torch::randn({3, 400}) * 0.1;
  const auto msg = random_messages(3, 4, 2);
  torch::NoGradGuard guard;
  const auto y = m.embed(x, msg);
  CHECK(y.sizes() == x.sizes());
  const auto p = m.extract(y);
  CHECK(p.sizes() == torch::IntArrayRef({3, 4}));
  CHECK(p.min().item<double>() > 0.0);
  CHECK(p.max().item<double>() < 1.0);
  const auto d = m.discriminate(y);
  CHECK(d.sizes() == torch::IntArrayRef({3}));
  CHECK(m.extract(y, {400, 300, 100}).sizes() == torch::IntArrayRef({3, 4}));
}

TEST_CASE("zero gain embeds nothing") {
  ModelBundle m(testing::tiny_config(), 2);
  m.to(torch::kFloat64);
  set_gain(m, 0.0);
  const auto x = torch::randn({2, 500}, torch::kFloat64) * 0.3;
  torch::NoGradGuard guard;
  CHECK(max_abs_diff(m.embed(x, random_messages(2, 4, 1).to(torch::kFloat64)), x) < 1e-6);
}

TEST_CASE("perturbation is linear in the gain") {
  ModelBundle m(testing::tiny_config(), 3);
  m.to(torch::kFloat64);
  const auto x = torch::randn({2, 500}, torch::kFloat64) * 0.3;
  const auto msg = random_messages(2, 4, 1).to(torch::kFloat64);
  torch::NoGradGuard guard;
  set_gain(m, 0.05);
  const auto d1 = m.embed(x, msg) - x;
  set_gain(m, 0.1);
  const auto d2 = m.embed(x, msg) - x;
  CHECK(max_abs_diff(d2, 2.0 * d1) < 1e-10);
  CHECK(d1.abs().max().item<double>() > 0.0);
}

TEST_CASE("gain is projected into range") {
  auto cfg = testing::tiny_config();
  ModelBundle m(cfg, 4);
  set_gain(m, 5.0);
  m.project_constraints();
  CHECK(m.watermarker()->gain.item<double>() == doctest::Approx(cfg.gain_max));
  set_gain(m, -1.0);
  m.project_constraints();
  CHECK(m.watermarker()->gain.item<double>() == 0.0);
}

TEST_CASE("band limit leaves the upper band untouched at the input") {
  auto cfg = testing::tiny_config();
  cfg.band_limit_hz = 4000.0;
  CHECK(cfg.embed_bins() == 17);
  ModelBundle m(cfg, 5);
  m.to(torch::kFloat64);
  const auto x = torch::randn({1, 800}, torch::kFloat64) * 0.2;
  torch::NoGradGuard guard;
  const auto d = m.embed(x, random_messages(1, 4, 0).to(torch::kFloat64)) - x;
  const auto s = dsp::stft(d, cfg.frame);
  const auto power = s.real.pow(2) + s.imag.pow(2);
  const double low = power.narrow(1, 0, 17).sum().item<double>();
  const double high = power.narrow(1, 17, power.size(1) - 17).sum().item<double>();
  CHECK(high < 0.05 * low);
}

TEST_CASE("same seed, same weights") {
  ModelBundle a(testing::tiny_config(), 9), b(testing::tiny_config(), 9), c(testing::tiny_config(), 10);
  const auto pa = a.named_parameters(), pb = b.named_parameters(), pc = c.named_parameters();
  bool all_equal = true, any_diff = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    all_equal = all_equal && torch::equal(pa[i].second, pb[i].second);
    any_diff = any_diff || !torch::equal(pa[i].second, pc[i].second);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("parameter groups are disjoint and named") {
  ModelBundle m(testing::tiny_config());
  const auto named = m.named_parameters();
  size_t gen = 0, disc = 0;
  for (const auto& [name, t] : named) {
    if (name.rfind("watermarker.", 0) == 0) ++gen;
    else if (name.rfind("discriminator.", 0) == 0) ++disc;
  }
  CHECK(gen == m.generator_parameters().size());
  CHECK(disc == m.discriminator_parameters().size());
  CHECK(gen + disc == named.size());
}

TEST_CASE("skip gated block") {
  SkipGatedBlock same(SkipGatedBlockConfig{4, 4, {3, 3}, {1, 1}});
  CHECK(!same->skip);
  SkipGatedBlock widen(SkipGatedBlockConfig{2, 4, {3, 3}, {1, 1}});
  CHECK(widen->skip);
  CHECK(widen->forward(torch::randn({1, 2, 5, 6})).sizes() == torch::IntArrayRef({1, 4, 5, 6}));
  CHECK_THROWS_AS(widen->forward(torch::randn({1, 3, 5, 6})), InvalidInput);
  CHECK_THROWS_AS(SkipGatedBlock(SkipGatedBlockConfig{0, 4, {3, 3}, {1, 1}}), InvalidInput);
}

TEST_CASE("input validation") {
  ModelBundle m(testing::tiny_config());
  CHECK_THROWS_AS(m.embed(torch::randn({1, 32}), random_messages(1, 4, 0)), InvalidInput);
  CHECK_THROWS_AS(m.embed(torch::randn({1, 400}), random_messages(1, 5, 0)), InvalidInput);
  CHECK_THROWS_AS(m.extract(torch::randn({400})), InvalidInput);
  const auto wave = dsp::make_waveform(std::vector<float>(400, 0.1f), 8000);
  CHECK_THROWS_AS(m.extract(wave), InvalidInput);
  CHECK_THROWS_AS(m.embed(dsp::make_waveform(std::vector<float>(400, 0.1f), 16000), from_hex("0000")),
                  InvalidInput);
}

TEST_CASE("config validation and json") {
  ModelConfig c;
  c.widths = {1, 2};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.gain_init = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = testing::tiny_config();
  c.band_limit_hz = 3000;
  CHECK(nlohmann::json(c).get<ModelConfig>() == c);
  c.extractor_input = ExtractorInput::kComplex;
  CHECK(nlohmann::json(c).get<ModelConfig>() == c);
  auto j = nlohmann::json(c);
  j["extractor_input"] = "phase";
  CHECK_THROWS_AS(j.get<ModelConfig>(), ConfigError);
}

TEST_CASE("extractor input features") {
  auto cfg = testing::tiny_config();
  const auto y = torch::randn({2, 400}) * 0.1;
  torch::NoGradGuard guard;
  cfg.extractor_input = ExtractorInput::kLogMagnitude;
  ModelBundle mag(cfg, 4);
  // |S(-y)| == |S(y)|
  CHECK(max_abs_diff(mag.extract(y), mag.extract(-y)) == 0.0);
  cfg.extractor_input = ExtractorInput::kComplex;
  ModelBundle cplx(cfg, 4);
  CHECK(cplx.extract(y).sizes() == torch::IntArrayRef({2, cfg.message_bits}));
  CHECK(max_abs_diff(cplx.extract(y), cplx.extract(-y)) > 0.0);
}

TEST_CASE("checkpoint round trip") {
  testing::Scratch dir("ckpt");
  ModelBundle m(testing::tiny_config(), 11);
  const auto path = dir / "m.pt";
  save_checkpoint(path, m);
  CHECK(!std::filesystem::exists(dir / "m.pt.tmp"));
  const auto back = load_checkpoint(path, testing::tiny_config());
  CHECK(read_checkpoint_config(path) == testing::tiny_config());
  const auto x = torch::randn({1, 300}) * 0.1;
  const auto msg = random_messages(1, 4, 3);
  torch::NoGradGuard guard;
  CHECK(torch::equal(m.embed(x, msg), back.embed(x, msg)));
  CHECK(torch::equal(m.discriminate(x), back.discriminate(x)));

  auto other = testing::tiny_config();
  other.carrier_channels = 3;
  CHECK_THROWS_AS(load_checkpoint(path, other), ConfigError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.pt"), ConfigError);
}

TEST_CASE("waveform api round trip") {
  ModelBundle m(testing::tiny_config(), 12);
  const auto x = dsp::make_waveform(std::vector<float>(500, 0.05f), 16000);
  const auto y = m.embed(x, from_hex("a", 4));
  CHECK(y.size() == x.size());
  CHECK(m.extract(y).size() == 4);
  const double d = m.discriminate(y);
  CHECK(d > 0.0);
  CHECK(d < 1.0);
}

}  // TEST_SUITE
