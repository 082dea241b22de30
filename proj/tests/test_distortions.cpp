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


#include <chrono>
#include <cmath>

#include "doctest_torch.hpp"
#include "semimark/distortions.hpp"
#include "semimark/errors.hpp"
#include "semimark/metrics.hpp"
#include "semimark/seeding.hpp"
#include "support.hpp"

using namespace semimark;
namespace d = semimark::distortion;
using testing::gaussian;
using testing::sine;
using testing::tensor_of;
using testing::vec_of;

namespace {

// Frequency of the strongest rfft bin of a Hann-windowed excerpt.
double peak_frequency(const torch::Tensor& x, int rate, int64_t start, int64_t len) {
  auto seg = x.slice(0, start, start + len).to(torch::kFloat64);
  auto w = torch::hann_window(len, torch::TensorOptions().dtype(torch::kFloat64));
  auto mag = torch::fft::rfft(seg * w).abs();
  const auto k = mag.argmax().item<int64_t>();
  return static_cast<double>(k) * rate / static_cast<double>(len);
}

}  // namespace

TEST_SUITE("distortions") {

TEST_CASE("gaussian noise hits the target snr") {
  const auto x = tensor_of(sine(300.0, 16000, 16000, 0.5));
  for (double target : {0.0, 10.0, 15.0, 20.0, 40.0}) {
    for (uint64_t seed : {1u, 2u, 3u}) {
      const auto y = apply(x, 16000, make_distortion(d::GaussianNoise{target}), seed);
      CHECK(std::abs(snr_db(x, y) - target) < 0.1);
    }
  }
  const auto a = apply(x, 16000, make_distortion(d::GaussianNoise{20}), 7);
  const auto b = apply(x, 16000, make_distortion(d::GaussianNoise{20}), 7);
  const auto c = apply(x, 16000, make_distortion(d::GaussianNoise{20}), 8);
  CHECK(torch::equal(a, b));
  CHECK(!torch::equal(a, c));
}

TEST_CASE("pitch shift scales frequency by 2^(s/12)") {
  const int rate = 16000;
  const int64_t n = 16000;
  const int64_t fft = 4096;
  const double f0 = 440.0;
  const auto x = tensor_of(sine(f0, rate, n));
  for (int s = -4; s <= 4; ++s) {
    const auto y = pitch_shift(x, s);
    CHECK(y.size(0) == n);
    const double expected = f0 * std::exp2(s / 12.0);
    CHECK(std::abs(peak_frequency(y, rate, 0, fft) - expected) <= static_cast<double>(rate) / fft);
  }
}

TEST_CASE("phase vocoder pitch shift keeps tempo and scales frequency") {
  const int rate = 16000;
  const auto x = tensor_of(sine(440.0, rate, 16000, 0.5));
  for (int s : {-2, 2}) {
    const auto y = pitch_shift_vocoder(x, s, rate);
    CHECK(y.size(0) == x.size(0));
    const double expected = 440.0 * std::exp2(s / 12.0);
    CHECK(std::abs(peak_frequency(y, rate, 4000, 8192) - expected) <= 2.0 * rate / 8192.0);
    // Energy stays in the second half, unlike the resampling variant.
    CHECK(y.slice(0, 12000, 15000).abs().max().item<double>() > 0.2);
  }
  const auto spec = make_distortion(d::PitchShift{2.0, PitchMethod::kPhaseVocoder});
  CHECK(!spec.differentiable);
  ApplyOptions train;
  train.training_path = true;
  CHECK_THROWS_AS(apply(x, rate, spec, 0, train), ContractViolation);
}

TEST_CASE("requantizer error bound") {
  for (int bits : {2, 4, 8, 10, 12, 16}) {
    const double step = std::ldexp(1.0, 1 - bits);
    // Grid over [-1, 1 - step/2]; above that clamping to the top level adds
    // at most another half step.
    const auto x = torch::linspace(-1.0, 1.0 - step / 2, 20001, torch::kFloat64);
    const auto q = requantize(x, bits);
    CHECK((q - x).abs().max().item<double>() <= step / 2 + 1e-12);
    const auto top = torch::linspace(1.0 - step / 2, 1.0, 101, torch::kFloat64);
    CHECK((requantize(top, bits) - top).abs().max().item<double>() <= step + 1e-12);
    // Every output sits on the grid.
    CHECK(((q / step).round() * step - q).abs().max().item<double>() < 1e-12);
  }
  CHECK(requantize(torch::tensor({0.30}, torch::kFloat64), 8).item<double>() == 0.296875);
}

TEST_CASE("requantizer straight-through gradient") {
  auto x = torch::tensor({0.1, -0.2, 0.33}, torch::dtype(torch::kFloat64).requires_grad(true));
  requantize(x, 8, true).sum().backward();
  CHECK(torch::equal(x.grad(), torch::ones({3}, torch::kFloat64)));
}

TEST_CASE("crop keeps one contiguous run") {
  const auto x = torch::arange(1000, torch::kFloat64);
  for (double f : {0.1, 0.3, 0.7}) {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const auto y = apply(x, 16000, make_distortion(d::Crop{f}), seed);
      CHECK(y.size(0) == std::llround(1000 * (1 - f)));
      const auto v = vec_of(y);
      bool contiguous = true;
      for (size_t i = 1; i < v.size(); ++i) contiguous = contiguous && v[i] == v[i - 1] + 1;
      CHECK(contiguous);
      CHECK(v.front() >= 0);
      CHECK(v.back() <= 999);
    }
  }
}

TEST_CASE("length-preserving distortions") {
  const auto x = tensor_of(gaussian(8000, 4, 0.2));
  const std::vector<DistortionSpec> specs = {
      make_distortion(d::Identity{}),
      make_distortion(d::GaussianNoise{30}),
      make_distortion(d::ResampleChain{8000}),
      make_distortion(d::ResampleChain{12000, dsp::Interpolation::kWindowedSinc}),
      make_distortion(d::LowpassFilter{3500}),
      make_distortion(d::Requantize{10}),
      make_distortion(d::PitchShift{-3}),
  };
  for (const auto& s : specs) CHECK(apply(x, 16000, s, 1).size(0) == 8000);
}

TEST_CASE("resample chain keeps the low band") {
  const auto x = tensor_of(sine(500.0, 16000, 16000, 0.5));
  const auto y = apply(x, 16000, make_distortion(d::ResampleChain{8000, dsp::Interpolation::kWindowedSinc}), 0);
  CHECK(snr_db(x.slice(0, 500, 15500), y.slice(0, 500, 15500)) > 30.0);
}

TEST_CASE("differentiable distortions pass gradients") {
  const auto base = tensor_of(gaussian(4000, 9, 0.2));
  ApplyOptions train;
  train.training_path = true;
  for (const auto& s : {make_distortion(d::Crop{0.3}), make_distortion(d::GaussianNoise{20}),
                        make_distortion(d::ResampleChain{8000}), make_distortion(d::LowpassFilter{4000}),
                        make_distortion(d::Requantize{8}), make_distortion(d::PitchShift{2})}) {
    auto x = base.clone().requires_grad_(true);
    apply(x, 16000, s, 3, train).pow(2).sum().backward();
    REQUIRE(x.grad().defined());
    CHECK(x.grad().abs().sum().item<double>() > 0.0);
  }
}

TEST_CASE("spec invariants") {
  CHECK(make_distortion(d::PitchShift{2}).cls == DistortionClass::kMalicious);
  CHECK(make_distortion(d::CodecMp3{}).cls == DistortionClass::kEvalOnly);
  CHECK(!make_distortion(d::CodecOpus{}).differentiable);
  CHECK(make_distortion(d::Crop{}).cls == DistortionClass::kBenign);
  auto bad = make_distortion(d::PitchShift{2});
  bad.cls = DistortionClass::kBenign;
  CHECK_THROWS_AS(validate(bad), InvalidInput);
  auto codec = make_distortion(d::CodecMp3{});
  codec.differentiable = true;
  CHECK_THROWS_AS(validate(codec), InvalidInput);
  CHECK_THROWS_AS(validate(make_distortion(d::Crop{1.0})), InvalidInput);
  CHECK_THROWS_AS(validate(make_distortion(d::PitchShift{7})), InvalidInput);
  CHECK_THROWS_AS(validate(make_distortion(d::Requantize{1})), InvalidInput);
}

TEST_CASE("codec specs are refused on training paths") {
  ApplyOptions train;
  train.training_path = true;
  CHECK_THROWS_AS(apply(torch::zeros({100}), 16000, make_distortion(d::CodecMp3{}), 0, train), ContractViolation);
}

TEST_CASE("json round trip") {
  for (const auto& s : {make_distortion(d::Identity{}), make_distortion(d::Crop{0.25}),
                        make_distortion(d::GaussianNoise{17.5}), make_distortion(d::ResampleChain{12000}),
                        make_distortion(d::LowpassFilter{3000, 4}), make_distortion(d::Requantize{12}),
                        make_distortion(d::PitchShift{-1.5, PitchMethod::kPhaseVocoder}),
                        make_distortion(d::CodecMp3{8}), make_distortion(d::CodecOpus{60, 12})}) {
    const auto back = nlohmann::json(s).get<DistortionSpec>();
    CHECK(nlohmann::json(back) == nlohmann::json(s));
    CHECK(back.kind() == s.kind());
    CHECK(back.cls == s.cls);
  }
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"kind":"reverb"})").get<DistortionSpec>(), InvalidInput);
  CHECK(describe(make_distortion(d::PitchShift{2})).find("pitch_shift") == 0);
}

TEST_CASE("sampled distortions follow the class and ranges") {
  DistortionRanges r;
  std::map<DistortionKind, int> counts;
  for (uint64_t i = 0; i < 1200; ++i) {
    const auto b = sample_distortion(DistortionClass::kBenign, derive_seed(1, "b", i), r);
    CHECK(b.cls == DistortionClass::kBenign);
    CHECK(b.differentiable);
    ++counts[b.kind()];
    if (const auto* c = std::get_if<d::Crop>(&b.params)) {
      CHECK(c->fraction >= r.crop_min);
      CHECK(c->fraction <= r.crop_max);
    }
    const auto m = sample_distortion(DistortionClass::kMalicious, derive_seed(1, "m", i), r);
    const double s = std::abs(std::get<d::PitchShift>(m.params).semitones);
    CHECK(s >= r.pitch_min_semitones);
    CHECK(s <= r.pitch_max_semitones);
  }
  CHECK(counts.size() == 6);
  for (const auto& [kind, c] : counts) CHECK(std::abs(c - 200) < 60);  // 200 +- ~4.6 sigma
  CHECK_THROWS_AS(sample_distortion(DistortionClass::kEvalOnly, 0), InvalidInput);
  CHECK(nlohmann::json(nlohmann::json(r).get<DistortionRanges>()) == nlohmann::json(r));
}

TEST_CASE("codec round trip through an adapter") {
  testing::Scratch dir("codec");
  const auto tool = testing::write_script(dir / "fakecodec.sh", "cp \"$1\" \"$2\"");
  CodecRegistry reg;
  reg.codecs["mp3"] = CodecAdapter{{{tool.string(), "{in}", "{out}"}}, 0};
  const auto x = dsp::make_waveform(std::vector<float>(1000, 0.25f), 16000);
  const auto y = codec_roundtrip(x, make_distortion(d::CodecMp3{8}), reg);
  CHECK(y.size() == 1000);
  CHECK((y.samples - x.samples).abs().max().item<double>() < 1e-4);

  ApplyOptions opts;
  opts.codecs = &reg;
  CHECK(apply(x, make_distortion(d::CodecMp3{8}), 0, opts).size() == 1000);
  // Opus is not registered.
  CHECK_THROWS_AS(codec_roundtrip(x, make_distortion(d::CodecOpus{}), reg), EnvironmentError);
  CHECK_THROWS_AS(apply(x, make_distortion(d::CodecOpus{}), 0, {}), EnvironmentError);
  reg.codecs["opus"] = CodecAdapter{{{"semimark-no-such-tool", "{in}", "{out}"}}, 0};
  CHECK_THROWS_AS(codec_roundtrip(x, make_distortion(d::CodecOpus{}), reg), EnvironmentError);
  const auto failing = testing::write_script(dir / "fail.sh", "echo broken >&2; exit 3");
  reg.codecs["opus"] = CodecAdapter{{{failing.string()}}, 0};
  try {
    codec_roundtrip(x, make_distortion(d::CodecOpus{}), reg);
    FAIL("expected EnvironmentError");
  } catch (const EnvironmentError& e) {
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
  }
}

TEST_CASE("oracle checks run quickly") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto x = tensor_of(gaussian(32000, 1, 0.3));
  for (int i = 0; i < 20; ++i) {
    apply(x, 16000, make_distortion(d::GaussianNoise{20}), i);
    pitch_shift(x, (i % 9) - 4);
    requantize(x, 8);
    apply(x, 16000, make_distortion(d::Crop{0.3}), i);
  }
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 60.0);
}

}  // TEST_SUITE
