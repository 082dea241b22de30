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
#include <complex>
#include <numbers>

#include "doctest_torch.hpp"
#include "semimark/dsp.hpp"
#include "semimark/errors.hpp"
#include "semimark/wav_io.hpp"
#include "support.hpp"

using namespace semimark;
using namespace semimark::dsp;
using testing::gaussian;
using testing::sine;
using testing::tensor_of;
using testing::vec_of;

namespace {

// Direct DFT of every (reflect-padded, windowed) frame.
std::vector<std::vector<std::complex<double>>> naive_stft(const std::vector<double>& x, int fft, int hop,
                                                          bool center) {
  const int64_t n = static_cast<int64_t>(x.size());
  const int64_t pad = center ? fft / 2 : 0;
  auto at = [&](int64_t i) {
    i -= pad;
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return x[static_cast<size_t>(i)];
  };
  const int64_t frames = 1 + (n + 2 * pad - fft) / hop;
  std::vector<std::vector<std::complex<double>>> out(static_cast<size_t>(fft / 2 + 1),
                                                     std::vector<std::complex<double>>(frames));
  for (int64_t t = 0; t < frames; ++t)
    for (int k = 0; k <= fft / 2; ++k) {
      std::complex<double> acc = 0;
      for (int j = 0; j < fft; ++j) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * j / fft);
        acc += w * at(t * hop + j) * std::polar(1.0, -2.0 * std::numbers::pi * k * j / fft);
      }
      out[static_cast<size_t>(k)][static_cast<size_t>(t)] = acc;
    }
  return out;
}

double max_abs_diff(const torch::Tensor& a, const torch::Tensor& b) {
  return (a.to(torch::kFloat64) - b.to(torch::kFloat64)).abs().max().item<double>();
}

}  // namespace

TEST_SUITE("dsp") {

TEST_CASE("hann window is periodic") {
  FrameParams p;
  p.fft_size = 8;
  const auto w = vec_of(make_window(p, torch::kFloat64));
  REQUIRE(w.size() == 8);
  for (int n = 0; n < 8; ++n) CHECK(w[n] == doctest::Approx(0.5 - 0.5 * std::cos(2 * std::numbers::pi * n / 8)));
  p.window = WindowKind::kRectangular;
  for (double v : vec_of(make_window(p, torch::kFloat64))) CHECK(v == 1.0);
}

TEST_CASE("stft matches a direct DFT") {
  for (bool center : {true, false}) {
    FrameParams p;
    p.fft_size = 64;
    p.hop = 16;
    p.center = center;
    const auto x = gaussian(300, 7);
    const auto spec = stft(tensor_of(x), p);
    const auto ref = naive_stft(x, 64, 16, center);
    REQUIRE(spec.bins() == 33);
    REQUIRE(spec.frames() == static_cast<int64_t>(ref[0].size()));
    double err = 0;
    for (int k = 0; k < 33; ++k)
      for (int64_t t = 0; t < spec.frames(); ++t) {
        err = std::max(err, std::abs(spec.real[k][t].item<double>() - ref[k][t].real()));
        err = std::max(err, std::abs(spec.imag[k][t].item<double>() - ref[k][t].imag()));
      }
    CHECK(err < 1e-10);
  }
}

TEST_CASE("frame counts") {
  FrameParams p;  // 1024 / 256
  const int64_t n = p.fft_size + 3 * p.hop;
  // Centred framing adds fft/2 on each side: 1 + n / hop frames.
  CHECK(p.frame_count(n) == 8);
  CHECK(stft(torch::zeros({n}, torch::kFloat64), p).frames() == 8);
  p.center = false;
  CHECK(p.frame_count(n) == 4);
  CHECK(stft(torch::zeros({n}, torch::kFloat64), p).frames() == 4);
  CHECK(stft(torch::zeros({n}, torch::kFloat64), p).bins() == 513);
}

TEST_CASE("stft rejects clips shorter than one frame") {
  FrameParams p;
  CHECK_THROWS_AS(stft(torch::zeros({p.fft_size - 1}), p), InvalidInput);
}

TEST_CASE("istft inverts stft") {
  for (bool center : {true, false}) {
    FrameParams p;
    p.center = center;
    for (int64_t n : {4096L, 5000L, 16000L}) {
      const auto x = tensor_of(gaussian(n, static_cast<uint64_t>(n)));
      const auto y = istft(stft(x, p), n);
      // Uncentred framing cannot cover the first and last partial hops.
      const int64_t edge = center ? 0 : p.fft_size;
      const int64_t tail = center ? 0 : (n - p.fft_size) % p.hop + p.fft_size;
      CHECK(max_abs_diff(x.slice(0, edge, n - tail), y.slice(0, edge, n - tail)) < 1e-10);
    }
  }
}

TEST_CASE("istft of batched input") {
  FrameParams p;
  p.fft_size = 256;
  p.hop = 128;
  const auto x = torch::randn({3, 2, 2000}, torch::kFloat64);
  CHECK(max_abs_diff(istft(stft(x, p), 2000), x) < 1e-10);
}

TEST_CASE("overlap-add condition") {
  FrameParams p;
  CHECK_NOTHROW(check_overlap_add(p));
  p.hop = p.fft_size;  // hann tails vanish at the frame joins
  CHECK_THROWS_AS(check_overlap_add(p), ConfigError);
  p.window = WindowKind::kRectangular;
  CHECK_NOTHROW(check_overlap_add(p));
  p.hop = p.fft_size + 1;
  CHECK_THROWS_AS(check_overlap_add(p), ConfigError);
}

TEST_CASE("parseval constant") {
  FrameParams p;
  // sum of periodic hann^2 over N is 3N/8, so N * 3N/8 / (N/4).
  CHECK(parseval_constant(p) == doctest::Approx(1.5 * p.fft_size).epsilon(1e-12));

  for (int fft : {256, 512, 1024}) {
    p.fft_size = fft;
    p.hop = fft / 4;
    const int64_t n = 16 * fft;
    auto v = gaussian(n, 11);
    for (int64_t i = 0; i < n; ++i)
      if (i < fft || i >= n - fft) v[static_cast<size_t>(i)] = 0.0;
    const auto x = tensor_of(v);
    const auto s = stft(x, p);
    auto power = s.real.pow(2) + s.imag.pow(2);
    auto weights = torch::full({s.bins(), 1}, 2.0, torch::kFloat64);
    weights[0][0] = 1.0;
    weights[s.bins() - 1][0] = 1.0;
    const double lhs = (power * weights).sum().item<double>();
    const double rhs = parseval_constant(p) * x.pow(2).sum().item<double>();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("stft is differentiable") {
  FrameParams p;
  p.fft_size = 64;
  p.hop = 16;
  auto x = torch::randn({200}, torch::dtype(torch::kFloat64).requires_grad(true));
  auto y = istft(stft(x, p), 200);
  y.pow(2).sum().backward();
  CHECK(max_abs_diff(x.grad(), 2 * x.detach()) < 1e-9);
}

TEST_CASE("linear resampler matches direct interpolation") {
  const auto x = gaussian(100, 3);
  const double step = 1.37;
  const int64_t out_len = 80;
  const auto y = vec_of(resample_by_step(tensor_of(x), step, out_len, Interpolation::kLinear));
  for (int64_t j = 0; j < out_len; ++j) {
    const double pos = j * step;
    const auto i = static_cast<int64_t>(std::floor(pos));
    const double f = pos - i;
    auto at = [&](int64_t k) { return k >= 0 && k < 100 ? x[static_cast<size_t>(k)] : 0.0; };
    CHECK(y[static_cast<size_t>(j)] == doctest::Approx(at(i) * (1 - f) + at(i + 1) * f).epsilon(1e-12));
  }
}

TEST_CASE("windowed sinc resampling preserves in-band sines") {
  const int64_t n = 16000;
  const auto x = tensor_of(sine(440.0, 16000, n));
  for (int target : {8000, 12000, 22050}) {
    CHECK(resampled_length(n, 16000, target) == std::llround(n * static_cast<double>(target) / 16000));
    const auto y = vec_of(resample(x, 16000, target));
    const auto ref = sine(440.0, target, static_cast<int64_t>(y.size()));
    double err = 0;
    for (size_t i = 200; i + 200 < y.size(); ++i) err = std::max(err, std::abs(y[i] - ref[i]));
    CHECK(err < 2e-3);
  }
}

TEST_CASE("windowed sinc resampling rejects content above the new nyquist") {
  const auto x = tensor_of(sine(6000.0, 16000, 16000));
  const auto y = resample(x, 16000, 8000);
  const auto mid = y.slice(0, 500, 7500);
  CHECK(mid.abs().max().item<double>() < 0.02);
}

TEST_CASE("butterworth impulse response has the analytic magnitude response") {
  const int fs = 16000;
  const double fc = 3000.0;
  const int order = 6;
  const auto h = butterworth_lowpass_impulse(order, fc, fs, 4096);
  for (double f : {0.0, 500.0, 2000.0, 3000.0, 4000.0, 6000.0}) {
    std::complex<double> acc = 0;
    const double w = 2 * std::numbers::pi * f / fs;
    for (size_t i = 0; i < h.size(); ++i) acc += h[i] * std::polar(1.0, -w * static_cast<double>(i));
    const double ratio = std::tan(w / 2) / std::tan(std::numbers::pi * fc / fs);
    const double expected = 1.0 / (1.0 + std::pow(ratio, 2 * order));
    CHECK(std::norm(acc) == doctest::Approx(expected).epsilon(1e-6));
  }
  CHECK_THROWS_AS(butterworth_lowpass_impulse(6, 9000.0, fs, 64), ConfigError);
  CHECK_THROWS_AS(butterworth_lowpass_impulse(5, 1000.0, fs, 64), ConfigError);
}

TEST_CASE("zero-phase lowpass keeps passband phase and attenuates stopband") {
  const int fs = 16000;
  const int64_t n = 8000;
  const auto low = tensor_of(sine(500.0, fs, n));
  const auto y = zero_phase_lowpass(low, 3000.0, fs);
  CHECK(y.size(0) == n);
  CHECK(max_abs_diff(y.slice(0, 1000, 7000), low.slice(0, 1000, 7000)) < 1e-3);

  const auto high = tensor_of(sine(7000.0, fs, n));
  const double ratio = std::tan(std::numbers::pi * 7000.0 / fs) / std::tan(std::numbers::pi * 3000.0 / fs);
  const double gain = 1.0 / (1.0 + std::pow(ratio, 12));  // |H|^2
  const double peak = zero_phase_lowpass(high, 3000.0, fs).slice(0, 1000, 7000).abs().max().item<double>();
  CHECK(peak == doctest::Approx(gain).epsilon(0.05));
}

TEST_CASE("wav round trip") {
  testing::Scratch dir("wav");
  std::vector<float> v = {0.0f, 0.5f, -0.5f, 1.0f, -1.0f, 0.25f};
  write_wav(dir / "a.wav", v, 22050);
  const auto info = probe_wav(dir / "a.wav");
  CHECK(info.sample_rate == 22050);
  CHECK(info.channels == 1);
  CHECK(info.bits_per_sample == 16);
  CHECK(info.frames == 6);
  const auto w = read_wav(dir / "a.wav");
  CHECK(w.sample_rate == 22050);
  const auto back = to_vector(w.samples);
  for (size_t i = 0; i < v.size(); ++i) CHECK(std::abs(back[i] - v[i]) <= 1.0 / 32768.0);
  CHECK(back[3] == doctest::Approx(32767.0 / 32768.0));
}

TEST_CASE("wav reader rejects unsupported files") {
  testing::Scratch dir("wavbad");
  const std::vector<int16_t> s(32, 100);
  testing::write_raw_wav(dir / "stereo.wav", 1, 2, 16000, 16, s);
  testing::write_raw_wav(dir / "float.wav", 3, 1, 16000, 32, s);
  testing::write_raw_wav(dir / "b24.wav", 1, 1, 16000, 24, s);
  testing::write_raw_wav(dir / "trunc.wav", 1, 1, 16000, 16, s, 4000);
  std::ofstream(dir / "junk.wav") << "not audio at all";
  for (const char* name : {"stereo.wav", "float.wav", "b24.wav", "trunc.wav", "junk.wav", "missing.wav"})
    CHECK_THROWS_AS(read_wav(dir / name), InvalidInput);
  testing::write_raw_wav(dir / "ok.wav", 1, 1, 16000, 16, s);
  CHECK(read_wav(dir / "ok.wav").size() == 32);
}

TEST_CASE("round trip on 100 clips is fast") {
  FrameParams p;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = torch::randn({32000}, torch::kFloat64);
    worst = std::max(worst, max_abs_diff(istft(stft(x, p), 32000), x));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(worst < 1e-6);
  CHECK(secs < 10.0);
}

}  // TEST_SUITE
