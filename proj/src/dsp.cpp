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


#include "semimark/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "semimark/errors.hpp"

namespace semimark::dsp {

namespace F = torch::nn::functional;

Waveform make_waveform(const std::vector<float>& samples, int sample_rate,
                       torch::ScalarType dtype) {
  if (sample_rate <= 0) throw InvalidInput("sample_rate must be positive");
  auto t = torch::from_blob(const_cast<float*>(samples.data()),
                            {static_cast<int64_t>(samples.size())},
                            torch::kFloat32)
               .clone()
               .to(dtype);
  return {t, sample_rate};
}

std::vector<float> to_vector(const torch::Tensor& samples) {
  auto t = samples.detach().to(torch::kFloat32).contiguous().view(-1);
  return {t.data_ptr<float>(), t.data_ptr<float>() + t.numel()};
}

int64_t FrameParams::frame_count(int64_t num_samples) const {
  const int64_t padded = center ? num_samples + 2 * (fft_size / 2) : num_samples;
  if (padded < fft_size) return 0;
  return 1 + (padded - fft_size) / hop;
}

torch::Tensor make_window(const FrameParams& params, torch::ScalarType dtype) {
  switch (params.window) {
    case WindowKind::kHann:
      return torch::hann_window(params.fft_size,
                                torch::TensorOptions().dtype(dtype));
    case WindowKind::kRectangular:
      return torch::ones({params.fft_size}, torch::TensorOptions().dtype(dtype));
  }
  throw ConfigError("unknown window kind");
}

void check_overlap_add(const FrameParams& p) {
  if (p.fft_size < 2 || p.fft_size % 2 != 0)
    throw ConfigError("fft_size must be even and >= 2, got " +
                      std::to_string(p.fft_size));
  if (p.hop < 1 || p.hop > p.fft_size)
    throw ConfigError("hop must lie in [1, fft_size], got " +
                      std::to_string(p.hop));
  auto w = make_window(p, torch::kFloat64);
  auto w2 = (w * w).contiguous();
  const double* wp = w2.data_ptr<double>();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int phase = 0; phase < p.hop; ++phase) {
    double env = 0.0;
    for (int n = phase; n < p.fft_size; n += p.hop) env += wp[n];
    lo = std::min(lo, env);
    hi = std::max(hi, env);
  }
  if (!(hi > 0.0) || lo < 1e-9 * hi)
    throw ConfigError("frame parameters fft_size=" + std::to_string(p.fft_size) +
                      " hop=" + std::to_string(p.hop) +
                      " leave samples uncovered by the window; the overlap-add "
                      "inverse cannot reconstruct them");
}

double parseval_constant(const FrameParams& p) {
  auto w = make_window(p, torch::kFloat64);
  return p.fft_size * (w * w).sum().item<double>() / p.hop;
}

namespace {

// Flattens leading dims: [..., N] -> [B, N].
std::pair<torch::Tensor, std::vector<int64_t>> flatten_batch(const torch::Tensor& x) {
  auto sizes = x.sizes().vec();
  std::vector<int64_t> lead(sizes.begin(), sizes.end() - 1);
  return {x.reshape({-1, sizes.back()}), lead};
}

std::vector<int64_t> with_tail(std::vector<int64_t> lead,
                               std::initializer_list<int64_t> tail) {
  lead.insert(lead.end(), tail.begin(), tail.end());
  return lead;
}

}  // namespace

ComplexSpectrogram stft(const torch::Tensor& x, const FrameParams& p,
                        int sample_rate) {
  if (x.dim() < 1) throw InvalidInput("stft expects at least one dimension");
  if (x.size(-1) < p.fft_size)
    throw InvalidInput("input of " + std::to_string(x.size(-1)) +
                       " samples is shorter than one frame (" +
                       std::to_string(p.fft_size) + ")");
  auto [flat, lead] = flatten_batch(x);
  torch::Tensor padded = flat;
  if (p.center) {
    const int64_t pad = p.fft_size / 2;
    padded = F::pad(flat.unsqueeze(1),
                    F::PadFuncOptions({pad, pad}).mode(torch::kReflect))
                 .squeeze(1);
  }
  auto frames = padded.unfold(-1, p.fft_size, p.hop);  // [B, T, n]
  auto w = make_window(p, x.scalar_type());
  auto spec = torch::fft::rfft(frames * w, p.fft_size, -1).transpose(1, 2);
  const int64_t bins = spec.size(1);
  const int64_t frames_n = spec.size(2);
  return {torch::real(spec).reshape(with_tail(lead, {bins, frames_n})),
          torch::imag(spec).reshape(with_tail(lead, {bins, frames_n})), p,
          sample_rate};
}

ComplexSpectrogram stft(const Waveform& x, const FrameParams& params) {
  return stft(x.samples, params, x.sample_rate);
}

torch::Tensor istft(const ComplexSpectrogram& s, std::optional<int64_t> length) {
  const auto& p = s.params;
  check_overlap_add(p);
  if (s.real.sizes() != s.imag.sizes())
    throw InvalidInput("real and imaginary parts differ in shape");
  if (s.bins() != p.bins())
    throw InvalidInput("spectrogram has " + std::to_string(s.bins()) +
                       " bins, frame parameters imply " +
                       std::to_string(p.bins()));
  auto sizes = s.real.sizes().vec();
  std::vector<int64_t> lead(sizes.begin(), sizes.end() - 2);
  const int64_t frames_n = s.frames();
  auto re = s.real.reshape({-1, s.bins(), frames_n});
  auto im = s.imag.reshape({-1, s.bins(), frames_n});

  auto spec = torch::complex(re, im).transpose(1, 2);  // [B, T, F]
  auto w = make_window(p, s.real.scalar_type());
  auto frames = torch::fft::irfft(spec, p.fft_size, -1) * w;  // [B, T, n]
  const int64_t total = (frames_n - 1) * p.hop + p.fft_size;
  auto fold = [&](const torch::Tensor& cols) {
    return F::fold(cols, F::FoldFuncOptions({1, total}, {1, p.fft_size})
                             .stride({1, p.hop}))
        .reshape({cols.size(0), total});
  };
  auto signal = fold(frames.transpose(1, 2));
  auto env = fold((w * w).view({1, p.fft_size, 1}).expand({1, p.fft_size, frames_n}));
  // Positions no frame covers (only possible at uncentred edges) stay zero.
  auto safe = torch::where(env > 1e-11, env, torch::ones_like(env));
  signal = torch::where(env > 1e-11, signal / safe, torch::zeros_like(signal));

  const int64_t offset = p.center ? p.fft_size / 2 : 0;
  const int64_t natural = p.center ? (frames_n - 1) * p.hop : total;
  const int64_t out_len = length.value_or(natural);
  const int64_t avail = std::max<int64_t>(0, total - offset);
  auto out = signal.narrow(1, offset, std::min(out_len, avail));
  if (out.size(1) < out_len) out = F::pad(out, F::PadFuncOptions({0, out_len - out.size(1)}));
  return out.reshape(with_tail(lead, {out_len}));
}

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double u, double beta) {
  if (std::abs(u) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) /
         std::cyl_bessel_i(0.0, beta);
}

constexpr int kSincZeroCrossings = 16;
constexpr double kKaiserBeta = 8.6;

}  // namespace

torch::Tensor resample_by_step(const torch::Tensor& x, double step,
                               int64_t out_len, Interpolation kind) {
  if (!(step > 0.0)) throw InvalidInput("resample step must be positive");
  if (out_len < 0) throw InvalidInput("negative output length");
  const int64_t n = x.size(-1);
  auto [flat, lead] = flatten_batch(x);

  int64_t taps = 2;
  double cutoff = 1.0;
  double half_width = 1.0;
  if (kind == Interpolation::kWindowedSinc) {
    cutoff = std::min(1.0, 1.0 / step);
    half_width = kSincZeroCrossings / cutoff;
    taps = 2 * static_cast<int64_t>(std::ceil(half_width));
  }
  auto index = torch::empty({out_len, taps}, torch::kLong);
  auto weight = torch::empty({out_len, taps}, torch::kFloat64);
  auto* ip = index.data_ptr<int64_t>();
  auto* wp = weight.data_ptr<double>();
  for (int64_t j = 0; j < out_len; ++j) {
    const double t = static_cast<double>(j) * step;
    const auto base = static_cast<int64_t>(std::floor(t));
    const int64_t first = base - taps / 2 + 1;
    for (int64_t k = 0; k < taps; ++k) {
      const int64_t i = first + k;
      const double d = t - static_cast<double>(i);
      double h;
      if (kind == Interpolation::kLinear) {
        h = std::max(0.0, 1.0 - std::abs(d));
      } else {
        h = cutoff * sinc(cutoff * d) * kaiser(d / half_width, kKaiserBeta);
      }
      const bool inside = i >= 0 && i < n;
      ip[j * taps + k] = inside ? i : 0;
      wp[j * taps + k] = inside ? h : 0.0;
    }
  }
  auto gathered = flat.index_select(1, index.view(-1)).view({flat.size(0), out_len, taps});
  auto y = (gathered * weight.to(x.scalar_type())).sum(-1);
  return y.reshape(with_tail(lead, {out_len}));
}

int64_t resampled_length(int64_t num_samples, int source_rate, int target_rate) {
  return static_cast<int64_t>(std::llround(static_cast<double>(num_samples) *
                                           target_rate / source_rate));
}

torch::Tensor resample(const torch::Tensor& x, int source_rate, int target_rate,
                       Interpolation kind) {
  if (source_rate <= 0 || target_rate <= 0)
    throw InvalidInput("sample rates must be positive");
  if (source_rate == target_rate) return x.clone();
  return resample_by_step(x, static_cast<double>(source_rate) / target_rate,
                          resampled_length(x.size(-1), source_rate, target_rate),
                          kind);
}

Waveform resample(const Waveform& x, int target_rate, Interpolation kind) {
  return {resample(x.samples, x.sample_rate, target_rate, kind), target_rate};
}

std::vector<double> butterworth_lowpass_impulse(int order, double cutoff_hz,
                                                int sample_rate, int length) {
  if (order < 1 || order % 2 != 0)
    throw ConfigError("butterworth order must be a positive even number");
  if (!(cutoff_hz > 0.0) || cutoff_hz >= sample_rate / 2.0)
    throw ConfigError("cutoff must lie in (0, nyquist)");
  using cd = std::complex<double>;
  const double fs = sample_rate;
  const double warped = 2.0 * fs * std::tan(std::numbers::pi * cutoff_hz / fs);

  struct Biquad {
    double b0, b1, b2, a1, a2;
  };
  std::vector<Biquad> sections;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    const cd s_pole = warped * cd(std::cos(theta), std::sin(theta));
    const cd z_pole = (2.0 * fs + s_pole) / (2.0 * fs - s_pole);
    // Conjugate pair -> 1 + a1 z^-1 + a2 z^-2; zeros at z = -1.
    const double a1 = -2.0 * z_pole.real();
    const double a2 = std::norm(z_pole);
    const double gain = (1.0 + a1 + a2) / 4.0;  // unit DC gain
    sections.push_back({gain, 2.0 * gain, gain, a1, a2});
  }
  std::vector<double> h(length, 0.0);
  if (length > 0) h[0] = 1.0;
  for (const auto& s : sections) {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (auto& v : h) {
      const double y = s.b0 * v + s.b1 * x1 + s.b2 * x2 - s.a1 * y1 - s.a2 * y2;
      x2 = x1;
      x1 = v;
      y2 = y1;
      y1 = y;
      v = y;
    }
  }
  return h;
}

torch::Tensor zero_phase_lowpass(const torch::Tensor& x, double cutoff_hz,
                                 int sample_rate, int order) {
  const int length = sample_rate / 16;
  auto h = butterworth_lowpass_impulse(order, cutoff_hz, sample_rate, length);
  // Truncate the decayed tail before forming the autocorrelation.
  double peak = 0.0;
  for (double v : h) peak = std::max(peak, std::abs(v));
  int keep = length;
  while (keep > 1 && std::abs(h[keep - 1]) < 1e-9 * peak) --keep;
  std::vector<double> kernel(2 * keep - 1, 0.0);
  for (int lag = 0; lag < keep; ++lag) {
    double acc = 0.0;
    for (int i = 0; i + lag < keep; ++i) acc += h[i] * h[i + lag];
    kernel[keep - 1 + lag] = acc;
    kernel[keep - 1 - lag] = acc;
  }
  auto k = torch::tensor(kernel, torch::kFloat64).to(x.scalar_type()).view({1, 1, -1});
  auto [flat, lead] = flatten_batch(x);
  auto y = F::conv1d(flat.unsqueeze(1), k, F::Conv1dFuncOptions().padding(keep - 1));
  return y.squeeze(1).reshape(x.sizes());
}

}  // namespace semimark::dsp
