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


#ifndef SEMIMARK_DSP_HPP
#define SEMIMARK_DSP_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include <torch/torch.h>

namespace semimark::dsp {

inline constexpr int kDefaultSampleRate = 16000;

// Mono audio. `samples` is a 1-D floating tensor with nominal range [-1, 1].
struct Waveform {
  torch::Tensor samples;
  int sample_rate = kDefaultSampleRate;

  int64_t size() const { return samples.size(-1); }
  double seconds() const { return static_cast<double>(size()) / sample_rate; }
};

// Builds a Waveform from plain samples (float32 unless `dtype` says otherwise).
Waveform make_waveform(const std::vector<float>& samples, int sample_rate,
                       torch::ScalarType dtype = torch::kFloat32);
std::vector<float> to_vector(const torch::Tensor& samples);

enum class WindowKind { kHann, kRectangular };

struct FrameParams {
  int fft_size = 1024;
  int hop = 256;
  WindowKind window = WindowKind::kHann;
  // Reflect-pad fft_size/2 samples on both ends so frame t is centred on
  // sample t * hop.
  bool center = true;

  int bins() const { return fft_size / 2 + 1; }
  int64_t frame_count(int64_t num_samples) const;
  bool operator==(const FrameParams&) const = default;
};

// Periodic window of length fft_size.
torch::Tensor make_window(const FrameParams& params,
                          torch::ScalarType dtype = torch::kFloat32);

// Throws ConfigError unless the squared-window overlap-add envelope is
// strictly positive everywhere, which is what the normalised inverse needs to
// reconstruct exactly.
void check_overlap_add(const FrameParams& params);

// Scale relating spectrogram energy to signal energy for signals that vanish
// near the boundaries:
//   sum_t sum_k c_k |X[k,t]|^2 = parseval_constant(p) * sum_n x[n]^2,
// with c_k = 1 for DC and Nyquist and 2 otherwise. The constant equals
// fft_size * sum(w^2) / hop; for a periodic Hann window at hop = fft_size/4
// that is 1.5 * fft_size. The identity is exact only when w^2 overlap-adds to
// a constant (Hann at hop = fft_size/4, fft_size/8, ...). At hop = fft_size/2
// the squared overlap ripples between 0.5 and 1 and the constant is its mean.
double parseval_constant(const FrameParams& params);

// One-sided spectrogram, real and imaginary parts as separate [..., F, T]
// tensors with F = fft_size/2 + 1.
struct ComplexSpectrogram {
  torch::Tensor real;
  torch::Tensor imag;
  FrameParams params;
  int sample_rate = kDefaultSampleRate;

  int64_t bins() const { return real.size(-2); }
  int64_t frames() const { return real.size(-1); }
};

// x has shape [..., N]. Differentiable. Throws InvalidInput when
// N < fft_size.
ComplexSpectrogram stft(const torch::Tensor& x, const FrameParams& params,
                        int sample_rate = kDefaultSampleRate);
ComplexSpectrogram stft(const Waveform& x, const FrameParams& params);

// Weighted overlap-add inverse. `length` trims/pads the result; without it the
// natural length (T - 1) * hop (centred) or (T - 1) * hop + fft_size is used.
torch::Tensor istft(const ComplexSpectrogram& spec,
                    std::optional<int64_t> length = std::nullopt);

enum class Interpolation { kLinear, kWindowedSinc };

// Generic fractional resampler: output sample j reads the input at position
// j * step (in input samples). Samples outside the input read as zero.
// Linear in x, hence differentiable; interpolation weights depend only on
// `step`. The windowed-sinc kernel low-passes at min(1, 1/step) of the input
// Nyquist frequency.
torch::Tensor resample_by_step(const torch::Tensor& x, double step,
                               int64_t out_len, Interpolation kind);

int64_t resampled_length(int64_t num_samples, int source_rate, int target_rate);

torch::Tensor resample(const torch::Tensor& x, int source_rate, int target_rate,
                       Interpolation kind = Interpolation::kWindowedSinc);
Waveform resample(const Waveform& x, int target_rate,
                  Interpolation kind = Interpolation::kWindowedSinc);

// Impulse response of a digital Butterworth low-pass (bilinear transform,
// cascaded biquads).
std::vector<double> butterworth_lowpass_impulse(int order, double cutoff_hz,
                                                int sample_rate, int length);

// Zero-phase Butterworth low-pass applied as a symmetric FIR (the
// autocorrelation of the truncated impulse response), so the magnitude
// response is |H|^2 and there is no delay. Preserves length; differentiable.
torch::Tensor zero_phase_lowpass(const torch::Tensor& x, double cutoff_hz,
                                 int sample_rate, int order = 6);

}  // namespace semimark::dsp

#endif  // SEMIMARK_DSP_HPP
