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


#ifndef SEMIMARK_DISTORTIONS_HPP
#define SEMIMARK_DISTORTIONS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "semimark/dsp.hpp"

namespace semimark {

enum class DistortionKind {
  kIdentity,
  kCrop,
  kGaussianNoise,
  kResampleChain,
  kLowpassFilter,
  kRequantize,
  kPitchShift,
  kCodecMp3,
  kCodecOpus,
};

enum class DistortionClass { kBenign, kMalicious, kEvalOnly };

enum class PitchMethod {
  // Interpolated resampling by 2^(-s/12), cropped/padded back to the input
  // length. Shifts tempo together with pitch. Differentiable.
  kResample,
  // Phase-vocoder time stretch followed by resampling; keeps tempo.
  // Evaluation only.
  kPhaseVocoder,
};

namespace distortion {

struct Identity {};
// Removes `fraction` of the clip, keeping one contiguous run.
struct Crop {
  double fraction = 0.3;
};
struct GaussianNoise {
  double snr_db = 20.0;
};
// source rate -> intermediate_rate -> source rate.
struct ResampleChain {
  int intermediate_rate = 8000;
  dsp::Interpolation interpolation = dsp::Interpolation::kLinear;
};
struct LowpassFilter {
  double cutoff_hz = 4000.0;
  int order = 6;
};
struct Requantize {
  int bits = 8;
};
struct PitchShift {
  double semitones = 2.0;
  PitchMethod method = PitchMethod::kResample;
  dsp::Interpolation interpolation = dsp::Interpolation::kLinear;
};
struct CodecMp3 {
  double bitrate_kbps = 8.0;
};
struct CodecOpus {
  double frame_ms = 60.0;
  double bitrate_kbps = 16.0;
};

}  // namespace distortion

using DistortionParams =
    std::variant<distortion::Identity, distortion::Crop, distortion::GaussianNoise,
                 distortion::ResampleChain, distortion::LowpassFilter,
                 distortion::Requantize, distortion::PitchShift, distortion::CodecMp3,
                 distortion::CodecOpus>;

struct DistortionSpec {
  DistortionParams params;
  bool differentiable = true;
  DistortionClass cls = DistortionClass::kBenign;

  DistortionKind kind() const;
};

// Fills `differentiable` and `cls` from the parameter type.
DistortionSpec make_distortion(DistortionParams params);
// Throws InvalidInput when the kind/class/differentiable invariants or the
// parameter ranges are violated.
void validate(const DistortionSpec& spec);

std::string kind_name(DistortionKind kind);
std::string class_name(DistortionClass cls);
DistortionClass parse_class(const std::string& name);
// Short human-readable label, e.g. "pitch_shift(+2.00st)".
std::string describe(const DistortionSpec& spec);

void to_json(nlohmann::json& j, const DistortionSpec& spec);
void from_json(const nlohmann::json& j, DistortionSpec& spec);

// External encoder/decoder used for codec round trips. Each step is an argv
// template; placeholders: {in} (input WAV), {out} (decoded PCM WAV the last
// step must produce), {work} (scratch dir), {rate}, {bitrate_kbps},
// {frame_ms}.
struct CodecAdapter {
  std::vector<std::vector<std::string>> steps;
  // Sample rate the tool is fed; 0 keeps the input rate.
  int input_rate = 0;
};

struct CodecRegistry {
  std::map<std::string, CodecAdapter> codecs;  // keys "mp3", "opus"
  int max_processes = 2;

  static CodecRegistry from_json(const nlohmann::json& j);
};

struct ApplyOptions {
  // Training paths only accept differentiable specs.
  bool training_path = false;
  const CodecRegistry* codecs = nullptr;
};

// Applies one distortion to a 1-D waveform tensor. Differentiable specs keep
// the autograd graph. Crop shortens the clip; everything else preserves the
// length. Randomness (crop offset, noise) is drawn from `seed` only.
torch::Tensor apply(const torch::Tensor& x, int sample_rate, const DistortionSpec& spec,
                    uint64_t seed, const ApplyOptions& options = {});
dsp::Waveform apply(const dsp::Waveform& x, const DistortionSpec& spec, uint64_t seed,
                    const ApplyOptions& options = {});

// Pitch shift by `semitones` (|s| <= 6), output length equals input length.
torch::Tensor pitch_shift(const torch::Tensor& x, double semitones,
                          dsp::Interpolation interpolation = dsp::Interpolation::kLinear);
torch::Tensor pitch_shift_vocoder(const torch::Tensor& x, double semitones, int sample_rate);

// Snaps samples to 2^bits uniform levels over [-1, 1). With
// `straight_through` the backward pass is the identity.
torch::Tensor requantize(const torch::Tensor& x, int bits, bool straight_through = false);

// Encode/decode round trip through an external codec; the result is
// resampled back to x's rate and length-aligned to x. Throws
// EnvironmentError when no usable adapter is configured.
dsp::Waveform codec_roundtrip(const dsp::Waveform& x, const DistortionSpec& spec,
                              const CodecRegistry& registry);

struct DistortionRanges {
  double crop_min = 0.1, crop_max = 0.7;
  double snr_min_db = 15.0, snr_max_db = 40.0;
  std::vector<int> intermediate_rates = {8000, 12000};
  double cutoff_min_hz = 3000.0, cutoff_max_hz = 7000.0;
  std::vector<int> requantize_bits = {8, 10, 12};
  double pitch_min_semitones = 1.0, pitch_max_semitones = 4.0;
};

void to_json(nlohmann::json& j, const DistortionRanges& r);
void from_json(const nlohmann::json& j, DistortionRanges& r);

// Uniform over the kinds of the class, parameters uniform over the ranges.
// Benign: crop, gaussian_noise, resample_chain, lowpass_filter, requantize,
// identity. Malicious: pitch_shift with |s| in [pitch_min, pitch_max] and a
// random sign.
DistortionSpec sample_distortion(DistortionClass cls, uint64_t seed,
                                 const DistortionRanges& ranges = {});

}  // namespace semimark

#endif  // SEMIMARK_DISTORTIONS_HPP
