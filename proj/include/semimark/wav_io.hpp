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


#ifndef SEMIMARK_WAV_IO_HPP
#define SEMIMARK_WAV_IO_HPP

#include <filesystem>
#include <vector>

#include "semimark/dsp.hpp"

namespace semimark::dsp {

struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  int64_t frames = 0;
};

// Reads 16-bit signed little-endian PCM mono WAV; samples are value / 32768.
// Anything else (multi-channel, float, 24-bit, compressed, truncated) is
// rejected with InvalidInput naming the offending property.
Waveform read_wav(const std::filesystem::path& path);
WavInfo probe_wav(const std::filesystem::path& path);

// Writes 16-bit PCM mono. Samples are clamped to [-1, 32767/32768].
void write_wav(const std::filesystem::path& path, const Waveform& wave);
void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
               int sample_rate);

}  // namespace semimark::dsp

#endif  // SEMIMARK_WAV_IO_HPP
