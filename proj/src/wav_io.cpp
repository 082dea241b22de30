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


#include "semimark/wav_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "semimark/errors.hpp"

namespace semimark::dsp {

namespace {

uint16_t le16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t le32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

struct Parsed {
  WavInfo info;
  std::vector<unsigned char> bytes;
  size_t data_offset = 0;
  size_t data_size = 0;
};

Parsed parse(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open WAV file " + path.string());
  Parsed p;
  p.bytes.assign(std::istreambuf_iterator<char>(in), {});
  const auto& b = p.bytes;
  const std::string where = path.string() + ": ";
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
      std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    throw InvalidInput(where + "not a RIFF/WAVE file");

  bool have_fmt = false;
  int format = 0;
  size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const uint32_t size = le32(b.data() + pos + 4);
    const size_t body = pos + 8;
    if (std::memcmp(b.data() + pos, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > b.size()) throw InvalidInput(where + "truncated fmt chunk");
      format = le16(b.data() + body);
      p.info.channels = le16(b.data() + body + 2);
      p.info.sample_rate = static_cast<int>(le32(b.data() + body + 4));
      p.info.bits_per_sample = le16(b.data() + body + 14);
      if (format == 0xFFFE && size >= 40 && body + 26 <= b.size())
        format = le16(b.data() + body + 24);  // extensible: sub-format GUID head
      have_fmt = true;
    } else if (std::memcmp(b.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw InvalidInput(where + "data chunk precedes fmt chunk");
      // 0xFFFFFFFF is the placeholder streaming writers leave behind.
      if (size > b.size() - body && size != 0xFFFFFFFFu)
        throw InvalidInput(where + "truncated data chunk (" + std::to_string(b.size() - body) + " of " +
                           std::to_string(size) + " bytes)");
      p.data_offset = body;
      p.data_size = std::min<size_t>(size, b.size() - body);
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw InvalidInput(where + "missing fmt chunk");
  if (p.data_offset == 0) throw InvalidInput(where + "missing data chunk");
  if (format != 1)
    throw InvalidInput(where + "unsupported encoding (format tag " +
                       std::to_string(format) + "); only integer PCM is accepted");
  if (p.info.channels != 1)
    throw InvalidInput(where + "expected mono audio, found " +
                       std::to_string(p.info.channels) + " channels");
  if (p.info.bits_per_sample != 16)
    throw InvalidInput(where + "expected 16-bit samples, found " +
                       std::to_string(p.info.bits_per_sample));
  if (p.info.sample_rate <= 0) throw InvalidInput(where + "invalid sample rate");
  p.info.frames = static_cast<int64_t>(p.data_size / 2);
  return p;
}

}  // namespace

WavInfo probe_wav(const std::filesystem::path& path) { return parse(path).info; }

Waveform read_wav(const std::filesystem::path& path) {
  auto p = parse(path);
  std::vector<float> samples(static_cast<size_t>(p.info.frames));
  const unsigned char* d = p.bytes.data() + p.data_offset;
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto v = static_cast<int16_t>(le16(d + 2 * i));
    samples[i] = static_cast<float>(v) / 32768.0f;
  }
  return make_waveform(samples, p.info.sample_rate);
}

void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
               int sample_rate) {
  if (sample_rate <= 0) throw InvalidInput("sample_rate must be positive");
  const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  auto put = [&](const char* tag) { out.insert(out.end(), tag, tag + 4); };
  auto u16 = [&](uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>(v >> 8));
  };
  auto u32 = [&](uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<unsigned char>((v >> s) & 0xff));
  };
  put("RIFF");
  u32(36 + data_bytes);
  put("WAVE");
  put("fmt ");
  u32(16);
  u16(1);
  u16(1);
  u32(static_cast<uint32_t>(sample_rate));
  u32(static_cast<uint32_t>(sample_rate) * 2);
  u16(2);
  u16(16);
  put("data");
  u32(data_bytes);
  for (float s : samples) {
    const long q = std::lround(static_cast<double>(s) * 32768.0);
    u16(static_cast<uint16_t>(static_cast<int16_t>(std::clamp<long>(q, -32768, 32767))));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InvalidInput("cannot write WAV file " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw InvalidInput("short write to " + path.string());
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  write_wav(path, to_vector(wave.samples), wave.sample_rate);
}

}  // namespace semimark::dsp
