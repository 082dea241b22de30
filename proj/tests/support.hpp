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


#ifndef SEMIMARK_TESTS_SUPPORT_HPP
#define SEMIMARK_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace testing {

inline std::vector<double> sine(double freq, int rate, int64_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] = amp * std::sin(2.0 * std::numbers::pi * freq * i / rate + phase);
  return out;
}

inline torch::Tensor tensor_of(const std::vector<double>& v, torch::ScalarType dtype = torch::kFloat64) {
  return torch::tensor(v, torch::kFloat64).to(dtype);
}

inline std::vector<double> vec_of(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat64).contiguous();
  return std::vector<double>(c.data_ptr<double>(), c.data_ptr<double>() + c.numel());
}

inline std::vector<double> gaussian(int64_t n, uint64_t seed, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> out(static_cast<size_t>(n));
  for (auto& v : out) v = g(rng);
  return out;
}

// Raw RIFF bytes with arbitrary header fields (for rejection tests).
inline void write_raw_wav(const std::filesystem::path& path, int format, int channels, int rate, int bits,
                          const std::vector<int16_t>& samples, int64_t declared_data_bytes = -1) {
  std::vector<unsigned char> b;
  auto put = [&](const char* tag) { b.insert(b.end(), tag, tag + 4); };
  auto u16 = [&](uint32_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
  };
  auto u32 = [&](uint32_t v) {
    for (int s = 0; s < 32; s += 8) b.push_back((v >> s) & 0xff);
  };
  const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  put("RIFF");
  u32(36 + data_bytes);
  put("WAVE");
  put("fmt ");
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(channels * bits / 8);
  u16(bits);
  put("data");
  u32(declared_data_bytes < 0 ? data_bytes : static_cast<uint32_t>(declared_data_bytes));
  for (auto s : samples) u16(static_cast<uint16_t>(s));
  std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(b.data()),
                                              static_cast<std::streamsize>(b.size()));
}

// Scratch directory removed when the test ends.
class Scratch {
 public:
  explicit Scratch(const std::string& name) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("semimark_test_" + name + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Executable shell script (for fake external tools).
inline std::filesystem::path write_script(const std::filesystem::path& path, const std::string& body) {
  std::ofstream(path) << "#!/bin/sh\n" << body << "\n";
  std::filesystem::permissions(path, std::filesystem::perms::owner_all);
  return path;
}

}  // namespace testing

#endif  // SEMIMARK_TESTS_SUPPORT_HPP
