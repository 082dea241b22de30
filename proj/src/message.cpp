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


#include "semimark/message.hpp"

#include <random>

#include "semimark/errors.hpp"
#include "semimark/seeding.hpp"

namespace semimark {

WatermarkMessage::WatermarkMessage(std::vector<uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_)
    if (b > 1) throw InvalidInput("message bits must be 0 or 1");
}

WatermarkMessage WatermarkMessage::complement() const {
  std::vector<uint8_t> out(bits_.size());
  for (size_t i = 0; i < bits_.size(); ++i) out[i] = static_cast<uint8_t>(1 - bits_[i]);
  return WatermarkMessage(std::move(out));
}

torch::Tensor WatermarkMessage::to_tensor(torch::ScalarType dtype) const {
  std::vector<float> v(bits_.begin(), bits_.end());
  return torch::tensor(v, torch::kFloat32).to(dtype);
}

SoftMessage::SoftMessage(std::vector<double> probs) : probs_(std::move(probs)) {
  for (double p : probs_)
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("soft message entries must lie in [0, 1]");
}

SoftMessage SoftMessage::from_tensor(const torch::Tensor& probs) {
  auto t = probs.detach().to(torch::kFloat64).contiguous().view(-1);
  return SoftMessage({t.data_ptr<double>(), t.data_ptr<double>() + t.numel()});
}

SoftMessage SoftMessage::from_bits(const WatermarkMessage& m) {
  return SoftMessage(std::vector<double>(m.bits().begin(), m.bits().end()));
}

WatermarkMessage harden(const SoftMessage& m) {
  std::vector<uint8_t> bits;
  bits.reserve(m.probs().size());
  for (double p : m.probs()) bits.push_back(p >= 0.5 ? 1 : 0);
  return WatermarkMessage(std::move(bits));
}

torch::Tensor harden(const torch::Tensor& probs) { return (probs >= 0.5).to(probs.scalar_type()); }

double acc(const WatermarkMessage& truth, const WatermarkMessage& decoded) {
  if (truth.size() != decoded.size())
    throw InvalidInput("message lengths differ: " + std::to_string(truth.size()) + " vs " +
                       std::to_string(decoded.size()));
  if (truth.size() == 0) throw InvalidInput("empty messages");
  int same = 0;
  for (int i = 0; i < truth.size(); ++i) same += truth[i] == decoded[i];
  return static_cast<double>(same) / truth.size();
}

double acc(const torch::Tensor& truth, const torch::Tensor& decoded) {
  if (truth.sizes() != decoded.sizes()) throw InvalidInput("message batch shapes differ");
  return (truth == decoded).to(torch::kFloat64).mean().item<double>();
}

WatermarkMessage random_message(int length, uint64_t seed) {
  if (length < 1) throw InvalidInput("message length must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<uint8_t> bits(static_cast<size_t>(length));
  for (auto& b : bits) b = static_cast<uint8_t>(rng() >> 63);
  return WatermarkMessage(std::move(bits));
}

torch::Tensor random_messages(int count, int length, uint64_t seed) {
  auto out = torch::empty({count, length}, torch::kFloat32);
  for (int i = 0; i < count; ++i)
    out[i] = random_message(length, derive_seed(seed, "message", static_cast<uint64_t>(i)))
                 .to_tensor();
  return out;
}

std::string to_hex(const WatermarkMessage& m) {
  if (m.size() % 4 != 0) throw InvalidInput("hex encoding needs a multiple of 4 bits");
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (int i = 0; i < m.size(); i += 4)
    out.push_back(kDigits[(m[i] << 3) | (m[i + 1] << 2) | (m[i + 2] << 1) | m[i + 3]]);
  return out;
}

WatermarkMessage from_hex(std::string_view hex, int bits) {
  if (static_cast<int>(hex.size()) * 4 != bits)
    throw InvalidInput("expected " + std::to_string(bits / 4) + " hex digits, got \"" +
                       std::string(hex) + "\"");
  std::vector<uint8_t> out;
  for (char c : hex) {
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw InvalidInput("invalid hex digit '" + std::string(1, c) + "' in \"" + std::string(hex) + "\"");
    for (int s = 3; s >= 0; --s) out.push_back(static_cast<uint8_t>((v >> s) & 1));
  }
  return WatermarkMessage(std::move(out));
}

}  // namespace semimark
