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


#ifndef SEMIMARK_MESSAGE_HPP
#define SEMIMARK_MESSAGE_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

namespace semimark {

inline constexpr int kDefaultMessageBits = 16;

// Hard payload, one {0,1} entry per bit.
class WatermarkMessage {
 public:
  WatermarkMessage() = default;
  explicit WatermarkMessage(std::vector<uint8_t> bits);

  int size() const { return static_cast<int>(bits_.size()); }
  const std::vector<uint8_t>& bits() const { return bits_; }
  uint8_t operator[](int i) const { return bits_[static_cast<size_t>(i)]; }
  WatermarkMessage complement() const;

  // 1-D tensor of 0/1 values (for losses).
  torch::Tensor to_tensor(torch::ScalarType dtype = torch::kFloat32) const;

  bool operator==(const WatermarkMessage&) const = default;

 private:
  std::vector<uint8_t> bits_;
};

// Decoder output before thresholding; every entry in [0, 1].
class SoftMessage {
 public:
  SoftMessage() = default;
  explicit SoftMessage(std::vector<double> probs);
  static SoftMessage from_tensor(const torch::Tensor& probs);
  static SoftMessage from_bits(const WatermarkMessage& m);

  int size() const { return static_cast<int>(probs_.size()); }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// bit i = 1 iff probs[i] >= 0.5.
WatermarkMessage harden(const SoftMessage& m);
// Batched variant: [B, L] probabilities -> [B, L] {0,1} of the same dtype.
torch::Tensor harden(const torch::Tensor& probs);

// Fraction of matching positions. Throws InvalidInput on length mismatch.
double acc(const WatermarkMessage& truth, const WatermarkMessage& decoded);
// Mean per-row accuracy of two [B, L] {0,1} tensors.
double acc(const torch::Tensor& truth, const torch::Tensor& decoded);

WatermarkMessage random_message(int length, uint64_t seed);
// [count, length] float {0,1} tensor, row i drawn from random_message(length, seed_i)
// with seed_i derived from (seed, i).
torch::Tensor random_messages(int count, int length, uint64_t seed);

// Big-endian hex: bit 0 is the most significant bit of the first digit.
// Length must be a multiple of 4.
std::string to_hex(const WatermarkMessage& m);
WatermarkMessage from_hex(std::string_view hex, int bits = kDefaultMessageBits);

}  // namespace semimark

#endif  // SEMIMARK_MESSAGE_HPP
