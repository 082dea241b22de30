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


#ifndef SEMIMARK_SEEDING_HPP
#define SEMIMARK_SEEDING_HPP

#include <cstdint>
#include <string_view>

namespace semimark {

// splitmix64 finaliser.
constexpr uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Named, indexed sub-streams of one master seed. Each (stream, index) pair
// yields an independent seed, so any draw can be reproduced without
// replaying earlier ones (data order, messages and distortions at step k of
// a resumed run match the uninterrupted run).
constexpr uint64_t derive_seed(uint64_t master, std::string_view stream,
                               uint64_t index = 0) {
  return mix64(mix64(master ^ fnv1a(stream)) + index);
}

}  // namespace semimark

#endif  // SEMIMARK_SEEDING_HPP
