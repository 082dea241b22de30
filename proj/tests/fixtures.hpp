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


#ifndef SEMIMARK_TESTS_FIXTURES_HPP
#define SEMIMARK_TESTS_FIXTURES_HPP

#include "semimark/model.hpp"
#include "semimark/training.hpp"

namespace testing {

// A few thousand parameters; fast enough for gradient checks in float64.
inline semimark::ModelConfig tiny_config() {
  semimark::ModelConfig c;
  c.frame.fft_size = 64;
  c.frame.hop = 16;
  c.message_bits = 4;
  c.message_embed_dim = 8;
  c.widths = {4, 4, 4, 4, 4};
  c.carrier_channels = 2;
  c.discriminator_channels = {2, 2, 2, 2};
  return c;
}

inline semimark::TrainConfig tiny_train_config() {
  semimark::TrainConfig t;
  t.batch_size = 2;
  t.clip_seconds = 0.05;
  t.steps = 4;
  t.seed = 5;
  t.checkpoint_every = 2;
  t.probe_every = 2;
  t.probe_batch = 2;
  return t;
}

}  // namespace testing

#endif  // SEMIMARK_TESTS_FIXTURES_HPP
