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

#ifndef SEMIMARK_ERRORS_HPP
#define SEMIMARK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace semimark {

// Caller supplied data that violates an operation's precondition
// (too-short audio, mismatched lengths, malformed WAV, bad hex...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Parameters that cannot work together (non-reconstructing STFT setup,
// checkpoint/config mismatch, malformed config file).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A component was used outside the contexts it supports, e.g. a codec
// distortion on a differentiable training path.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A required external tool (codec, PESQ, speaker encoder) is missing or
// failed to run.
class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace semimark

#endif  // SEMIMARK_ERRORS_HPP
