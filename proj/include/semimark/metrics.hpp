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


#ifndef SEMIMARK_METRICS_HPP
#define SEMIMARK_METRICS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "semimark/dsp.hpp"

namespace semimark {

// Identical signals report this instead of +inf.
inline constexpr double kSnrCapDb = 120.0;

// 10 log10(sum ref^2 / sum (ref - test)^2), capped at kSnrCapDb.
// Throws InvalidInput on length (or rate) mismatch and all-zero ref.
double snr_db(const torch::Tensor& ref, const torch::Tensor& test);
double snr_db(const dsp::Waveform& ref, const dsp::Waveform& test);
// Row-wise SNR of [B, N] batches.
std::vector<double> snr_db_batch(const torch::Tensor& ref, const torch::Tensor& test);

struct AdapterScore {
  enum class Status { kOk, kUnavailable };
  Status status = Status::kUnavailable;
  double value = 0.0;

  bool ok() const { return status == Status::kOk; }
  static AdapterScore unavailable() { return {}; }
  static AdapterScore of(double v) { return {Status::kOk, v}; }
};

// External scorer: argv template with {ref}, {test} (16-bit WAV paths) and
// {rate}; the score is the last number printed on stdout.
struct MetricAdapter {
  std::vector<std::string> command;
};

class AdapterRegistry {
 public:
  AdapterRegistry() = default;
  static AdapterRegistry from_json(const nlohmann::json& j);

  void add(const std::string& name, MetricAdapter adapter);
  bool has(const std::string& name) const { return adapters_.count(name) != 0; }
  // Unavailable when `name` is not registered. Tool failures (non-zero exit,
  // unparsable output) throw EnvironmentError carrying the tool's stderr.
  AdapterScore score(const std::string& name, const dsp::Waveform& ref,
                     const dsp::Waveform& test) const;

 private:
  std::map<std::string, MetricAdapter> adapters_;
};

// Wideband PESQ in [-0.5, 4.64] via the "pesq" adapter.
AdapterScore pesq_adapter(const AdapterRegistry& registry, const dsp::Waveform& ref,
                          const dsp::Waveform& test);
// Speaker-embedding cosine similarity in [-1, 1] via the "secs" adapter.
AdapterScore secs_adapter(const AdapterRegistry& registry, const dsp::Waveform& ref,
                          const dsp::Waveform& test);

struct MetricReport {
  double snr_db = 0.0;
  std::optional<double> pesq;
  std::optional<double> secs;
  double acc = 0.0;
  int n_items = 0;
};

// Averages per-item values. PESQ/SECS are reported only when every item has
// a score.
class MetricAccumulator {
 public:
  void add(double acc, std::optional<double> snr_db = std::nullopt,
           AdapterScore pesq = {}, AdapterScore secs = {});
  MetricReport report() const;

 private:
  std::vector<double> acc_, snr_, pesq_, secs_;
  int missing_pesq_ = 0;
  int missing_secs_ = 0;
};

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

// Wilson score interval for a binomial proportion (95% by default).
Interval wilson_interval(int64_t successes, int64_t trials, double z = 1.959963984540054);

}  // namespace semimark

#endif  // SEMIMARK_METRICS_HPP
