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


#include "semimark/metrics.hpp"

#include <cmath>
#include <numeric>
#include <regex>

#include "semimark/errors.hpp"
#include "semimark/process.hpp"
#include "semimark/wav_io.hpp"

namespace semimark {

double snr_db(const torch::Tensor& ref, const torch::Tensor& test) {
  if (ref.sizes() != test.sizes())
    throw InvalidInput("snr: signals differ in length (" + std::to_string(ref.numel()) + " vs " +
                       std::to_string(test.numel()) + ")");
  auto r = ref.detach().to(torch::kFloat64);
  const double signal = r.pow(2).sum().item<double>();
  if (signal == 0.0) throw InvalidInput("snr: reference signal is all zeros");
  const double noise = (r - test.detach().to(torch::kFloat64)).pow(2).sum().item<double>();
  if (noise == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(signal / noise));
}

double snr_db(const dsp::Waveform& ref, const dsp::Waveform& test) {
  if (ref.sample_rate != test.sample_rate) throw InvalidInput("snr: sample rates differ");
  return snr_db(ref.samples, test.samples);
}

std::vector<double> snr_db_batch(const torch::Tensor& ref, const torch::Tensor& test) {
  if (ref.sizes() != test.sizes() || ref.dim() != 2) throw InvalidInput("snr: expected equal [B, N] batches");
  std::vector<double> out;
  for (int64_t b = 0; b < ref.size(0); ++b) out.push_back(snr_db(ref[b], test[b]));
  return out;
}

AdapterRegistry AdapterRegistry::from_json(const nlohmann::json& j) {
  AdapterRegistry r;
  if (j.is_null()) return r;
  for (const auto& [name, entry] : j.items())
    r.add(name, MetricAdapter{entry.at("command").get<std::vector<std::string>>()});
  return r;
}

void AdapterRegistry::add(const std::string& name, MetricAdapter adapter) {
  if (adapter.command.empty()) throw ConfigError("adapter \"" + name + "\" has an empty command");
  adapters_[name] = std::move(adapter);
}

AdapterScore AdapterRegistry::score(const std::string& name, const dsp::Waveform& ref,
                                    const dsp::Waveform& test) const {
  const auto it = adapters_.find(name);
  if (it == adapters_.end()) return AdapterScore::unavailable();
  TempDir work;
  const auto ref_path = work.path() / "ref.wav";
  const auto test_path = work.path() / "test.wav";
  dsp::write_wav(ref_path, ref);
  dsp::write_wav(test_path, test);
  const auto argv = expand_template(it->second.command, {{"ref", ref_path.string()},
                                                         {"test", test_path.string()},
                                                         {"rate", std::to_string(ref.sample_rate)}});
  const auto r = run_process(argv);
  if (r.exit_code != 0)
    throw EnvironmentError("adapter \"" + name + "\" exited with status " +
                           std::to_string(r.exit_code) + ": " + r.stderr_text);
  static const std::regex number(R"([-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)");
  std::optional<double> last;
  for (auto m = std::sregex_iterator(r.stdout_text.begin(), r.stdout_text.end(), number);
       m != std::sregex_iterator(); ++m)
    last = std::stod(m->str());
  if (!last)
    throw EnvironmentError("adapter \"" + name + "\" printed no score; stderr: " + r.stderr_text);
  return AdapterScore::of(*last);
}

namespace {

AdapterScore checked(AdapterScore s, double lo, double hi, const char* what) {
  if (s.ok() && !(s.value >= lo && s.value <= hi))
    throw EnvironmentError(std::string(what) + " adapter returned out-of-range score " +
                           std::to_string(s.value));
  return s;
}

}  // namespace

AdapterScore pesq_adapter(const AdapterRegistry& registry, const dsp::Waveform& ref,
                          const dsp::Waveform& test) {
  return checked(registry.score("pesq", ref, test), -0.5, 4.64, "pesq");
}

AdapterScore secs_adapter(const AdapterRegistry& registry, const dsp::Waveform& ref,
                          const dsp::Waveform& test) {
  return checked(registry.score("secs", ref, test), -1.0, 1.0, "secs");
}

void MetricAccumulator::add(double acc, std::optional<double> snr, AdapterScore pesq,
                            AdapterScore secs) {
  acc_.push_back(acc);
  if (snr) snr_.push_back(*snr);
  if (pesq.ok()) pesq_.push_back(pesq.value);
  else ++missing_pesq_;
  if (secs.ok()) secs_.push_back(secs.value);
  else ++missing_secs_;
}

MetricReport MetricAccumulator::report() const {
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  MetricReport r;
  r.n_items = static_cast<int>(acc_.size());
  r.acc = mean(acc_);
  r.snr_db = mean(snr_);
  if (!pesq_.empty() && missing_pesq_ == 0) r.pesq = mean(pesq_);
  if (!secs_.empty() && missing_secs_ == 0) r.secs = mean(secs_);
  return r;
}

Interval wilson_interval(int64_t successes, int64_t trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

}  // namespace semimark
