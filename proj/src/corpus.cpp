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


#include "semimark/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "semimark/errors.hpp"
#include "semimark/seeding.hpp"
#include "semimark/wav_io.hpp"

namespace semimark {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw InvalidInput("unknown split \"" + s + "\"");
}

std::vector<CorpusEntry> CorpusIndex::in_split(Split s) const {
  std::vector<CorpusEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

double CorpusIndex::total_seconds(Split s) const {
  double t = 0.0;
  for (const auto& e : entries)
    if (e.split == s) t += e.duration_s;
  return t;
}

void to_json(json& j, const CorpusIndex& index) {
  j = json{{"root", index.root}, {"target_rate", index.target_rate}, {"seed", index.seed}};
  j["entries"] = json::array();
  for (const auto& e : index.entries)
    j["entries"].push_back({{"path", e.path},
                            {"duration_s", e.duration_s},
                            {"sample_rate", e.sample_rate},
                            {"split", split_name(e.split)},
                            {"resample_on_load", e.resample_on_load}});
  j["rejects"] = json::array();
  for (const auto& r : index.rejects) j["rejects"].push_back({{"path", r.path}, {"reason", r.reason}});
}

void from_json(const json& j, CorpusIndex& index) {
  index.root = j.value("root", std::string());
  index.target_rate = j.value("target_rate", dsp::kDefaultSampleRate);
  index.seed = j.value("seed", uint64_t{0});
  index.entries.clear();
  for (const auto& e : j.at("entries"))
    index.entries.push_back({e.at("path").get<std::string>(), e.at("duration_s").get<double>(),
                             e.at("sample_rate").get<int>(),
                             parse_split(e.at("split").get<std::string>()),
                             e.value("resample_on_load", false)});
  index.rejects.clear();
  if (j.contains("rejects"))
    for (const auto& r : j.at("rejects"))
      index.rejects.push_back({r.at("path").get<std::string>(), r.at("reason").get<std::string>()});
}

CorpusIndex build_index(const fs::path& root_dir, const SplitSpec& split_spec, uint64_t seed,
                        int target_rate) {
  if (!fs::is_directory(root_dir))
    throw InvalidInput("corpus directory does not exist: " + root_dir.string());
  const double total = split_spec.train + split_spec.val + split_spec.test;
  if (split_spec.train < 0 || split_spec.val < 0 || split_spec.test < 0 || std::abs(total - 1.0) > 1e-9)
    throw InvalidInput("split fractions must be non-negative and sum to 1");

  std::vector<fs::path> paths;
  for (const auto& e : fs::recursive_directory_iterator(root_dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());

  CorpusIndex index;
  index.root = root_dir.string();
  index.target_rate = target_rate;
  index.seed = seed;
  std::vector<CorpusEntry> good;
  for (const auto& p : paths) {
    try {
      const auto info = dsp::probe_wav(p);
      if (info.frames == 0) throw InvalidInput("no samples");
      good.push_back({p.string(), static_cast<double>(info.frames) / info.sample_rate, info.sample_rate,
                      Split::kTrain, info.sample_rate != target_rate});
    } catch (const InvalidInput& e) {
      index.rejects.push_back({p.string(), e.what()});
    }
  }
  if (good.empty())
    throw InvalidInput("no readable WAV files under " + root_dir.string() + " (" +
                       std::to_string(index.rejects.size()) + " rejected)");

  std::vector<size_t> order(good.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(derive_seed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n = static_cast<double>(good.size());
  const auto n_train = static_cast<size_t>(std::llround(n * split_spec.train));
  const auto n_val = std::min(good.size() - n_train, static_cast<size_t>(std::llround(n * split_spec.val)));
  for (size_t rank = 0; rank < order.size(); ++rank) {
    auto& e = good[order[rank]];
    e.split = rank < n_train ? Split::kTrain : rank < n_train + n_val ? Split::kVal : Split::kTest;
  }
  index.entries = std::move(good);
  return index;
}

void save_index(const fs::path& path, const CorpusIndex& index) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write index " + path.string());
  out << json(index).dump(2) << "\n";
}

CorpusIndex load_index(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read index " + path.string());
  return json::parse(in).get<CorpusIndex>();
}

// ---------------------------------------------------------------------------

ClipSampler::ClipSampler(const CorpusIndex& index, Split split, double clip_seconds, uint64_t seed)
    : rate_(index.target_rate),
      clip_samples_(static_cast<int64_t>(std::llround(clip_seconds * index.target_rate))),
      seed_(seed) {
  if (clip_samples_ < 1) throw InvalidInput("clip length must be positive");
  for (const auto& e : index.in_split(split))
    if (static_cast<int64_t>(std::floor(e.duration_s * rate_ + 1e-6)) >= clip_samples_) files_.push_back(e);
  if (files_.empty())
    throw InvalidInput("no " + split_name(split) + " entry is at least " + std::to_string(clip_seconds) +
                       " s long");
}

size_t ClipSampler::file_for_draw(uint64_t i) const {
  std::mt19937_64 rng(derive_seed(seed_, "clip", i));
  return std::uniform_int_distribution<size_t>(0, files_.size() - 1)(rng);
}

const torch::Tensor& ClipSampler::load(size_t file) {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(file);
  if (it != cache_.end()) return it->second;
  auto wave = dsp::read_wav(files_[file].path);
  if (wave.sample_rate != rate_) wave = dsp::resample(wave, rate_);
  return cache_.emplace(file, wave.samples.contiguous()).first->second;
}

dsp::Waveform ClipSampler::clip(uint64_t i) {
  std::mt19937_64 rng(derive_seed(seed_, "clip", i));
  const size_t file = std::uniform_int_distribution<size_t>(0, files_.size() - 1)(rng);
  const auto& audio = load(file);
  const int64_t span = std::max<int64_t>(0, audio.size(0) - clip_samples_);
  const int64_t offset = std::uniform_int_distribution<int64_t>(0, span)(rng);
  auto samples = audio.narrow(0, offset, std::min(clip_samples_, audio.size(0))).clone();
  if (samples.size(0) < clip_samples_)
    samples = torch::nn::functional::pad(
        samples, torch::nn::functional::PadFuncOptions({0, clip_samples_ - samples.size(0)}));
  return {samples, rate_};
}

torch::Tensor ClipSampler::batch(uint64_t first, int count) {
  std::vector<torch::Tensor> rows;
  rows.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) rows.push_back(clip(first + static_cast<uint64_t>(k)).samples);
  return torch::stack(rows);
}

// ---------------------------------------------------------------------------
// Speech-like synthesis

namespace {

// Two-pole resonator with unity-ish peak gain.
void resonate(const std::vector<double>& in, std::vector<double>& out, double freq, double bandwidth,
              double weight, int rate) {
  const double r = std::exp(-std::numbers::pi * bandwidth / rate);
  const double theta = 2.0 * std::numbers::pi * freq / rate;
  const double a1 = -2.0 * r * std::cos(theta);
  const double a2 = r * r;
  const double g = 1.0 - r;
  double y1 = 0.0, y2 = 0.0;
  for (size_t i = 0; i < in.size(); ++i) {
    const double y = g * in[i] - a1 * y1 - a2 * y2;
    y2 = y1;
    y1 = y;
    out[i] += weight * y;
  }
}

}  // namespace

std::vector<float> synthesize_utterance(uint64_t seed, double seconds, int rate) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto n = static_cast<size_t>(std::llround(seconds * rate));
  std::vector<double> out(n, 0.0);
  const double f0 = uni(90.0, 220.0);
  size_t pos = 0;
  while (pos < n) {
    const size_t seg = std::min(n - pos, static_cast<size_t>(uni(0.06, 0.2) * rate));
    const int kind = std::uniform_int_distribution<int>(0, 4)(rng);  // 0-2 voiced, 3 fricative, 4 pause
    if (kind == 4 || seg == 0) {
      pos += seg;
      continue;
    }
    std::vector<double> src(seg, 0.0);
    std::vector<double> y(seg, 0.0);
    if (kind <= 2) {
      const double vib_rate = uni(1.0, 4.0);
      const double vib_phase = uni(0.0, 6.0);
      double phase = 0.0;
      for (size_t i = 0; i < seg; ++i) {
        const double f = f0 * (1.0 + 0.1 * std::sin(2.0 * std::numbers::pi * vib_rate * i / rate + vib_phase));
        const double next = phase + f / rate;
        src[i] = (std::floor(next) > std::floor(phase) ? 1.0 : 0.0) + 0.02 * gauss(rng);
        phase = next;
      }
      const double formants[3] = {uni(300.0, 850.0), uni(900.0, 2300.0), uni(2400.0, 3200.0)};
      for (int k = 0; k < 3; ++k) resonate(src, y, formants[k], 80.0 + 40.0 * k, 1.0 / (k + 1), rate);
    } else {
      for (auto& s : src) s = gauss(rng);
      resonate(src, y, uni(3000.0, 6000.0), 1500.0, 1.0, rate);
    }
    double energy = 0.0;
    for (size_t i = 0; i < seg; ++i) {
      y[i] *= std::sqrt(std::sin(std::numbers::pi * static_cast<double>(i) / seg));
      energy += y[i] * y[i];
    }
    const double level = uni(0.05, 0.2) / (std::sqrt(energy / seg) + 1e-9);
    for (size_t i = 0; i < seg; ++i) out[pos + i] = y[i] * level;
    pos += seg;
  }
  double peak = 1e-9;
  for (double v : out) peak = std::max(peak, std::abs(v));
  const double target = uni(0.3, 0.9);
  std::vector<float> result(n);
  for (size_t i = 0; i < n; ++i) result[i] = static_cast<float>(out[i] / peak * target);
  return result;
}

std::vector<fs::path> synthesize_speech_corpus(const fs::path& dir, double minutes, uint64_t seed,
                                               double utterance_seconds, int sample_rate) {
  if (!(minutes > 0.0) || !(utterance_seconds > 0.0)) throw InvalidInput("corpus length must be positive");
  fs::create_directories(dir);
  const auto count = static_cast<size_t>(std::ceil(minutes * 60.0 / utterance_seconds));
  std::vector<fs::path> written;
  for (size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "utt_%05zu.wav", i);
    const auto path = dir / name;
    dsp::write_wav(path, synthesize_utterance(derive_seed(seed, "utterance", i), utterance_seconds, sample_rate),
                   sample_rate);
    written.push_back(path);
  }
  return written;
}

}  // namespace semimark
