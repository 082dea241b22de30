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


#ifndef SEMIMARK_CORPUS_HPP
#define SEMIMARK_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "semimark/dsp.hpp"

namespace semimark {

enum class Split { kTrain, kVal, kTest };

std::string split_name(Split s);
Split parse_split(const std::string& s);

// Fractions of files assigned to train/val/test; must sum to 1.
struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct CorpusEntry {
  std::string path;
  double duration_s = 0.0;
  int sample_rate = 0;
  Split split = Split::kTrain;
  // Stored at a different rate than the index target; resampled on load.
  bool resample_on_load = false;
};

struct RejectedFile {
  std::string path;
  std::string reason;
};

struct CorpusIndex {
  std::string root;
  int target_rate = dsp::kDefaultSampleRate;
  uint64_t seed = 0;
  std::vector<CorpusEntry> entries;
  std::vector<RejectedFile> rejects;

  std::vector<CorpusEntry> in_split(Split s) const;
  double total_seconds(Split s) const;
};

void to_json(nlohmann::json& j, const CorpusIndex& index);
void from_json(const nlohmann::json& j, CorpusIndex& index);

// Recursively indexes *.wav under root_dir (any layout, LibriSpeech
// speaker/chapter trees included). Files failing the format checks are
// listed in `rejects`. The split is a seeded shuffle of the sorted path list,
// so it depends only on (file set, split_spec, seed). Throws InvalidInput
// when the directory is missing or holds no readable WAV.
CorpusIndex build_index(const std::filesystem::path& root_dir, const SplitSpec& split_spec,
                        uint64_t seed, int target_rate = dsp::kDefaultSampleRate);

void save_index(const std::filesystem::path& path, const CorpusIndex& index);
CorpusIndex load_index(const std::filesystem::path& path);

// Fixed-length clips drawn uniformly over (file, offset) among the entries
// of one split long enough to hold a clip. Draw i is a pure function of
// (seed, i). Decoded files are cached in memory; safe to call concurrently.
class ClipSampler {
 public:
  ClipSampler(const CorpusIndex& index, Split split, double clip_seconds, uint64_t seed);

  int64_t clip_samples() const { return clip_samples_; }
  int sample_rate() const { return rate_; }
  size_t eligible_files() const { return files_.size(); }

  // Index into the eligible file list chosen by draw i (exposed for tests).
  size_t file_for_draw(uint64_t i) const;
  dsp::Waveform clip(uint64_t i);
  // Sequential stream view: next() returns clip(0), clip(1), ...
  dsp::Waveform next() { return clip(cursor_++); }
  // [count, clip_samples] float tensor of draws first..first+count-1.
  torch::Tensor batch(uint64_t first, int count);

 private:
  const torch::Tensor& load(size_t file);

  std::vector<CorpusEntry> files_;
  int rate_;
  int64_t clip_samples_;
  uint64_t seed_;
  uint64_t cursor_ = 0;
  std::mutex mutex_;
  std::map<size_t, torch::Tensor> cache_;
};

// Writes a corpus of speech-like test signals: voiced segments (glottal pulse
// train with drifting pitch through three formant resonators), unvoiced
// fricative noise and pauses. Stand-in material when no speech corpus is at
// hand; returns the written paths.
std::vector<std::filesystem::path> synthesize_speech_corpus(const std::filesystem::path& dir,
                                                            double minutes, uint64_t seed,
                                                            double utterance_seconds = 4.0,
                                                            int sample_rate = dsp::kDefaultSampleRate);
std::vector<float> synthesize_utterance(uint64_t seed, double seconds, int sample_rate);

}  // namespace semimark

#endif  // SEMIMARK_CORPUS_HPP
