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


#ifndef SEMIMARK_MODEL_HPP
#define SEMIMARK_MODEL_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "semimark/dsp.hpp"
#include "semimark/message.hpp"

namespace semimark {

inline constexpr int kBlocksPerNet = 6;

// What the extractor's conv stack reads from the spectrogram band.
enum class ExtractorInput { kComplex, kLogMagnitude };

struct ModelConfig {
  int sample_rate = dsp::kDefaultSampleRate;
  dsp::FrameParams frame;
  int message_bits = kDefaultMessageBits;
  // Width of the dense message embedding and of the decoder's hidden layer.
  int message_embed_dim = 512;
  // Output channels of blocks 1..5 of every 6-block net; block 6 maps to the
  // net's own output (carrier channels, or 1 for embedders).
  std::vector<int> widths = {32, 32, 48, 48, 48};
  int carrier_channels = 32;
  int kernel = 3;
  double leaky_slope = 0.2;
  double gain_init = 0.1;
  // Upper bound the learnable perturbation gain is projected onto.
  double gain_max = 0.15;
  // Nets see (and perturb) only bins below this frequency; 0 means all bins.
  double band_limit_hz = 0.0;
  std::vector<int> discriminator_channels = {16, 16, 16, 16};
  bool discriminator_zero_init_head = false;
  // kComplex reads the real/imag planes; those move with any sub-hop shift of
  // the input. kLogMagnitude reads log1p(|S| / scale) only.
  ExtractorInput extractor_input = ExtractorInput::kLogMagnitude;

  // Number of frequency rows the nets operate on.
  int embed_bins() const;
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
namespace dsp {
void to_json(nlohmann::json& j, const FrameParams& p);
void from_json(const nlohmann::json& j, FrameParams& p);
}  // namespace dsp

struct SkipGatedBlockConfig {
  int in_channels = 1;
  int out_channels = 1;
  std::array<int, 2> kernel = {3, 3};
  std::array<int, 2> stride = {1, 1};
};

// out = skip(h) + conv_a(h) * sigmoid(conv_b(h)); skip is the identity when
// channel counts and strides allow it, a 1x1 convolution otherwise.
class SkipGatedBlockImpl : public torch::nn::Module {
 public:
  explicit SkipGatedBlockImpl(const SkipGatedBlockConfig& cfg);
  torch::Tensor forward(const torch::Tensor& h);

  const SkipGatedBlockConfig& config() const { return cfg_; }
  torch::nn::Conv2d conv_a{nullptr};
  torch::nn::Conv2d conv_b{nullptr};
  torch::nn::Conv2d skip{nullptr};

 private:
  SkipGatedBlockConfig cfg_;
};
TORCH_MODULE(SkipGatedBlock);

// Six skip gated blocks in sequence.
class ConvStackImpl : public torch::nn::Module {
 public:
  ConvStackImpl(int in_channels, const std::vector<int>& widths, int out_channels, int kernel);
  torch::Tensor forward(torch::Tensor h);
  torch::nn::ModuleList blocks;
};
TORCH_MODULE(ConvStack);

// Dense L -> D with LeakyReLU, then projected to one value per embedded bin.
class MessageEncoderImpl : public torch::nn::Module {
 public:
  MessageEncoderImpl(int bits, int embed_dim, int bins, double slope);
  // [B, L] -> [B, bins]
  torch::Tensor forward(const torch::Tensor& messages);
  torch::nn::Linear dense{nullptr};
  torch::nn::Linear to_bins{nullptr};

 private:
  double slope_;
};
TORCH_MODULE(MessageEncoder);

// Conv features from the band planes, mean-pooled over (valid) time, then two
// affine maps and a sigmoid.
class ExtractorImpl : public torch::nn::Module {
 public:
  explicit ExtractorImpl(const ModelConfig& cfg);
  // planes: [B, 2, bins, T] (complex) or [B, 1, bins, T] (log magnitude);
  // frame_mask: [B, T] of {0,1} or undefined.
  torch::Tensor forward(const torch::Tensor& planes, const torch::Tensor& frame_mask);
  ConvStack features{nullptr};
  torch::nn::Linear hidden{nullptr};
  torch::nn::Linear output{nullptr};
};
TORCH_MODULE(Extractor);

// Small strided conv classifier over the log-magnitude spectrogram.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const ModelConfig& cfg);
  // log-magnitude [B, 1, F, T] -> logits [B]
  torch::Tensor forward(const torch::Tensor& log_magnitude);
  torch::nn::Sequential body{nullptr};
  torch::nn::Linear head{nullptr};
};
TORCH_MODULE(Discriminator);

// Everything on the watermarking side of the system (encoders, message
// encoder, embedders, extractor) plus the perturbation gain.
class WatermarkerImpl : public torch::nn::Module {
 public:
  explicit WatermarkerImpl(const ModelConfig& cfg);
  ConvStack encoder_real{nullptr};
  ConvStack encoder_imag{nullptr};
  MessageEncoder message_encoder{nullptr};
  ConvStack embedder_real{nullptr};
  ConvStack embedder_imag{nullptr};
  Extractor extractor{nullptr};
  torch::Tensor gain;
};
TORCH_MODULE(Watermarker);

class ModelBundle {
 public:
  explicit ModelBundle(const ModelConfig& cfg, uint64_t seed = 0);

  const ModelConfig& config() const { return cfg_; }
  Watermarker& watermarker() { return watermarker_; }
  Discriminator& discriminator() { return discriminator_; }
  const Watermarker& watermarker() const { return watermarker_; }
  const Discriminator& discriminator() const { return discriminator_; }

  // Batched, differentiable paths. Waveforms are [B, N] at config().sample_rate.
  torch::Tensor embed(const torch::Tensor& x, const torch::Tensor& messages) const;
  // `lengths` (optional) gives the valid prefix of each row; frames past it
  // are excluded from time pooling and normalisation.
  torch::Tensor extract(const torch::Tensor& y,
                        const std::vector<int64_t>& lengths = {}) const;
  torch::Tensor discriminate_logits(const torch::Tensor& y) const;
  torch::Tensor discriminate(const torch::Tensor& y) const;

  // Single-clip convenience API (no gradient).
  dsp::Waveform embed(const dsp::Waveform& x, const WatermarkMessage& m) const;
  SoftMessage extract(const dsp::Waveform& y) const;
  double discriminate(const dsp::Waveform& y) const;

  // Parameters of encoders, embedders, message encoder and gain.
  int64_t embedding_parameter_count() const;
  std::vector<torch::Tensor> generator_parameters() const;
  std::vector<torch::Tensor> discriminator_parameters() const;
  // Hierarchical names: "watermarker.encoder_real.blocks.0.conv_a.weight", ...
  std::vector<std::pair<std::string, torch::Tensor>> named_parameters() const;

  // Keeps the gain inside [0, gain_max]; call after each optimiser step.
  void project_constraints();
  void to(torch::ScalarType dtype);
  torch::ScalarType dtype() const;

 private:
  void check_input(const torch::Tensor& x, const char* what) const;

  ModelConfig cfg_;
  mutable Watermarker watermarker_{nullptr};
  mutable Discriminator discriminator_{nullptr};
};

inline constexpr int64_t kCheckpointFormatVersion = 1;

using ArchiveWriter = std::function<void(torch::serialize::OutputArchive&)>;
using ArchiveReader = std::function<void(torch::serialize::InputArchive&)>;

// Single archive: format version, model config as JSON text, every parameter
// under its hierarchical name, plus whatever `extra` adds. Written to a
// temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const ModelBundle& model,
                     const ArchiveWriter& extra = {});

// Throws ConfigError when `expected` is given and differs from the stored
// config, or when the format version is unknown.
ModelBundle load_checkpoint(const std::filesystem::path& path,
                            const std::optional<ModelConfig>& expected = std::nullopt,
                            const ArchiveReader& extra = {});
ModelConfig read_checkpoint_config(const std::filesystem::path& path);

}  // namespace semimark

#endif  // SEMIMARK_MODEL_HPP
