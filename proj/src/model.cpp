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


#include "semimark/model.hpp"

#include <cmath>
#include <string>

#include "semimark/errors.hpp"

namespace semimark {

namespace nnf = torch::nn::functional;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config

int ModelConfig::embed_bins() const {
  const int all = frame.bins();
  if (band_limit_hz <= 0.0) return all;
  const int limited =
      static_cast<int>(std::floor(band_limit_hz * frame.fft_size / sample_rate)) + 1;
  return std::clamp(limited, 1, all);
}

void ModelConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  dsp::check_overlap_add(frame);
  if (message_bits < 1) throw ConfigError("message_bits must be >= 1");
  if (message_embed_dim < 1) throw ConfigError("message_embed_dim must be >= 1");
  if (widths.size() != kBlocksPerNet - 1)
    throw ConfigError("widths must list " + std::to_string(kBlocksPerNet - 1) +
                      " channel counts (block 6 maps to the net output)");
  for (int w : widths)
    if (w < 1) throw ConfigError("widths must be >= 1");
  if (carrier_channels < 1) throw ConfigError("carrier_channels must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel must be odd and >= 1");
  if (!(gain_max > 0.0) || gain_init < 0.0 || gain_init > gain_max)
    throw ConfigError("need 0 <= gain_init <= gain_max and gain_max > 0");
  if (discriminator_channels.empty()) throw ConfigError("discriminator needs layers");
}

namespace dsp {

void to_json(json& j, const FrameParams& p) {
  j = json{{"fft_size", p.fft_size},
           {"hop", p.hop},
           {"window", p.window == dsp::WindowKind::kHann ? "hann" : "rectangular"},
           {"center", p.center}};
}

void from_json(const json& j, dsp::FrameParams& p) {
  p.fft_size = j.value("fft_size", p.fft_size);
  p.hop = j.value("hop", p.hop);
  const auto w = j.value("window", std::string("hann"));
  if (w == "hann") p.window = dsp::WindowKind::kHann;
  else if (w == "rectangular") p.window = dsp::WindowKind::kRectangular;
  else throw ConfigError("unknown window \"" + w + "\"");
  p.center = j.value("center", p.center);
}

}  // namespace dsp

namespace {

const char* extractor_input_name(ExtractorInput e) {
  return e == ExtractorInput::kComplex ? "complex" : "log_magnitude";
}

ExtractorInput extractor_input_from(const std::string& name) {
  if (name == "complex") return ExtractorInput::kComplex;
  if (name == "log_magnitude") return ExtractorInput::kLogMagnitude;
  throw ConfigError("unknown extractor_input \"" + name + "\" (expected complex or log_magnitude)");
}

}  // namespace

void to_json(json& j, const ModelConfig& c) {
  j = json{{"sample_rate", c.sample_rate},
           {"frame", c.frame},
           {"message_bits", c.message_bits},
           {"message_embed_dim", c.message_embed_dim},
           {"widths", c.widths},
           {"carrier_channels", c.carrier_channels},
           {"kernel", c.kernel},
           {"leaky_slope", c.leaky_slope},
           {"gain_init", c.gain_init},
           {"gain_max", c.gain_max},
           {"band_limit_hz", c.band_limit_hz},
           {"discriminator_channels", c.discriminator_channels},
           {"discriminator_zero_init_head", c.discriminator_zero_init_head},
           {"extractor_input", extractor_input_name(c.extractor_input)}};
}

void from_json(const json& j, ModelConfig& c) {
  ModelConfig d;
  c.sample_rate = j.value("sample_rate", d.sample_rate);
  c.frame = j.contains("frame") ? j.at("frame").get<dsp::FrameParams>() : d.frame;
  c.message_bits = j.value("message_bits", d.message_bits);
  c.message_embed_dim = j.value("message_embed_dim", d.message_embed_dim);
  c.widths = j.value("widths", d.widths);
  c.carrier_channels = j.value("carrier_channels", d.carrier_channels);
  c.kernel = j.value("kernel", d.kernel);
  c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
  c.gain_init = j.value("gain_init", d.gain_init);
  c.gain_max = j.value("gain_max", d.gain_max);
  c.band_limit_hz = j.value("band_limit_hz", d.band_limit_hz);
  c.discriminator_channels = j.value("discriminator_channels", d.discriminator_channels);
  c.discriminator_zero_init_head =
      j.value("discriminator_zero_init_head", d.discriminator_zero_init_head);
  c.extractor_input = j.contains("extractor_input")
                          ? extractor_input_from(j.at("extractor_input").get<std::string>())
                          : d.extractor_input;
}

// ---------------------------------------------------------------------------
// Building blocks

SkipGatedBlockImpl::SkipGatedBlockImpl(const SkipGatedBlockConfig& cfg) : cfg_(cfg) {
  if (cfg.in_channels < 1 || cfg.out_channels < 1 || cfg.kernel[0] < 1 || cfg.kernel[1] < 1 ||
      cfg.stride[0] < 1 || cfg.stride[1] < 1)
    throw InvalidInput("skip gated block dimensions must be >= 1");
  auto opts = torch::nn::Conv2dOptions(cfg.in_channels, cfg.out_channels,
                                       {cfg.kernel[0], cfg.kernel[1]})
                  .stride({cfg.stride[0], cfg.stride[1]})
                  .padding({cfg.kernel[0] / 2, cfg.kernel[1] / 2});
  conv_a = register_module("conv_a", torch::nn::Conv2d(opts));
  conv_b = register_module("conv_b", torch::nn::Conv2d(opts));
  if (cfg.in_channels != cfg.out_channels || cfg.stride != std::array<int, 2>{1, 1}) {
    skip = register_module(
        "skip", torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg.in_channels, cfg.out_channels, 1)
                                      .stride({cfg.stride[0], cfg.stride[1]})));
  }
}

torch::Tensor SkipGatedBlockImpl::forward(const torch::Tensor& h) {
  if (h.dim() != 4 || h.size(1) != cfg_.in_channels)
    throw InvalidInput("skip gated block expects [B, " + std::to_string(cfg_.in_channels) +
                       ", H, W] input, got " + std::to_string(h.dim()) + "-d tensor with " +
                       (h.dim() >= 2 ? std::to_string(h.size(1)) : std::string("?")) +
                       " channels");
  auto base = skip ? skip->forward(h) : h;
  return base + conv_a->forward(h) * torch::sigmoid(conv_b->forward(h));
}

ConvStackImpl::ConvStackImpl(int in_channels, const std::vector<int>& widths, int out_channels,
                             int kernel) {
  blocks = register_module("blocks", torch::nn::ModuleList());
  int prev = in_channels;
  for (int i = 0; i < kBlocksPerNet; ++i) {
    const int next = i + 1 < kBlocksPerNet ? widths.at(static_cast<size_t>(i)) : out_channels;
    blocks->push_back(SkipGatedBlock(SkipGatedBlockConfig{prev, next, {kernel, kernel}, {1, 1}}));
    prev = next;
  }
}

torch::Tensor ConvStackImpl::forward(torch::Tensor h) {
  for (const auto& b : *blocks) h = b->as<SkipGatedBlockImpl>()->forward(h);
  return h;
}

MessageEncoderImpl::MessageEncoderImpl(int bits, int embed_dim, int bins, double slope)
    : slope_(slope) {
  dense = register_module("dense", torch::nn::Linear(bits, embed_dim));
  to_bins = register_module("to_bins", torch::nn::Linear(embed_dim, bins));
}

torch::Tensor MessageEncoderImpl::forward(const torch::Tensor& messages) {
  auto e = nnf::leaky_relu(dense->forward(messages),
                           nnf::LeakyReLUFuncOptions().negative_slope(slope_));
  return to_bins->forward(e);
}

ExtractorImpl::ExtractorImpl(const ModelConfig& cfg) {
  features = register_module(
      "features", ConvStack(cfg.extractor_input == ExtractorInput::kComplex ? 2 : 1, cfg.widths,
                            cfg.carrier_channels, cfg.kernel));
  hidden = register_module(
      "hidden", torch::nn::Linear(cfg.carrier_channels * cfg.embed_bins(), cfg.message_embed_dim));
  output = register_module("output", torch::nn::Linear(cfg.message_embed_dim, cfg.message_bits));
}

torch::Tensor ExtractorImpl::forward(const torch::Tensor& planes, const torch::Tensor& frame_mask) {
  auto h = features->forward(planes);  // [B, C, bins, T]
  torch::Tensor pooled;
  if (frame_mask.defined()) {
    auto m = frame_mask.to(h.scalar_type()).view({h.size(0), 1, 1, h.size(3)});
    pooled = (h * m).sum(-1) / m.sum(-1).clamp_min(1.0);
  } else {
    pooled = h.mean(-1);
  }
  return torch::sigmoid(output->forward(hidden->forward(pooled.flatten(1))));
}

DiscriminatorImpl::DiscriminatorImpl(const ModelConfig& cfg) {
  body = register_module("body", torch::nn::Sequential());
  int prev = 1;
  for (int c : cfg.discriminator_channels) {
    body->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(prev, c, 3).stride(2).padding(1)));
    body->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(cfg.leaky_slope)));
    prev = c;
  }
  head = register_module("head", torch::nn::Linear(prev, 1));
  if (cfg.discriminator_zero_init_head) {
    torch::NoGradGuard guard;
    head->weight.zero_();
    head->bias.zero_();
  }
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& log_magnitude) {
  auto h = body->forward(log_magnitude).mean({2, 3});
  return head->forward(h).squeeze(-1);
}

WatermarkerImpl::WatermarkerImpl(const ModelConfig& cfg) {
  const int c = cfg.carrier_channels;
  encoder_real = register_module("encoder_real", ConvStack(1, cfg.widths, c, cfg.kernel));
  encoder_imag = register_module("encoder_imag", ConvStack(1, cfg.widths, c, cfg.kernel));
  message_encoder = register_module(
      "message_encoder",
      MessageEncoder(cfg.message_bits, cfg.message_embed_dim, cfg.embed_bins(), cfg.leaky_slope));
  embedder_real = register_module("embedder_real", ConvStack(c + 1, cfg.widths, 1, cfg.kernel));
  embedder_imag = register_module("embedder_imag", ConvStack(c + 1, cfg.widths, 1, cfg.kernel));
  extractor = register_module("extractor", Extractor(cfg));
  gain = register_parameter("gain", torch::tensor(cfg.gain_init, torch::kFloat32));
}

// ---------------------------------------------------------------------------
// Bundle

ModelBundle::ModelBundle(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  torch::manual_seed(seed);
  watermarker_ = Watermarker(cfg_);
  discriminator_ = Discriminator(cfg_);
}

void ModelBundle::check_input(const torch::Tensor& x, const char* what) const {
  if (x.dim() != 2) throw InvalidInput(std::string(what) + " expects a [batch, samples] tensor");
  if (x.size(1) < cfg_.frame.fft_size)
    throw InvalidInput(std::string(what) + ": input of " + std::to_string(x.size(1)) +
                       " samples is shorter than one frame (" +
                       std::to_string(cfg_.frame.fft_size) + ")");
}

namespace {

// Per-row RMS of the complex spectrogram over valid frames, shaped [B, 1, 1].
torch::Tensor spectral_scale(const torch::Tensor& re, const torch::Tensor& im,
                             const torch::Tensor& frame_mask) {
  auto power = re * re + im * im;
  torch::Tensor mean;
  if (frame_mask.defined()) {
    auto m = frame_mask.to(power.scalar_type()).unsqueeze(1);
    mean = (power * m).sum({1, 2}) / (m.sum({1, 2}) * power.size(1)).clamp_min(1.0);
  } else {
    mean = power.mean({1, 2});
  }
  return (mean + 1e-12).sqrt().view({-1, 1, 1});
}

}  // namespace

torch::Tensor ModelBundle::embed(const torch::Tensor& x, const torch::Tensor& messages) const {
  check_input(x, "embed");
  if (messages.dim() != 2 || messages.size(0) != x.size(0) ||
      messages.size(1) != cfg_.message_bits)
    throw InvalidInput("embed expects messages of shape [batch, " +
                       std::to_string(cfg_.message_bits) + "]");
  auto& w = *watermarker_;
  const int bins = cfg_.embed_bins();
  const int all_bins = cfg_.frame.bins();
  auto spec = dsp::stft(x, cfg_.frame, cfg_.sample_rate);
  const int64_t frames = spec.frames();
  auto scale = spectral_scale(spec.real, spec.imag, {});
  auto re = spec.real.narrow(1, 0, bins) / scale;
  auto im = spec.imag.narrow(1, 0, bins) / scale;

  auto msg = w.message_encoder->forward(messages.to(x.scalar_type()))
                 .view({x.size(0), 1, bins, 1})
                 .expand({x.size(0), 1, bins, frames});
  auto carrier_re = w.encoder_real->forward(re.unsqueeze(1));
  auto carrier_im = w.encoder_imag->forward(im.unsqueeze(1));
  auto delta_re = torch::tanh(w.embedder_real->forward(torch::cat({carrier_re, msg}, 1))).squeeze(1);
  auto delta_im = torch::tanh(w.embedder_imag->forward(torch::cat({carrier_im, msg}, 1))).squeeze(1);
  auto amplitude = w.gain.to(x.scalar_type()) * scale;
  if (bins < all_bins) {
    auto pad = nnf::PadFuncOptions({0, 0, 0, all_bins - bins});
    delta_re = nnf::pad(delta_re, pad);
    delta_im = nnf::pad(delta_im, pad);
  }
  dsp::ComplexSpectrogram marked{spec.real + amplitude * delta_re,
                                 spec.imag + amplitude * delta_im, cfg_.frame, cfg_.sample_rate};
  return dsp::istft(marked, x.size(1));
}

torch::Tensor ModelBundle::extract(const torch::Tensor& y,
                                   const std::vector<int64_t>& lengths) const {
  check_input(y, "extract");
  const int bins = cfg_.embed_bins();
  auto spec = dsp::stft(y, cfg_.frame, cfg_.sample_rate);
  torch::Tensor mask;
  if (!lengths.empty()) {
    if (static_cast<int64_t>(lengths.size()) != y.size(0))
      throw InvalidInput("extract: one length per batch row required");
    const int64_t frames = spec.frames();
    mask = torch::zeros({y.size(0), frames}, torch::kFloat32);
    auto acc = mask.accessor<float, 2>();
    for (int64_t b = 0; b < y.size(0); ++b) {
      // Frame t is centred on sample t * hop.
      const int64_t valid = std::clamp<int64_t>((lengths[b] - 1) / cfg_.frame.hop + 1, 1, frames);
      for (int64_t t = 0; t < valid; ++t) acc[b][t] = 1.0f;
    }
    mask = mask.to(spec.real.scalar_type());
  }
  auto re = spec.real.narrow(1, 0, bins);
  auto im = spec.imag.narrow(1, 0, bins);
  auto scale = spectral_scale(re, im, mask);
  torch::Tensor planes;
  if (cfg_.extractor_input == ExtractorInput::kComplex) {
    planes = torch::stack({re / scale, im / scale}, 1);
  } else {
    planes = torch::log1p(torch::sqrt(re * re + im * im + 1e-12) / scale).unsqueeze(1);
  }
  return watermarker_->extractor->forward(planes, mask);
}

torch::Tensor ModelBundle::discriminate_logits(const torch::Tensor& y) const {
  check_input(y, "discriminate");
  auto spec = dsp::stft(y, cfg_.frame, cfg_.sample_rate);
  auto mag = torch::sqrt(spec.real * spec.real + spec.imag * spec.imag + 1e-12);
  return discriminator_->forward(torch::log1p(mag).unsqueeze(1));
}

torch::Tensor ModelBundle::discriminate(const torch::Tensor& y) const {
  return torch::sigmoid(discriminate_logits(y));
}

namespace {

void check_rate(const dsp::Waveform& x, int expected) {
  if (x.sample_rate != expected)
    throw InvalidInput("waveform sample rate " + std::to_string(x.sample_rate) +
                       " Hz differs from the model's " + std::to_string(expected) + " Hz");
}

}  // namespace

dsp::Waveform ModelBundle::embed(const dsp::Waveform& x, const WatermarkMessage& m) const {
  check_rate(x, cfg_.sample_rate);
  if (m.size() != cfg_.message_bits)
    throw InvalidInput("message has " + std::to_string(m.size()) + " bits, model expects " +
                       std::to_string(cfg_.message_bits));
  torch::NoGradGuard guard;
  auto out = embed(x.samples.to(dtype()).unsqueeze(0), m.to_tensor(dtype()).unsqueeze(0));
  return {out.squeeze(0).to(x.samples.scalar_type()), x.sample_rate};
}

SoftMessage ModelBundle::extract(const dsp::Waveform& y) const {
  check_rate(y, cfg_.sample_rate);
  torch::NoGradGuard guard;
  return SoftMessage::from_tensor(extract(y.samples.to(dtype()).unsqueeze(0)).squeeze(0));
}

double ModelBundle::discriminate(const dsp::Waveform& y) const {
  check_rate(y, cfg_.sample_rate);
  torch::NoGradGuard guard;
  return discriminate(y.samples.to(dtype()).unsqueeze(0)).item<double>();
}

int64_t ModelBundle::embedding_parameter_count() const {
  int64_t n = watermarker_->gain.numel();
  for (const auto* m : {&watermarker_->encoder_real, &watermarker_->encoder_imag,
                        &watermarker_->embedder_real, &watermarker_->embedder_imag})
    for (const auto& p : (*m)->parameters()) n += p.numel();
  for (const auto& p : watermarker_->message_encoder->parameters()) n += p.numel();
  return n;
}

std::vector<torch::Tensor> ModelBundle::generator_parameters() const {
  return watermarker_->parameters();
}

std::vector<torch::Tensor> ModelBundle::discriminator_parameters() const {
  return discriminator_->parameters();
}

std::vector<std::pair<std::string, torch::Tensor>> ModelBundle::named_parameters() const {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& p : watermarker_->named_parameters()) out.emplace_back("watermarker." + p.key(), p.value());
  for (const auto& p : discriminator_->named_parameters())
    out.emplace_back("discriminator." + p.key(), p.value());
  return out;
}

void ModelBundle::project_constraints() {
  torch::NoGradGuard guard;
  // Largest value of the gain's dtype that does not exceed gain_max.
  double hi = cfg_.gain_max;
  if (watermarker_->gain.scalar_type() == torch::kFloat32) {
    float f = static_cast<float>(hi);
    if (f > hi) f = std::nextafter(f, 0.0f);
    hi = f;
  }
  watermarker_->gain.clamp_(0.0, hi);
}

void ModelBundle::to(torch::ScalarType dtype) {
  watermarker_->to(dtype);
  discriminator_->to(dtype);
}

torch::ScalarType ModelBundle::dtype() const { return watermarker_->gain.scalar_type(); }

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& model,
                     const ArchiveWriter& extra) {
  torch::serialize::OutputArchive archive;
  archive.write("format_version", c10::IValue(kCheckpointFormatVersion));
  archive.write("model_config", c10::IValue(json(model.config()).dump()));
  torch::serialize::OutputArchive params;
  for (const auto& [name, tensor] : model.named_parameters()) params.write(name, tensor.detach());
  archive.write("params", params);
  if (extra) extra(archive);

  auto tmp = path;
  tmp += ".tmp";
  archive.save_to(tmp.string());
  std::filesystem::rename(tmp, path);
}

namespace {

ModelConfig config_from_archive(torch::serialize::InputArchive& archive,
                                const std::filesystem::path& path) {
  c10::IValue version;
  if (!archive.try_read("format_version", version) || !version.isInt())
    throw ConfigError(path.string() + ": not a semimark checkpoint (no format_version)");
  if (version.toInt() != kCheckpointFormatVersion)
    throw ConfigError(path.string() + ": unsupported checkpoint format version " +
                      std::to_string(version.toInt()));
  c10::IValue text;
  archive.read("model_config", text);
  return json::parse(text.toStringRef()).get<ModelConfig>();
}

}  // namespace

ModelConfig read_checkpoint_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  return config_from_archive(archive, path);
}

ModelBundle load_checkpoint(const std::filesystem::path& path,
                            const std::optional<ModelConfig>& expected,
                            const ArchiveReader& extra) {
  if (!std::filesystem::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  const auto cfg = config_from_archive(archive, path);
  if (expected && !(*expected == cfg))
    throw ConfigError(path.string() + ": checkpoint config " + json(cfg).dump() +
                      " does not match requested config " + json(*expected).dump());
  ModelBundle model(cfg);
  torch::serialize::InputArchive params;
  archive.read("params", params);
  torch::NoGradGuard guard;
  for (auto& [name, tensor] : model.named_parameters()) {
    torch::Tensor stored;
    if (!params.try_read(name, stored))
      throw ConfigError(path.string() + ": missing parameter " + name);
    if (stored.sizes() != tensor.sizes())
      throw ConfigError(path.string() + ": shape mismatch for " + name);
    tensor.copy_(stored);
  }
  if (extra) extra(archive);
  return model;
}

}  // namespace semimark
