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


#include "semimark/distortions.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "semimark/errors.hpp"
#include "semimark/process.hpp"
#include "semimark/wav_io.hpp"

namespace semimark {

namespace nnf = torch::nn::functional;
using json = nlohmann::json;
namespace d = distortion;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string interp_name(dsp::Interpolation k) {
  return k == dsp::Interpolation::kLinear ? "linear" : "windowed_sinc";
}

dsp::Interpolation parse_interp(const std::string& s) {
  if (s == "linear") return dsp::Interpolation::kLinear;
  if (s == "windowed_sinc") return dsp::Interpolation::kWindowedSinc;
  throw InvalidInput("unknown interpolation \"" + s + "\"");
}

}  // namespace

DistortionKind DistortionSpec::kind() const {
  return std::visit(overloaded{
                        [](const d::Identity&) { return DistortionKind::kIdentity; },
                        [](const d::Crop&) { return DistortionKind::kCrop; },
                        [](const d::GaussianNoise&) { return DistortionKind::kGaussianNoise; },
                        [](const d::ResampleChain&) { return DistortionKind::kResampleChain; },
                        [](const d::LowpassFilter&) { return DistortionKind::kLowpassFilter; },
                        [](const d::Requantize&) { return DistortionKind::kRequantize; },
                        [](const d::PitchShift&) { return DistortionKind::kPitchShift; },
                        [](const d::CodecMp3&) { return DistortionKind::kCodecMp3; },
                        [](const d::CodecOpus&) { return DistortionKind::kCodecOpus; },
                    },
                    params);
}

DistortionSpec make_distortion(DistortionParams params) {
  DistortionSpec spec{std::move(params), true, DistortionClass::kBenign};
  switch (spec.kind()) {
    case DistortionKind::kPitchShift:
      spec.cls = DistortionClass::kMalicious;
      spec.differentiable =
          std::get<d::PitchShift>(spec.params).method == PitchMethod::kResample;
      break;
    case DistortionKind::kCodecMp3:
    case DistortionKind::kCodecOpus:
      spec.cls = DistortionClass::kEvalOnly;
      spec.differentiable = false;
      break;
    default:
      break;
  }
  return spec;
}

void validate(const DistortionSpec& spec) {
  const auto kind = spec.kind();
  switch (kind) {
    case DistortionKind::kPitchShift:
      if (spec.cls != DistortionClass::kMalicious)
        throw InvalidInput("pitch_shift must be classed malicious");
      if (spec.differentiable && std::get<d::PitchShift>(spec.params).method == PitchMethod::kPhaseVocoder)
        throw InvalidInput("phase-vocoder pitch shift is not differentiable");
      break;
    case DistortionKind::kCodecMp3:
    case DistortionKind::kCodecOpus:
      if (spec.cls != DistortionClass::kEvalOnly || spec.differentiable)
        throw InvalidInput(kind_name(kind) + " must be eval_only and non-differentiable");
      break;
    default:
      if (spec.cls != DistortionClass::kBenign)
        throw InvalidInput(kind_name(kind) + " must be classed benign");
  }
  std::visit(overloaded{
                 [](const d::Identity&) {},
                 [](const d::Crop& p) {
                   if (!(p.fraction >= 0.0 && p.fraction < 1.0))
                     throw InvalidInput("crop fraction must lie in [0, 1)");
                 },
                 [](const d::GaussianNoise& p) {
                   if (!std::isfinite(p.snr_db)) throw InvalidInput("noise snr must be finite");
                 },
                 [](const d::ResampleChain& p) {
                   if (p.intermediate_rate <= 0) throw InvalidInput("intermediate rate must be positive");
                 },
                 [](const d::LowpassFilter& p) {
                   if (!(p.cutoff_hz > 0.0) || p.order < 2 || p.order % 2 != 0)
                     throw InvalidInput("lowpass needs cutoff > 0 and an even order >= 2");
                 },
                 [](const d::Requantize& p) {
                   if (p.bits < 2 || p.bits > 16) throw InvalidInput("requantize bits must lie in [2, 16]");
                 },
                 [](const d::PitchShift& p) {
                   if (!(std::abs(p.semitones) <= 6.0))
                     throw InvalidInput("pitch shift must satisfy |semitones| <= 6");
                 },
                 [](const d::CodecMp3& p) {
                   if (!(p.bitrate_kbps > 0.0)) throw InvalidInput("mp3 bitrate must be positive");
                 },
                 [](const d::CodecOpus& p) {
                   if (!(p.frame_ms > 0.0) || !(p.bitrate_kbps > 0.0))
                     throw InvalidInput("opus frame duration and bitrate must be positive");
                 },
             },
             spec.params);
}

std::string kind_name(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::kIdentity: return "identity";
    case DistortionKind::kCrop: return "crop";
    case DistortionKind::kGaussianNoise: return "gaussian_noise";
    case DistortionKind::kResampleChain: return "resample_chain";
    case DistortionKind::kLowpassFilter: return "lowpass_filter";
    case DistortionKind::kRequantize: return "requantize";
    case DistortionKind::kPitchShift: return "pitch_shift";
    case DistortionKind::kCodecMp3: return "codec_mp3";
    case DistortionKind::kCodecOpus: return "codec_opus";
  }
  return "unknown";
}

std::string class_name(DistortionClass cls) {
  switch (cls) {
    case DistortionClass::kBenign: return "benign";
    case DistortionClass::kMalicious: return "malicious";
    case DistortionClass::kEvalOnly: return "eval_only";
  }
  return "unknown";
}

DistortionClass parse_class(const std::string& name) {
  if (name == "benign") return DistortionClass::kBenign;
  if (name == "malicious") return DistortionClass::kMalicious;
  if (name == "eval_only") return DistortionClass::kEvalOnly;
  throw InvalidInput("unknown distortion class \"" + name + "\"");
}

std::string describe(const DistortionSpec& spec) {
  char buf[96];
  std::visit(overloaded{
                 [&](const d::Identity&) { std::snprintf(buf, sizeof buf, "identity"); },
                 [&](const d::Crop& p) { std::snprintf(buf, sizeof buf, "crop(%.0f%%)", 100 * p.fraction); },
                 [&](const d::GaussianNoise& p) {
                   std::snprintf(buf, sizeof buf, "gaussian_noise(%.1fdB)", p.snr_db);
                 },
                 [&](const d::ResampleChain& p) {
                   std::snprintf(buf, sizeof buf, "resample_chain(%dHz)", p.intermediate_rate);
                 },
                 [&](const d::LowpassFilter& p) {
                   std::snprintf(buf, sizeof buf, "lowpass_filter(%.0fHz)", p.cutoff_hz);
                 },
                 [&](const d::Requantize& p) { std::snprintf(buf, sizeof buf, "requantize(%dbit)", p.bits); },
                 [&](const d::PitchShift& p) {
                   std::snprintf(buf, sizeof buf, "pitch_shift(%+.2fst%s)", p.semitones,
                                 p.method == PitchMethod::kPhaseVocoder ? ",vocoder" : "");
                 },
                 [&](const d::CodecMp3& p) { std::snprintf(buf, sizeof buf, "mp3(%.0fkbps)", p.bitrate_kbps); },
                 [&](const d::CodecOpus& p) {
                   std::snprintf(buf, sizeof buf, "opus(%.0fms,%.0fkbps)", p.frame_ms, p.bitrate_kbps);
                 },
             },
             spec.params);
  return buf;
}

void to_json(json& j, const DistortionSpec& spec) {
  j = json{{"kind", kind_name(spec.kind())}};
  std::visit(overloaded{
                 [&](const d::Identity&) {},
                 [&](const d::Crop& p) { j["fraction"] = p.fraction; },
                 [&](const d::GaussianNoise& p) { j["snr_db"] = p.snr_db; },
                 [&](const d::ResampleChain& p) {
                   j["intermediate_rate"] = p.intermediate_rate;
                   j["interpolation"] = interp_name(p.interpolation);
                 },
                 [&](const d::LowpassFilter& p) {
                   j["cutoff_hz"] = p.cutoff_hz;
                   j["order"] = p.order;
                 },
                 [&](const d::Requantize& p) { j["bits"] = p.bits; },
                 [&](const d::PitchShift& p) {
                   j["semitones"] = p.semitones;
                   j["method"] = p.method == PitchMethod::kResample ? "resample" : "phase_vocoder";
                   j["interpolation"] = interp_name(p.interpolation);
                 },
                 [&](const d::CodecMp3& p) { j["bitrate_kbps"] = p.bitrate_kbps; },
                 [&](const d::CodecOpus& p) {
                   j["frame_ms"] = p.frame_ms;
                   j["bitrate_kbps"] = p.bitrate_kbps;
                 },
             },
             spec.params);
}

void from_json(const json& j, DistortionSpec& spec) {
  if (!j.is_object() || !j.contains("kind")) throw InvalidInput("distortion spec needs a \"kind\"");
  const auto kind = j.at("kind").get<std::string>();
  DistortionParams p;
  if (kind == "identity") {
    p = d::Identity{};
  } else if (kind == "crop") {
    p = d::Crop{j.value("fraction", d::Crop{}.fraction)};
  } else if (kind == "gaussian_noise") {
    p = d::GaussianNoise{j.value("snr_db", d::GaussianNoise{}.snr_db)};
  } else if (kind == "resample_chain") {
    p = d::ResampleChain{j.value("intermediate_rate", 8000),
                         parse_interp(j.value("interpolation", std::string("linear")))};
  } else if (kind == "lowpass_filter") {
    p = d::LowpassFilter{j.value("cutoff_hz", 4000.0), j.value("order", 6)};
  } else if (kind == "requantize") {
    p = d::Requantize{j.value("bits", 8)};
  } else if (kind == "pitch_shift") {
    const auto method = j.value("method", std::string("resample"));
    if (method != "resample" && method != "phase_vocoder")
      throw InvalidInput("unknown pitch shift method \"" + method + "\"");
    p = d::PitchShift{j.value("semitones", 2.0),
                      method == "resample" ? PitchMethod::kResample : PitchMethod::kPhaseVocoder,
                      parse_interp(j.value("interpolation", std::string("linear")))};
  } else if (kind == "codec_mp3") {
    p = d::CodecMp3{j.value("bitrate_kbps", 8.0)};
  } else if (kind == "codec_opus") {
    p = d::CodecOpus{j.value("frame_ms", 60.0), j.value("bitrate_kbps", 16.0)};
  } else {
    throw InvalidInput("unknown distortion kind \"" + kind + "\"");
  }
  spec = make_distortion(std::move(p));
  validate(spec);
}

// ---------------------------------------------------------------------------
// Individual distortions

torch::Tensor requantize(const torch::Tensor& x, int bits, bool straight_through) {
  if (bits < 2 || bits > 16) throw InvalidInput("requantize bits must lie in [2, 16]");
  const double levels = std::ldexp(1.0, bits - 1);
  auto q = torch::clamp(torch::round(x.detach() * levels) / levels, -1.0, 1.0 - 1.0 / levels);
  if (straight_through) return x + (q - x).detach();
  return q;
}

torch::Tensor pitch_shift(const torch::Tensor& x, double semitones,
                          dsp::Interpolation interpolation) {
  if (!(std::abs(semitones) <= 6.0)) throw InvalidInput("pitch shift must satisfy |semitones| <= 6");
  const int64_t n = x.size(-1);
  const double ratio = std::exp2(semitones / 12.0);
  const auto stretched = static_cast<int64_t>(std::llround(static_cast<double>(n) / ratio));
  auto y = dsp::resample_by_step(x, ratio, std::min(stretched, n), interpolation);
  if (y.size(-1) < n) {
    std::vector<int64_t> pad(static_cast<size_t>(2 * x.dim()), 0);
    pad[1] = n - y.size(-1);
    y = nnf::pad(y, nnf::PadFuncOptions(pad));
  }
  return y;
}

torch::Tensor pitch_shift_vocoder(const torch::Tensor& x, double semitones, int sample_rate) {
  if (!(std::abs(semitones) <= 6.0)) throw InvalidInput("pitch shift must satisfy |semitones| <= 6");
  if (x.dim() != 1) throw InvalidInput("phase vocoder expects a 1-D waveform");
  const double ratio = std::exp2(semitones / 12.0);
  const int64_t n = x.size(0);
  dsp::FrameParams fp{1024, 256, dsp::WindowKind::kHann, true};
  if (n < fp.fft_size) return x.clone();
  auto xd = x.detach().to(torch::kFloat64);
  auto spec = dsp::stft(xd, fp, sample_rate);
  const int64_t bins = spec.bins();
  const int64_t frames = spec.frames();
  auto re = spec.real.contiguous();
  auto im = spec.imag.contiguous();
  auto R = re.accessor<double, 2>();
  auto I = im.accessor<double, 2>();

  // Stretch time by `ratio`, so resampling by `ratio` restores the duration
  // and scales every frequency by it.
  const double advance_rate = 1.0 / ratio;
  std::vector<double> steps;
  for (double t = 0.0; t < static_cast<double>(frames); t += advance_rate) steps.push_back(t);
  const auto out_frames = static_cast<int64_t>(steps.size());
  auto out_re = torch::zeros({bins, out_frames}, torch::kFloat64);
  auto out_im = torch::zeros({bins, out_frames}, torch::kFloat64);
  auto OR = out_re.accessor<double, 2>();
  auto OI = out_im.accessor<double, 2>();
  auto at = [&](int64_t k, int64_t t) {
    return t < frames ? std::complex<double>(R[k][t], I[k][t]) : std::complex<double>(0.0, 0.0);
  };
  for (int64_t k = 0; k < bins; ++k) {
    const double expected = 2.0 * std::numbers::pi * fp.hop * static_cast<double>(k) / fp.fft_size;
    double phase = std::arg(at(k, 0));
    for (int64_t j = 0; j < out_frames; ++j) {
      const auto i = static_cast<int64_t>(std::floor(steps[static_cast<size_t>(j)]));
      const double a = steps[static_cast<size_t>(j)] - static_cast<double>(i);
      const auto c0 = at(k, i);
      const auto c1 = at(k, i + 1);
      const double mag = (1.0 - a) * std::abs(c0) + a * std::abs(c1);
      OR[k][j] = mag * std::cos(phase);
      OI[k][j] = mag * std::sin(phase);
      double dphi = std::arg(c1) - std::arg(c0) - expected;
      dphi -= 2.0 * std::numbers::pi * std::round(dphi / (2.0 * std::numbers::pi));
      phase += expected + dphi;
    }
  }
  const auto stretched_len = static_cast<int64_t>(std::llround(static_cast<double>(n) * ratio));
  auto stretched = dsp::istft({out_re, out_im, fp, sample_rate}, stretched_len);
  auto y = dsp::resample_by_step(stretched, ratio, n, dsp::Interpolation::kWindowedSinc);
  return y.to(x.scalar_type());
}

namespace {

torch::Tensor add_noise(const torch::Tensor& x, double snr_db, uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  auto noise = at::normal(0.0, 1.0, x.sizes(), gen, torch::TensorOptions().dtype(torch::kFloat64));
  const double signal = x.detach().to(torch::kFloat64).pow(2).sum().item<double>();
  const double raw = noise.pow(2).sum().item<double>();
  if (signal == 0.0 || raw == 0.0) return x.clone();
  const double scale = std::sqrt(signal / (std::pow(10.0, snr_db / 10.0) * raw));
  return x + (noise * scale).to(x.scalar_type());
}

torch::Tensor crop(const torch::Tensor& x, double fraction, uint64_t seed) {
  const int64_t n = x.size(-1);
  const int64_t keep =
      std::clamp<int64_t>(std::llround(static_cast<double>(n) * (1.0 - fraction)), 1, n);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int64_t> offset(0, n - keep);
  return x.narrow(-1, offset(rng), keep);
}

}  // namespace

torch::Tensor apply(const torch::Tensor& x, int sample_rate, const DistortionSpec& spec,
                    uint64_t seed, const ApplyOptions& options) {
  validate(spec);
  if (options.training_path && !spec.differentiable)
    throw ContractViolation(describe(spec) +
                            " is not differentiable and cannot be used on a training path");
  if (x.dim() != 1) throw InvalidInput("apply expects a 1-D waveform tensor");
  return std::visit(
      overloaded{
          [&](const d::Identity&) { return x; },
          [&](const d::Crop& p) { return crop(x, p.fraction, seed); },
          [&](const d::GaussianNoise& p) { return add_noise(x, p.snr_db, seed); },
          [&](const d::ResampleChain& p) {
            if (p.intermediate_rate == sample_rate) return x.clone();
            auto mid = dsp::resample(x, sample_rate, p.intermediate_rate, p.interpolation);
            return dsp::resample_by_step(mid, static_cast<double>(p.intermediate_rate) / sample_rate,
                                         x.size(0), p.interpolation);
          },
          [&](const d::LowpassFilter& p) {
            if (p.cutoff_hz >= sample_rate / 2.0) return x.clone();
            return dsp::zero_phase_lowpass(x, p.cutoff_hz, sample_rate, p.order);
          },
          [&](const d::Requantize& p) { return requantize(x, p.bits, options.training_path); },
          [&](const d::PitchShift& p) {
            if (p.method == PitchMethod::kPhaseVocoder)
              return pitch_shift_vocoder(x, p.semitones, sample_rate);
            return pitch_shift(x, p.semitones, p.interpolation);
          },
          [&](const d::CodecMp3&) -> torch::Tensor {
            if (options.codecs == nullptr)
              throw EnvironmentError("codec distortion requested but no codec adapters are configured");
            return codec_roundtrip({x, sample_rate}, spec, *options.codecs).samples;
          },
          [&](const d::CodecOpus&) -> torch::Tensor {
            if (options.codecs == nullptr)
              throw EnvironmentError("codec distortion requested but no codec adapters are configured");
            return codec_roundtrip({x, sample_rate}, spec, *options.codecs).samples;
          },
      },
      spec.params);
}

dsp::Waveform apply(const dsp::Waveform& x, const DistortionSpec& spec, uint64_t seed,
                    const ApplyOptions& options) {
  return {apply(x.samples, x.sample_rate, spec, seed, options), x.sample_rate};
}

// ---------------------------------------------------------------------------
// Codecs

CodecRegistry CodecRegistry::from_json(const json& j) {
  CodecRegistry r;
  if (j.is_null()) return r;
  r.max_processes = j.value("max_processes", r.max_processes);
  if (j.contains("codecs")) {
    for (const auto& [name, entry] : j.at("codecs").items()) {
      CodecAdapter a;
      a.steps = entry.at("steps").get<std::vector<std::vector<std::string>>>();
      a.input_rate = entry.value("input_rate", 0);
      r.codecs[name] = std::move(a);
    }
  }
  return r;
}

dsp::Waveform codec_roundtrip(const dsp::Waveform& x, const DistortionSpec& spec,
                              const CodecRegistry& registry) {
  std::string codec;
  std::map<std::string, std::string> vars;
  auto fmt = [](double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
  };
  if (const auto* mp3 = std::get_if<d::CodecMp3>(&spec.params)) {
    codec = "mp3";
    vars["bitrate_kbps"] = fmt(mp3->bitrate_kbps);
    vars["frame_ms"] = "0";
  } else if (const auto* opus = std::get_if<d::CodecOpus>(&spec.params)) {
    codec = "opus";
    vars["bitrate_kbps"] = fmt(opus->bitrate_kbps);
    vars["frame_ms"] = fmt(opus->frame_ms);
  } else {
    throw InvalidInput("codec_roundtrip needs a codec distortion, got " + describe(spec));
  }
  const auto it = registry.codecs.find(codec);
  if (it == registry.codecs.end() || it->second.steps.empty())
    throw EnvironmentError("no adapter configured for codec \"" + codec +
                           "\"; add a \"codecs\": {\"" + codec +
                           "\": {\"steps\": [[...argv...]]}} entry to the config (see README)");
  for (const auto& step : it->second.steps)
    if (step.empty() || !executable_available(step.front()))
      throw EnvironmentError("codec adapter \"" + codec + "\" needs executable \"" +
                             (step.empty() ? std::string("<empty>") : step.front()) +
                             "\", which is not on PATH");

  ProcessSlots::set_limit(registry.max_processes);
  TempDir work;
  const int tool_rate = it->second.input_rate > 0 ? it->second.input_rate : x.sample_rate;
  auto input = tool_rate == x.sample_rate ? x : dsp::resample(x, tool_rate);
  const auto in_path = work.path() / "in.wav";
  const auto out_path = work.path() / "out.wav";
  dsp::write_wav(in_path, input);
  vars["in"] = in_path.string();
  vars["out"] = out_path.string();
  vars["work"] = work.path().string();
  vars["rate"] = std::to_string(tool_rate);
  for (const auto& step : it->second.steps) {
    const auto argv = expand_template(step, vars);
    const auto r = run_process(argv);
    if (r.exit_code != 0)
      throw EnvironmentError("codec adapter \"" + codec + "\" step \"" + argv.front() +
                             "\" exited with status " + std::to_string(r.exit_code) + ": " +
                             r.stderr_text);
  }
  if (!std::filesystem::exists(out_path))
    throw EnvironmentError("codec adapter \"" + codec + "\" did not produce " + out_path.string());
  auto decoded = dsp::read_wav(out_path);
  if (decoded.sample_rate != x.sample_rate) decoded = dsp::resample(decoded, x.sample_rate);
  auto samples = decoded.samples.to(x.samples.scalar_type());
  const int64_t n = x.size();
  if (samples.size(0) >= n) {
    samples = samples.narrow(0, 0, n);
  } else {
    samples = nnf::pad(samples, nnf::PadFuncOptions({0, n - samples.size(0)}));
  }
  return {samples, x.sample_rate};
}

// ---------------------------------------------------------------------------
// Sampling

void to_json(json& j, const DistortionRanges& r) {
  j = json{{"crop", {r.crop_min, r.crop_max}},
           {"snr_db", {r.snr_min_db, r.snr_max_db}},
           {"intermediate_rates", r.intermediate_rates},
           {"cutoff_hz", {r.cutoff_min_hz, r.cutoff_max_hz}},
           {"requantize_bits", r.requantize_bits},
           {"pitch_semitones", {r.pitch_min_semitones, r.pitch_max_semitones}}};
}

void from_json(const json& j, DistortionRanges& r) {
  auto pair = [&](const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 2 || v[0] > v[1]) throw ConfigError(std::string("range ") + key + " must be [lo, hi]");
    lo = v[0];
    hi = v[1];
  };
  pair("crop", r.crop_min, r.crop_max);
  pair("snr_db", r.snr_min_db, r.snr_max_db);
  pair("cutoff_hz", r.cutoff_min_hz, r.cutoff_max_hz);
  pair("pitch_semitones", r.pitch_min_semitones, r.pitch_max_semitones);
  if (j.contains("intermediate_rates")) r.intermediate_rates = j.at("intermediate_rates").get<std::vector<int>>();
  if (j.contains("requantize_bits")) r.requantize_bits = j.at("requantize_bits").get<std::vector<int>>();
}

DistortionSpec sample_distortion(DistortionClass cls, uint64_t seed, const DistortionRanges& r) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&](const std::vector<int>& v) {
    return v.at(std::uniform_int_distribution<size_t>(0, v.size() - 1)(rng));
  };
  if (cls == DistortionClass::kMalicious) {
    const double magnitude = uniform(r.pitch_min_semitones, r.pitch_max_semitones);
    const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
    return make_distortion(d::PitchShift{sign * magnitude});
  }
  if (cls != DistortionClass::kBenign)
    throw InvalidInput("only benign and malicious distortions are sampled for training");
  switch (std::uniform_int_distribution<int>(0, 5)(rng)) {
    case 0: return make_distortion(d::Crop{uniform(r.crop_min, r.crop_max)});
    case 1: return make_distortion(d::GaussianNoise{uniform(r.snr_min_db, r.snr_max_db)});
    case 2: return make_distortion(d::ResampleChain{pick(r.intermediate_rates)});
    case 3: return make_distortion(d::LowpassFilter{uniform(r.cutoff_min_hz, r.cutoff_max_hz)});
    case 4: return make_distortion(d::Requantize{pick(r.requantize_bits)});
    default: return make_distortion(d::Identity{});
  }
}

}  // namespace semimark
