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


#include "semimark/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "semimark/errors.hpp"
#include "semimark/metrics.hpp"
#include "semimark/seeding.hpp"

namespace semimark {

using json = nlohmann::json;
namespace fs = std::filesystem;
namespace F = torch::nn::functional;

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (!(adam.lr > 0)) fail("lr must be positive");
  if (adam.beta1 < 0 || adam.beta1 >= 1 || adam.beta2 < 0 || adam.beta2 >= 1) fail("betas must lie in [0, 1)");
  if (weights.lambda_i < 0 || weights.lambda_d < 0 || weights.lambda_r < 0 || weights.lambda_f < 0)
    fail("loss weights must be non-negative");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (steps < 0) fail("steps must be >= 0");
  if (!(clip_seconds > 0)) fail("clip_seconds must be positive");
  if (!(fragility_cap > 0)) fail("fragility_cap must be positive");
  if (grad_clip < 0) fail("grad_clip must be >= 0");
  if (checkpoint_every < 1 || probe_every < 1 || probe_batch < 1)
    fail("checkpoint_every, probe_every and probe_batch must be >= 1");
}

bool TrainConfig::operator==(const TrainConfig& o) const { return json(*this) == json(o); }

void to_json(json& j, const LossWeights& w) {
  j = json{{"lambda_i", w.lambda_i}, {"lambda_d", w.lambda_d}, {"lambda_r", w.lambda_r}, {"lambda_f", w.lambda_f}};
}

void from_json(const json& j, LossWeights& w) {
  const LossWeights d;
  w.lambda_i = j.value("lambda_i", d.lambda_i);
  w.lambda_d = j.value("lambda_d", d.lambda_d);
  w.lambda_r = j.value("lambda_r", d.lambda_r);
  w.lambda_f = j.value("lambda_f", d.lambda_f);
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"lr", c.adam.lr},
           {"beta1", c.adam.beta1},
           {"beta2", c.adam.beta2},
           {"weights", c.weights},
           {"batch_size", c.batch_size},
           {"steps", c.steps},
           {"clip_seconds", c.clip_seconds},
           {"seed", c.seed},
           {"fragility_cap", c.fragility_cap},
           {"grad_clip", c.grad_clip},
           {"ranges", c.ranges},
           {"checkpoint_every", c.checkpoint_every},
           {"probe_every", c.probe_every},
           {"probe_batch", c.probe_batch}};
}

void from_json(const json& j, TrainConfig& c) {
  const TrainConfig d;
  c.adam.lr = j.value("lr", d.adam.lr);
  c.adam.beta1 = j.value("beta1", d.adam.beta1);
  c.adam.beta2 = j.value("beta2", d.adam.beta2);
  c.weights = j.contains("weights") ? j.at("weights").get<LossWeights>() : d.weights;
  c.batch_size = j.value("batch_size", d.batch_size);
  c.steps = j.value("steps", d.steps);
  c.clip_seconds = j.value("clip_seconds", d.clip_seconds);
  c.seed = j.value("seed", d.seed);
  c.fragility_cap = j.value("fragility_cap", d.fragility_cap);
  c.grad_clip = j.value("grad_clip", d.grad_clip);
  c.ranges = j.contains("ranges") ? j.at("ranges").get<DistortionRanges>() : d.ranges;
  c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  c.probe_every = j.value("probe_every", d.probe_every);
  c.probe_batch = j.value("probe_batch", d.probe_batch);
}

Preset default_preset() { return {}; }

Preset desk_preset() {
  Preset p;
  p.model.frame.fft_size = 256;
  p.model.frame.hop = 128;
  p.model.band_limit_hz = 4000.0;
  p.model.widths = {16, 16, 16, 16, 16};
  p.model.carrier_channels = 8;
  p.train.batch_size = 8;
  p.train.clip_seconds = 1.0;
  p.train.steps = 2000;
  return p;
}

Preset preset_by_name(const std::string& name) {
  if (name == "default") return default_preset();
  if (name == "desk") return desk_preset();
  throw ConfigError("unknown preset \"" + name + "\" (expected default or desk)");
}

// ---------------------------------------------------------------------------

namespace {

const DistortionSpec& spec_for_row(const std::vector<DistortionSpec>& specs, int64_t row, int64_t rows,
                                   const char* what) {
  if (specs.size() == 1) return specs[0];
  if (static_cast<int64_t>(specs.size()) != rows)
    throw InvalidInput(std::string(what) + ": need 1 or " + std::to_string(rows) + " specs, got " +
                       std::to_string(specs.size()));
  return specs[static_cast<size_t>(row)];
}

// Distorts each row of xw, zero-pads to a common length and extracts.
torch::Tensor distorted_extract(const ModelBundle& model, const torch::Tensor& xw,
                                const std::vector<DistortionSpec>& specs, uint64_t seed,
                                torch::Tensor* audio_out) {
  const int64_t rows = xw.size(0);
  std::vector<torch::Tensor> ys;
  std::vector<int64_t> lengths;
  int64_t longest = 0;
  ApplyOptions opts;
  opts.training_path = true;
  for (int64_t r = 0; r < rows; ++r) {
    const auto& spec = spec_for_row(specs, r, rows, "distortion list");
    ys.push_back(apply(xw[r], model.config().sample_rate, spec, derive_seed(seed, "row", r), opts));
    lengths.push_back(ys.back().size(0));
    longest = std::max(longest, lengths.back());
  }
  for (auto& y : ys)
    if (y.size(0) < longest) y = F::pad(y, F::PadFuncOptions({0, longest - y.size(0)}));
  auto audio = torch::stack(ys);
  if (audio_out) {
    if (audio.requires_grad()) audio.retain_grad();
    *audio_out = audio;
  }
  bool uniform = std::all_of(lengths.begin(), lengths.end(), [&](int64_t n) { return n == longest; });
  return model.extract(audio, uniform ? std::vector<int64_t>{} : lengths);
}

void require_differentiable(const std::vector<DistortionSpec>& specs, const char* path) {
  if (specs.empty()) throw InvalidInput(std::string(path) + " path needs at least one distortion spec");
  for (const auto& s : specs)
    if (!s.differentiable)
      throw ContractViolation(std::string(path) + " path got non-differentiable distortion " + describe(s));
}

double bit_acc(const torch::Tensor& probs, const torch::Tensor& messages) {
  return acc(messages.detach(), harden(probs.detach()));
}

}  // namespace

LossResult composite_loss(const ModelBundle& model, const LossInputs& in, const LossWeights& w,
                          double fragility_cap) {
  require_differentiable(in.benign, "benign");
  require_differentiable(in.malicious, "malicious");
  if (!in.x.defined() || in.x.dim() != 2) throw InvalidInput("composite_loss: x must be [B, N]");
  if (!in.messages.defined() || in.messages.dim() != 2 || in.messages.size(0) != in.x.size(0))
    throw InvalidInput("composite_loss: messages must be [B, L] matching x");

  LossResult r;
  r.watermarked = in.watermarked.defined() ? in.watermarked : model.embed(in.x, in.messages);
  const auto m = in.messages.to(r.watermarked.scalar_type());
  r.l_i = F::mse_loss(r.watermarked, in.x).to(torch::kFloat64);
  const auto logits = model.discriminate_logits(r.watermarked);
  r.l_d = F::binary_cross_entropy_with_logits(logits, torch::zeros_like(logits)).to(torch::kFloat64);

  r.benign_probs = distorted_extract(model, r.watermarked, in.benign, derive_seed(in.seed, "benign"), nullptr);
  r.l_r = F::mse_loss(r.benign_probs, m).to(torch::kFloat64);

  r.malicious_probs = distorted_extract(model, r.watermarked, in.malicious, derive_seed(in.seed, "malicious"),
                                        &r.malicious_audio);
  const auto raw_f = F::mse_loss(r.malicious_probs, m).to(torch::kFloat64);
  r.fragility_capped = raw_f.item<double>() >= fragility_cap;
  r.l_f = torch::clamp_max(raw_f, fragility_cap);

  r.total = w.lambda_i * r.l_i + w.lambda_d * r.l_d + w.lambda_r * r.l_r - w.lambda_f * r.l_f;
  r.acc_benign = bit_acc(r.benign_probs, m);
  r.acc_malicious = bit_acc(r.malicious_probs, m);
  return r;
}

torch::Tensor discriminator_loss(const ModelBundle& model, const torch::Tensor& x,
                                 const torch::Tensor& watermarked) {
  const auto real = model.discriminate_logits(x);
  const auto fake = model.discriminate_logits(watermarked);
  return F::binary_cross_entropy_with_logits(real, torch::zeros_like(real)) +
         F::binary_cross_entropy_with_logits(fake, torch::ones_like(fake));
}

void to_json(json& j, const StepMetrics& m) {
  j = json{{"step", m.step},         {"loss_total", m.total},
           {"loss_i", m.l_i},        {"loss_d", m.l_d},
           {"loss_r", m.l_r},        {"loss_f", m.l_f},
           {"loss_disc", m.d_loss},  {"acc_benign", m.acc_benign},
           {"acc_malicious", m.acc_malicious},
           {"gain", m.gain},         {"seconds", m.seconds},
           {"benign", m.benign},     {"malicious", m.malicious}};
  j["probe_snr_db"] = m.probe_snr_db ? json(*m.probe_snr_db) : json(nullptr);
  j["probe_d_gap"] = m.probe_d_gap ? json(*m.probe_d_gap) : json(nullptr);
}

StepDraws draw_step(const TrainConfig& cfg, int message_bits, int64_t step, int batch) {
  StepDraws d;
  const auto s = static_cast<uint64_t>(step);
  d.messages = random_messages(batch, message_bits, derive_seed(cfg.seed, "messages", s));
  const uint64_t benign_seed = derive_seed(cfg.seed, "benign", s);
  const uint64_t malicious_seed = derive_seed(cfg.seed, "malicious", s);
  for (int r = 0; r < batch; ++r) {
    d.benign.push_back(sample_distortion(DistortionClass::kBenign, derive_seed(benign_seed, "row", r), cfg.ranges));
    d.malicious.push_back(
        sample_distortion(DistortionClass::kMalicious, derive_seed(malicious_seed, "row", r), cfg.ranges));
  }
  d.distortion_seed = derive_seed(cfg.seed, "distort", s);
  return d;
}

// ---------------------------------------------------------------------------

namespace {

std::unique_ptr<torch::optim::Adam> make_adam(const std::vector<torch::Tensor>& params, const AdamSettings& a) {
  return std::make_unique<torch::optim::Adam>(
      params, torch::optim::AdamOptions(a.lr).betas({a.beta1, a.beta2}));
}

void set_requires_grad(const std::vector<torch::Tensor>& params, bool on) {
  for (auto p : params) p.requires_grad_(on);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

Trainer::Trainer(ModelBundle model, TrainConfig cfg) : model_(std::move(model)), cfg_(std::move(cfg)) {
  cfg_.validate();
  gen_opt_ = make_adam(model_.generator_parameters(), cfg_.adam);
  disc_opt_ = make_adam(model_.discriminator_parameters(), cfg_.adam);
}

void Trainer::fail_non_finite(const std::string& phase, const torch::Tensor& x, const StepDraws& draws,
                              const std::string& losses) {
  const fs::path dir = dump_dir_.empty() ? fs::temp_directory_path() : dump_dir_;
  fs::create_directories(dir);
  const auto path = dir / ("nonfinite_step" + std::to_string(step_) + ".pt");
  std::vector<std::string> benign, malicious;
  for (const auto& s : draws.benign) benign.push_back(describe(s));
  for (const auto& s : draws.malicious) malicious.push_back(describe(s));
  json info{{"step", step_},
            {"phase", phase},
            {"seed", cfg_.seed},
            {"distortion_seed", draws.distortion_seed},
            {"losses", losses},
            {"benign", benign},
            {"malicious", malicious}};
  torch::serialize::OutputArchive archive;
  archive.write("x", x.detach());
  archive.write("messages", draws.messages);
  archive.write("info", c10::IValue(info.dump()));
  archive.save_to(path.string());
  throw NonFiniteLoss("non-finite loss in " + phase + " phase at step " + std::to_string(step_) + ": " +
                          info.dump() + " (inputs dumped to " + path.string() + ")",
                      path.string());
}

StepMetrics Trainer::train_step(const torch::Tensor& batch) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dtype = model_.dtype();
  const auto x = batch.to(dtype);
  if (x.dim() != 2) throw InvalidInput("train_step expects a [B, N] batch");
  const auto draws = draw_step(cfg_, model_.config().message_bits, step_, static_cast<int>(x.size(0)));
  const auto messages = draws.messages.to(dtype);

  StepMetrics out;
  out.step = step_;

  // Discriminator phase.
  torch::Tensor xw_fixed;
  {
    torch::NoGradGuard guard;
    xw_fixed = model_.embed(x, messages);
  }
  disc_opt_->zero_grad();
  const auto d_loss = discriminator_loss(model_, x, xw_fixed);
  out.d_loss = d_loss.item<double>();
  if (!finite(out.d_loss)) fail_non_finite("discriminator", x, draws, "disc=" + std::to_string(out.d_loss));
  d_loss.backward();
  if (cfg_.grad_clip > 0) torch::nn::utils::clip_grad_norm_(model_.discriminator_parameters(), cfg_.grad_clip);
  disc_opt_->step();

  // Generator phase; the discriminator is frozen.
  const auto disc_params = model_.discriminator_parameters();
  set_requires_grad(disc_params, false);
  gen_opt_->zero_grad();
  LossInputs in{x, messages, draws.benign, draws.malicious, draws.distortion_seed, {}};
  LossResult res;
  try {
    res = composite_loss(model_, in, cfg_.weights, cfg_.fragility_cap);
  } catch (...) {
    set_requires_grad(disc_params, true);
    throw;
  }
  out.total = res.total.item<double>();
  out.l_i = res.l_i.item<double>();
  out.l_d = res.l_d.item<double>();
  out.l_r = res.l_r.item<double>();
  out.l_f = res.l_f.item<double>();
  if (!finite(out.total) || !finite(out.l_i) || !finite(out.l_d) || !finite(out.l_r) || !finite(out.l_f)) {
    set_requires_grad(disc_params, true);
    std::ostringstream s;
    s << "total=" << out.total << " l_i=" << out.l_i << " l_d=" << out.l_d << " l_r=" << out.l_r
      << " l_f=" << out.l_f;
    fail_non_finite("generator", x, draws, s.str());
  }
  res.total.backward();
  set_requires_grad(disc_params, true);
  if (cfg_.grad_clip > 0) torch::nn::utils::clip_grad_norm_(model_.generator_parameters(), cfg_.grad_clip);
  gen_opt_->step();
  model_.project_constraints();

  out.acc_benign = res.acc_benign;
  out.acc_malicious = res.acc_malicious;
  out.gain = model_.watermarker()->gain.item<double>();
  for (const auto& s : draws.benign) out.benign.push_back(describe(s));
  for (const auto& s : draws.malicious) out.malicious.push_back(describe(s));

  if (probe_.defined() && step_ % cfg_.probe_every == 0) {
    torch::NoGradGuard guard;
    const auto probe = probe_.to(dtype);
    const auto pm = random_messages(static_cast<int>(probe.size(0)), model_.config().message_bits,
                                    derive_seed(cfg_.seed, "probe")).to(dtype);
    const auto pw = model_.embed(probe, pm);
    const auto snrs = snr_db_batch(probe, pw);
    double mean = 0;
    for (double v : snrs) mean += v;
    out.probe_snr_db = mean / static_cast<double>(snrs.size());
    out.probe_d_gap = (model_.discriminate(pw).mean() - model_.discriminate(probe).mean()).item<double>();
  }

  ++step_;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void Trainer::save(const fs::path& path) const {
  save_checkpoint(path, model_, [&](torch::serialize::OutputArchive& a) {
    a.write("train_step", c10::IValue(step_));
    a.write("train_config", c10::IValue(json(cfg_).dump()));
    torch::serialize::OutputArchive gen, disc;
    gen_opt_->save(gen);
    disc_opt_->save(disc);
    a.write("optim_generator", gen);
    a.write("optim_discriminator", disc);
  });
}

Trainer Trainer::resume(const fs::path& path, const TrainConfig& cfg) {
  int64_t step = 0;
  TrainConfig stored;
  auto model = load_checkpoint(path, std::nullopt, [&](torch::serialize::InputArchive& a) {
    c10::IValue v;
    if (!a.try_read("train_step", v)) throw ConfigError(path.string() + ": no training state (model-only file)");
    step = v.toInt();
    a.read("train_config", v);
    stored = json::parse(v.toStringRef()).get<TrainConfig>();
  });
  auto lhs = stored, rhs = cfg;
  lhs.steps = rhs.steps = 0;
  if (!(lhs == rhs))
    throw ConfigError(path.string() + ": stored train config " + json(stored).dump() +
                      " differs from requested " + json(cfg).dump());
  Trainer t(std::move(model), cfg);
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  torch::serialize::InputArchive gen, disc;
  archive.read("optim_generator", gen);
  archive.read("optim_discriminator", disc);
  t.gen_opt_->load(gen);
  t.disc_opt_->load(disc);
  t.step_ = step;
  return t;
}

// ---------------------------------------------------------------------------

ModelBundle fit(const CorpusIndex& index, const ModelConfig& model_cfg, const TrainConfig& cfg,
                const FitOptions& options) {
  cfg.validate();
  model_cfg.validate();
  if (index.in_split(Split::kTrain).empty()) throw InvalidInput("empty corpus: no training entries");
  if (index.target_rate != model_cfg.sample_rate)
    throw ConfigError("corpus rate " + std::to_string(index.target_rate) + " differs from model rate " +
                      std::to_string(model_cfg.sample_rate));
  if (options.out_dir.empty()) throw InvalidInput("fit needs an output directory");
  fs::create_directories(options.out_dir);

  ClipSampler sampler(index, Split::kTrain, cfg.clip_seconds, derive_seed(cfg.seed, "data"));
  const auto latest = options.out_dir / "checkpoint_latest.pt";
  const bool resuming = options.resume && fs::exists(latest);
  auto trainer = resuming ? Trainer::resume(latest, cfg)
                          : Trainer(ModelBundle(model_cfg, derive_seed(cfg.seed, "init")), cfg);
  if (!(trainer.model().config() == model_cfg))
    throw ConfigError(latest.string() + ": checkpoint model config differs from the requested one");
  trainer.set_dump_dir(options.out_dir);

  const bool have_val = !index.in_split(Split::kVal).empty();
  try {
    ClipSampler probe(index, have_val ? Split::kVal : Split::kTrain, cfg.clip_seconds,
                      derive_seed(cfg.seed, "probe"));
    trainer.set_probe(probe.batch(0, cfg.probe_batch));
  } catch (const InvalidInput&) {
    trainer.set_probe(sampler.batch(1u << 30, cfg.probe_batch));
  }

  // Keep log records of steps already in the checkpoint; later ones would be
  // duplicated by the rerun.
  const auto log_path = options.out_dir / "train_log.jsonl";
  std::vector<std::string> kept;
  if (resuming && fs::exists(log_path)) {
    std::ifstream old(log_path);
    for (std::string line; std::getline(old, line);) {
      if (line.empty()) continue;
      try {
        if (json::parse(line).at("step").get<int64_t>() < trainer.step()) kept.push_back(line);
      } catch (const json::exception&) {
      }
    }
  }
  std::ofstream log(log_path, std::ios::trunc);
  for (const auto& line : kept) log << line << "\n";

  int64_t done = 0;
  while (trainer.step() < cfg.steps && (options.max_new_steps == 0 || done < options.max_new_steps)) {
    const auto x = sampler.batch(static_cast<uint64_t>(trainer.step()) * cfg.batch_size, cfg.batch_size);
    const auto metrics = trainer.train_step(x);
    log << json(metrics).dump() << "\n" << std::flush;
    if (options.on_step) options.on_step(metrics);
    ++done;
    if (trainer.step() % cfg.checkpoint_every == 0) trainer.save(latest);
  }
  trainer.save(latest);
  save_checkpoint(options.out_dir / "model.pt", trainer.model());
  return trainer.model();
}

}  // namespace semimark
