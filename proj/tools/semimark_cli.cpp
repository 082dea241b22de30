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


// semimark command-line entry point.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <torch/torch.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "semimark/benchmark.hpp"
#include "semimark/config.hpp"
#include "semimark/corpus.hpp"
#include "semimark/distortions.hpp"
#include "semimark/errors.hpp"
#include "semimark/metrics.hpp"
#include "semimark/model.hpp"
#include "semimark/training.hpp"
#include "semimark/wav_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace semimark;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  ConfigLayers layers;
  json cfg;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
}

json provenance(const Context& ctx, const std::string& checkpoint) {
  json p{{"config", ctx.cfg}};
  if (!checkpoint.empty()) {
    p["checkpoint"] = checkpoint;
    p["checkpoint_sha256"] = sha256_file(checkpoint);
  }
  return p;
}

std::string checkpoint_path(const Context& ctx, const std::string& flag) {
  std::string path = flag.empty() ? ctx.cfg.at("paths").at("checkpoint").get<std::string>() : flag;
  if (path.empty()) throw UsageError("no checkpoint given (--checkpoint or paths.checkpoint)");
  return path;
}

ReportFormat format_arg(const std::string& f) {
  try {
    return parse_format(f);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

// Brings a file to the model rate; returns the original for restoring.
dsp::Waveform at_rate(const dsp::Waveform& w, int rate) {
  return w.sample_rate == rate ? w : dsp::resample(w, rate);
}

dsp::Waveform back_to(const dsp::Waveform& w, const dsp::Waveform& like) {
  if (w.sample_rate == like.sample_rate) return w;
  auto out = dsp::resample(w, like.sample_rate);
  const int64_t n = like.samples.size(0);
  if (out.samples.size(0) > n) out.samples = out.samples.narrow(0, 0, n).clone();
  if (out.samples.size(0) < n)
    out.samples = torch::nn::functional::pad(out.samples,
                                             torch::nn::functional::PadFuncOptions({0, n - out.samples.size(0)}));
  return out;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus, index, out;
  int64_t steps = -1;
  int64_t max_new = 0;
  bool fresh = false;
  bool quiet = false;
};

int cmd_train(const Context& ctx, const TrainArgs& a) {
  const auto model_cfg = model_config_from(ctx.cfg);
  auto train_cfg = train_config_from(ctx.cfg);
  if (a.steps >= 0) train_cfg.steps = a.steps;
  const fs::path out = a.out.empty() ? fs::path(ctx.cfg.at("paths").at("out_dir").get<std::string>()) : fs::path(a.out);
  std::string corpus = a.corpus.empty() ? ctx.cfg.at("paths").at("corpus").get<std::string>() : a.corpus;
  std::string index_path = a.index.empty() ? ctx.cfg.at("paths").at("index").get<std::string>() : a.index;
  CorpusIndex index;
  if (!index_path.empty()) {
    index = load_index(index_path);
  } else if (!corpus.empty()) {
    index = build_index(corpus, SplitSpec{}, train_cfg.seed, model_cfg.sample_rate);
    fs::create_directories(out);
    save_index(out / "index.json", index);
  } else {
    throw UsageError("train needs --corpus DIR or --index FILE");
  }
  fs::create_directories(out);
  write_text(out / "config.json", ctx.cfg.dump(2) + "\n");
  std::cerr << "training on " << index.in_split(Split::kTrain).size() << " files ("
            << index.total_seconds(Split::kTrain) / 60.0 << " min), " << index.rejects.size() << " rejected\n";

  FitOptions opts;
  opts.out_dir = out;
  opts.resume = !a.fresh;
  opts.max_new_steps = a.max_new;
  if (!a.quiet)
    opts.on_step = [&](const StepMetrics& m) {
      if (m.step % 10 != 0 && !m.probe_snr_db) return;
      std::fprintf(stderr, "step %lld  L %.4f  Li %.2e  Ld %.3f  Lr %.4f  Lf %.4f  acc %.3f/%.3f  %.2fs",
                   static_cast<long long>(m.step), m.total, m.l_i, m.l_d, m.l_r, m.l_f, m.acc_benign,
                   m.acc_malicious, m.seconds);
      if (m.probe_snr_db) std::fprintf(stderr, "  snr %.2f dB", *m.probe_snr_db);
      std::fprintf(stderr, "\n");
    };
  fit(index, model_cfg, train_cfg, opts);
  std::cout << (out / "model.pt").string() << "\n";
  return kExitOk;
}

int cmd_embed(const Context& ctx, const std::string& in, const std::string& out, const std::string& hex,
              const std::string& ckpt_flag) {
  const auto ckpt = checkpoint_path(ctx, ckpt_flag);
  const auto model = load_checkpoint(ckpt);
  WatermarkMessage message;
  try {
    message = from_hex(hex, static_cast<int>(hex.size()) * 4);
  } catch (const InvalidInput& e) {
    throw UsageError(std::string("bad message: ") + e.what());
  }
  if (message.size() != model.config().message_bits)
    throw ConfigError("message has " + std::to_string(message.size()) + " bits but the checkpoint embeds " +
                      std::to_string(model.config().message_bits));
  const auto x = dsp::read_wav(in);
  const auto xr = at_rate(x, model.config().sample_rate);
  const auto y = back_to(model.embed(xr, message), x);
  dsp::write_wav(out, y);
  const double snr = snr_db(x, y);
  auto meta = provenance(ctx, ckpt);
  meta["input"] = in;
  meta["message"] = to_hex(message);
  meta["snr_db"] = snr;
  write_text(out + ".json", meta.dump(2) + "\n");
  std::printf("snr_db %.2f\n", snr);
  return kExitOk;
}

int cmd_extract(const Context& ctx, const std::string& in, const std::string& ckpt_flag, bool as_json) {
  const auto model = load_checkpoint(checkpoint_path(ctx, ckpt_flag));
  const auto y = at_rate(dsp::read_wav(in), model.config().sample_rate);
  const auto soft = model.extract(y);
  const auto hex = to_hex(harden(soft));
  if (as_json) {
    std::cout << json{{"message", hex}, {"confidences", soft.probs()}}.dump() << "\n";
  } else {
    std::printf("message %s\nconfidences", hex.c_str());
    for (double p : soft.probs()) std::printf(" %.4f", p);
    std::printf("\n");
  }
  return kExitOk;
}

int cmd_attack(const Context& ctx, const std::string& in, const std::string& out, const std::string& spec_text,
               uint64_t seed) {
  DistortionSpec spec;
  try {
    spec = json::parse(spec_text).get<DistortionSpec>();
    validate(spec);
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad --spec: ") + e.what());
  }
  const auto codecs = codecs_from(ctx.cfg);
  ApplyOptions opts;
  opts.codecs = &codecs;
  const auto y = apply(dsp::read_wav(in), spec, seed, opts);
  dsp::write_wav(out, y);
  auto meta = provenance(ctx, "");
  meta["input"] = in;
  meta["attack"] = spec;
  meta["seed"] = seed;
  write_text(out + ".json", meta.dump(2) + "\n");
  std::printf("%s\n", describe(spec).c_str());
  return kExitOk;
}

int cmd_bench(const Context& ctx, const std::string& manifest, const std::string& ckpt_flag,
              const std::string& format, const std::string& out) {
  const auto fmt = format_arg(format);
  const auto suite = load_manifest(manifest);
  const auto ckpt = checkpoint_path(ctx, ckpt_flag);
  const auto model = load_checkpoint(ckpt);
  auto options = bench_options_from(ctx.cfg);
  const auto codecs = codecs_from(ctx.cfg);
  const auto metrics = metric_adapters_from(ctx.cfg);
  options.codecs = &codecs;
  options.metrics = &metrics;
  auto report = run_suite(model, suite, options);
  report.provenance = provenance(ctx, ckpt);
  report.provenance["manifest"] = manifest;
  const auto text = render_report(report, fmt);
  if (out.empty())
    std::cout << text;
  else
    write_text(out, text);
  return report.any_failed() ? kExitFailure : kExitOk;
}

int cmd_report(const std::string& path, const std::string& format) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput(path + ": " + e.what());
  }
  const auto report = report_from_json(j);
  std::cout << render_report(report, format_arg(format));
  return report.any_failed() ? kExitFailure : kExitOk;
}

int cmd_index(const Context& ctx, const std::string& root, const std::string& out, uint64_t seed,
              std::vector<double> fractions) {
  if (fractions.size() != 3) throw UsageError("--split takes three fractions");
  const auto rate = model_config_from(ctx.cfg).sample_rate;
  const auto index = build_index(root, SplitSpec{fractions[0], fractions[1], fractions[2]}, seed, rate);
  save_index(out, index);
  std::printf("train %zu  val %zu  test %zu  rejected %zu\n", index.in_split(Split::kTrain).size(),
              index.in_split(Split::kVal).size(), index.in_split(Split::kTest).size(), index.rejects.size());
  for (const auto& r : index.rejects) std::fprintf(stderr, "rejected %s: %s\n", r.path.c_str(), r.reason.c_str());
  return kExitOk;
}

int cmd_manifest_b(const std::string& root, const std::string& out) {
  std::vector<std::string> unpaired;
  const auto suite = build_test_set_b_manifest(root, &unpaired);
  save_manifest(out, suite);
  std::printf("%zu items\n", suite.items.size());
  for (const auto& u : unpaired) std::fprintf(stderr, "unpaired %s\n", u.c_str());
  return kExitOk;
}

int cmd_synth(const std::string& dir, double minutes, uint64_t seed, int rate) {
  const auto files = synthesize_speech_corpus(dir, minutes, seed, 4.0, rate);
  std::printf("%zu files in %s\n", files.size(), dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv, char** envp) {
  CLI::App app{"semimark: semi-fragile speech watermarking"};
  app.require_subcommand(1);
  Context ctx;
  std::string config_file;
  int threads = 0;
  app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", ctx.layers.flags, "Override a config key (dotted.key=value); repeatable");
  app.add_option("--threads", threads, "Intra-op threads (0 keeps the library default)");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a model on a WAV corpus");
  c_train->add_option("--corpus", train.corpus, "Directory of WAV files");
  c_train->add_option("--index", train.index, "Prebuilt corpus index (JSON)");
  c_train->add_option("--out", train.out, "Output directory (default paths.out_dir)");
  c_train->add_option("--steps", train.steps, "Total steps (overrides train.steps)");
  c_train->add_option("--max-new-steps", train.max_new, "Stop after this many steps in this run");
  c_train->add_flag("--fresh", train.fresh, "Ignore an existing checkpoint in the output directory");
  c_train->add_flag("--quiet", train.quiet, "No per-step progress on stderr");

  std::string in, out, message, ckpt, spec, format = "text", manifest;
  uint64_t seed = 0;
  bool as_json = false;
  auto* c_embed = app.add_subcommand("embed", "Embed a message into a WAV file");
  c_embed->add_option("input", in, "Input WAV")->required()->check(CLI::ExistingFile);
  c_embed->add_option("output", out, "Output WAV")->required();
  c_embed->add_option("--message,-m", message, "Message as hex (16 bits = 4 digits)")->required();
  c_embed->add_option("--checkpoint,-c", ckpt, "Model checkpoint");

  auto* c_extract = app.add_subcommand("extract", "Extract the message from a WAV file");
  c_extract->add_option("input", in, "Input WAV")->required()->check(CLI::ExistingFile);
  c_extract->add_option("--checkpoint,-c", ckpt, "Model checkpoint");
  c_extract->add_flag("--json", as_json, "Print JSON");

  auto* c_attack = app.add_subcommand("attack", "Apply one distortion to a WAV file");
  c_attack->add_option("input", in, "Input WAV")->required()->check(CLI::ExistingFile);
  c_attack->add_option("output", out, "Output WAV")->required();
  c_attack->add_option("--spec", spec,
                       R"(Distortion as JSON, e.g. {"kind":"pitch_shift","semitones":2})")->required();
  c_attack->add_option("--seed", seed, "Seed for random distortions");

  auto* c_bench = app.add_subcommand("bench", "Run a benchmark manifest");
  c_bench->add_option("manifest", manifest, "Suite manifest (JSON lines)")->required()->check(CLI::ExistingFile);
  c_bench->add_option("--checkpoint,-c", ckpt, "Model checkpoint");
  c_bench->add_option("--format,-f", format, "text, csv or json");
  c_bench->add_option("--out,-o", out, "Report file (default stdout)");

  auto* c_report = app.add_subcommand("report", "Re-render a JSON report");
  c_report->add_option("report", in, "Report JSON")->required()->check(CLI::ExistingFile);
  c_report->add_option("--format,-f", format, "text, csv or json");

  std::string root;
  std::vector<double> fractions = {0.8, 0.1, 0.1};
  auto* c_index = app.add_subcommand("index", "Index a WAV corpus into train/val/test splits");
  c_index->add_option("root", root, "Corpus directory")->required();
  c_index->add_option("--out,-o", out, "Index file")->required();
  c_index->add_option("--seed", seed, "Split seed");
  c_index->add_option("--split", fractions, "Train, val and test fractions")->expected(3);

  auto* c_manifest = app.add_subcommand("manifest-b", "Build a Test Set B manifest from <root>/<label>/{original,converted}/");
  c_manifest->add_option("root", root, "Root directory")->required();
  c_manifest->add_option("--out,-o", out, "Manifest file")->required();

  double minutes = 30.0;
  int rate = dsp::kDefaultSampleRate;
  auto* c_synth = app.add_subcommand("synth-corpus", "Write a synthetic speech-like WAV corpus");
  c_synth->add_option("dir", root, "Output directory")->required();
  c_synth->add_option("--minutes", minutes, "Total duration");
  c_synth->add_option("--seed", seed, "Seed");
  c_synth->add_option("--rate", rate, "Sample rate");

  auto* c_config = app.add_subcommand("config", "Print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (threads > 0) torch::set_num_threads(threads);
    if (!config_file.empty()) ctx.layers.file = config_file;
    ctx.layers.env = env_assignments(envp);
    ctx.cfg = resolve_config(ctx.layers);

    if (*c_train) return cmd_train(ctx, train);
    if (*c_embed) return cmd_embed(ctx, in, out, message, ckpt);
    if (*c_extract) return cmd_extract(ctx, in, ckpt, as_json);
    if (*c_attack) return cmd_attack(ctx, in, out, spec, seed);
    if (*c_bench) return cmd_bench(ctx, manifest, ckpt, format, out);
    if (*c_report) return cmd_report(in, format);
    if (*c_index) return cmd_index(ctx, root, out, seed, fractions);
    if (*c_manifest) return cmd_manifest_b(root, out);
    if (*c_synth) return cmd_synth(root, minutes, seed, rate);
    if (*c_config) {
      std::cout << ctx.cfg.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
