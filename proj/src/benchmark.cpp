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


#include "semimark/benchmark.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "semimark/errors.hpp"
#include "semimark/seeding.hpp"
#include "semimark/wav_io.hpp"

namespace semimark {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string suite_name(SuiteKind k) { return k == SuiteKind::kTestSetA ? "test_set_A" : "test_set_B"; }

SuiteKind parse_suite(const std::string& s) {
  if (s == "test_set_A" || s == "A") return SuiteKind::kTestSetA;
  if (s == "test_set_B" || s == "B") return SuiteKind::kTestSetB;
  throw InvalidInput("unknown suite \"" + s + "\"");
}

std::string expected_name(Expected e) { return e == Expected::kFragile ? "Fragile" : "Robust"; }

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kSkipped: return "skipped";
  }
  return "skipped";
}

Expected expected_behavior(DistortionClass cls) {
  return cls == DistortionClass::kMalicious ? Expected::kFragile : Expected::kRobust;
}

Verdict judge(DistortionClass cls, double acc, const Thresholds& t) {
  if (cls == DistortionClass::kMalicious) return acc <= t.fragile ? Verdict::kPass : Verdict::kFail;
  return acc >= t.robust ? Verdict::kPass : Verdict::kFail;
}

bool BenchReport::any_failed() const {
  for (const auto& r : rows)
    if (r.verdict == Verdict::kFail) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Manifests

namespace {

std::string resolve(const std::string& p, const fs::path& base) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

BenchItem parse_item(const json& j, const fs::path& base) {
  BenchItem item;
  item.label = j.at("label").get<std::string>();
  if (item.label.empty()) throw InvalidInput("empty label");
  item.cls = parse_class(j.at("class").get<std::string>());
  item.original = resolve(j.at("original").get<std::string>(), base);
  item.converted = resolve(j.value("converted", std::string()), base);
  if (j.contains("attack")) {
    item.attack = j.at("attack").get<DistortionSpec>();
    validate(*item.attack);
    if (item.attack->cls != item.cls)
      throw InvalidInput("class " + class_name(item.cls) + " contradicts attack " + describe(*item.attack) + " (" +
                         class_name(item.attack->cls) + ")");
  }
  item.message_hex = j.value("message", std::string());
  item.provenance = j.value("provenance", std::string());
  if (!item.message_hex.empty()) from_hex(item.message_hex, static_cast<int>(item.message_hex.size()) * 4);
  return item;
}

}  // namespace

BenchSuite parse_manifest(const std::string& text, const fs::path& base_dir) {
  BenchSuite suite;
  bool kind_set = false;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      const auto j = json::parse(line);
      if (!j.is_object()) throw InvalidInput("expected a JSON object");
      if (j.contains("suite") && j.size() == 1) {
        suite.kind = parse_suite(j.at("suite").get<std::string>());
        kind_set = true;
        continue;
      }
      suite.items.push_back(parse_item(j, base_dir));
    } catch (const std::exception& e) {
      throw InvalidInput("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!kind_set && !suite.items.empty())
    suite.kind = suite.items.front().attack ? SuiteKind::kTestSetA : SuiteKind::kTestSetB;
  for (size_t i = 0; i < suite.items.size(); ++i) {
    const auto& item = suite.items[i];
    const bool a = suite.kind == SuiteKind::kTestSetA;
    if (a && !item.attack)
      throw InvalidInput("item " + std::to_string(i + 1) + " (" + item.label + "): test_set_A items need an attack");
    if (!a && item.converted.empty())
      throw InvalidInput("item " + std::to_string(i + 1) + " (" + item.label +
                         "): test_set_B items need a converted path");
  }
  return suite;
}

BenchSuite load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_manifest(ss.str(), path.parent_path());
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

std::string format_manifest(const BenchSuite& suite) {
  std::string out = json{{"suite", suite_name(suite.kind)}}.dump() + "\n";
  for (const auto& item : suite.items) {
    json j{{"label", item.label}, {"class", class_name(item.cls)}, {"original", item.original}};
    if (!item.converted.empty()) j["converted"] = item.converted;
    if (item.attack) j["attack"] = *item.attack;
    if (!item.message_hex.empty()) j["message"] = item.message_hex;
    if (!item.provenance.empty()) j["provenance"] = item.provenance;
    out += j.dump() + "\n";
  }
  return out;
}

void save_manifest(const fs::path& path, const BenchSuite& suite) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write manifest " + path.string());
  out << format_manifest(suite);
}

BenchSuite build_test_set_b_manifest(const fs::path& root, std::vector<std::string>* unpaired) {
  if (!fs::is_directory(root)) throw InvalidInput("not a directory: " + root.string());
  BenchSuite suite;
  suite.kind = SuiteKind::kTestSetB;
  std::vector<fs::path> labels;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) labels.push_back(e.path());
  std::sort(labels.begin(), labels.end());
  auto wavs = [](const fs::path& dir) {
    std::map<std::string, fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".wav") out[e.path().stem().string()] = e.path();
    return out;
  };
  for (const auto& dir : labels) {
    if (!fs::is_directory(dir / "original") && !fs::is_directory(dir / "converted")) continue;
    DistortionClass cls = DistortionClass::kEvalOnly;
    std::string provenance;
    if (fs::exists(dir / "meta.json")) {
      std::ifstream in(dir / "meta.json");
      const auto meta = json::parse(in);
      if (meta.contains("class")) cls = parse_class(meta.at("class").get<std::string>());
      provenance = meta.value("provenance", std::string());
    }
    const auto originals = wavs(dir / "original");
    const auto converted = wavs(dir / "converted");
    for (const auto& [stem, path] : originals) {
      auto it = converted.find(stem);
      if (it == converted.end()) {
        if (unpaired) unpaired->push_back(path.string());
        continue;
      }
      BenchItem item;
      item.label = dir.filename().string();
      item.cls = cls;
      item.original = path.string();
      item.converted = it->second.string();
      item.provenance = provenance;
      auto hex_path = path;
      hex_path.replace_extension(".hex");
      if (fs::exists(hex_path)) {
        std::ifstream in(hex_path);
        in >> item.message_hex;
      }
      suite.items.push_back(std::move(item));
    }
    if (unpaired)
      for (const auto& [stem, path] : converted)
        if (!originals.count(stem)) unpaired->push_back(path.string());
  }
  return suite;
}

BenchSuite make_test_set_a(const std::vector<std::string>& clips,
                           const std::vector<std::pair<std::string, DistortionSpec>>& attacks) {
  BenchSuite suite;
  suite.kind = SuiteKind::kTestSetA;
  for (const auto& [label, spec] : attacks)
    for (const auto& clip : clips) {
      BenchItem item;
      item.original = clip;
      item.attack = spec;
      item.cls = spec.cls;
      item.label = label;
      suite.items.push_back(std::move(item));
    }
  return suite;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

struct ItemResult {
  bool done = false;
  bool skipped = false;
  int64_t correct = 0;
  int64_t bits = 0;
  std::optional<double> snr, pesq, secs;
};

template <class Fn>
void parallel_for(size_t n, int workers, Fn fn) {
  const size_t w = std::max<size_t>(1, std::min<size_t>(n, static_cast<size_t>(std::max(1, workers))));
  if (w <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::exception_ptr error;
  size_t next = 0;
  std::vector<std::thread> pool;
  for (size_t t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (;;) {
        size_t i;
        {
          std::lock_guard lock(mu);
          if (next >= n || error) return;
          i = next++;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

dsp::Waveform load_at_rate(const std::string& path, int rate) {
  auto w = dsp::read_wav(path);
  return w.sample_rate == rate ? w : dsp::resample(w, rate);
}

int64_t count_correct(const WatermarkMessage& truth, const SoftMessage& soft) {
  const auto hard = harden(soft);
  int64_t c = 0;
  for (int i = 0; i < truth.size(); ++i) c += truth[i] == hard[i];
  return c;
}

bool is_codec(const DistortionSpec& s) {
  return s.kind() == DistortionKind::kCodecMp3 || s.kind() == DistortionKind::kCodecOpus;
}

bool codec_available(const DistortionSpec& s, const CodecRegistry* reg) {
  if (!reg) return false;
  return reg->codecs.count(s.kind() == DistortionKind::kCodecMp3 ? "mp3" : "opus") != 0;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

BenchReport assemble(const BenchSuite& suite, const std::vector<ItemResult>& results,
                     const std::vector<bool>& included, const BenchOptions& options) {
  BenchReport report;
  report.kind = suite.kind;
  report.thresholds = options.thresholds;
  report.seed = options.seed;
  std::map<std::string, size_t> row_of;
  struct Acc {
    std::vector<double> snr, pesq, secs;
    int pesq_missing = 0, secs_missing = 0;
  };
  std::vector<Acc> quality;
  for (size_t i = 0; i < suite.items.size(); ++i) {
    if (!included[i]) continue;
    const auto& item = suite.items[i];
    auto [it, fresh] = row_of.emplace(item.label, report.rows.size());
    if (fresh) {
      BenchRow row;
      row.label = item.label;
      row.cls = item.cls;
      row.expected = expected_behavior(item.cls);
      report.rows.push_back(row);
      quality.emplace_back();
    } else if (report.rows[it->second].cls != item.cls) {
      throw InvalidInput("label \"" + item.label + "\" appears with two classes");
    }
    auto& row = report.rows[it->second];
    auto& q = quality[it->second];
    const auto& r = results[i];
    if (r.skipped || !r.done) {
      ++row.skipped_items;
      continue;
    }
    ++row.n_items;
    row.n_bits += r.bits;
    row.correct_bits += r.correct;
    if (r.snr) q.snr.push_back(*r.snr);
    if (r.pesq) q.pesq.push_back(*r.pesq); else ++q.pesq_missing;
    if (r.secs) q.secs.push_back(*r.secs); else ++q.secs_missing;
  }
  for (size_t k = 0; k < report.rows.size(); ++k) {
    auto& row = report.rows[k];
    const auto& q = quality[k];
    if (row.n_items == 0) {
      row.verdict = Verdict::kSkipped;
      if (row.note.empty()) row.note = "skipped: no usable items";
      continue;
    }
    row.acc = static_cast<double>(row.correct_bits) / static_cast<double>(row.n_bits);
    row.ci = wilson_interval(row.correct_bits, row.n_bits);
    row.verdict = judge(row.cls, *row.acc, options.thresholds);
    row.snr_db = mean_of(q.snr);
    if (q.pesq_missing == 0) row.pesq = mean_of(q.pesq);
    if (q.secs_missing == 0) row.secs = mean_of(q.secs);
    if (row.skipped_items > 0) row.note = std::to_string(row.skipped_items) + " item(s) skipped";
  }
  return report;
}

void check_model_bits(const ModelBundle& model) {
  if (model.config().message_bits < 1) throw ConfigError("model has no message bits");
}

}  // namespace

BenchReport run_test_set_a(const ModelBundle& model, const BenchSuite& suite, const BenchOptions& options) {
  check_model_bits(model);
  const int rate = model.config().sample_rate;
  const int bits = model.config().message_bits;

  std::vector<std::string> originals;
  std::map<std::string, size_t> original_index;
  for (const auto& item : suite.items) {
    if (!item.attack) throw InvalidInput("test_set_A item \"" + item.label + "\" has no attack");
    if (original_index.emplace(item.original, originals.size()).second) originals.push_back(item.original);
  }
  const size_t n_clips = std::min(originals.size(), static_cast<size_t>(std::max(0, options.max_clips)));
  std::vector<bool> included(suite.items.size());
  std::vector<std::vector<size_t>> items_of(n_clips);
  for (size_t i = 0; i < suite.items.size(); ++i) {
    const size_t c = original_index.at(suite.items[i].original);
    included[i] = c < n_clips;
    if (included[i]) items_of[c].push_back(i);
  }

  std::vector<ItemResult> results(suite.items.size());
  ApplyOptions apply_opts;
  apply_opts.codecs = options.codecs;
  parallel_for(n_clips, options.workers, [&](size_t c) {
    const auto x = load_at_rate(originals[c], rate);
    const auto message = random_message(bits, derive_seed(options.seed, "message", c));
    const auto xw = model.embed(x, message);
    const double snr = snr_db(x, xw);
    std::optional<double> pesq, secs;
    if (options.metrics) {
      const auto p = pesq_adapter(*options.metrics, x, xw);
      const auto s = secs_adapter(*options.metrics, x, xw);
      if (p.ok()) pesq = p.value;
      if (s.ok()) secs = s.value;
    }
    for (size_t i : items_of[c]) {
      auto& r = results[i];
      const auto& spec = *suite.items[i].attack;
      if (is_codec(spec) && !codec_available(spec, options.codecs)) {
        r.skipped = true;
        continue;
      }
      const auto y = apply(xw, spec, derive_seed(options.seed, "attack", i), apply_opts);
      r.correct = count_correct(message, model.extract(y));
      r.bits = bits;
      r.snr = snr;
      r.pesq = pesq;
      r.secs = secs;
      r.done = true;
    }
  });

  auto report = assemble(suite, results, included, options);
  for (auto& row : report.rows) {
    if (row.n_items > 0) continue;
    for (size_t i = 0; i < suite.items.size(); ++i)
      if (suite.items[i].label == row.label && is_codec(*suite.items[i].attack) &&
          !codec_available(*suite.items[i].attack, options.codecs)) {
        row.note = "skipped: adapter missing";
        break;
      }
  }
  return report;
}

BenchReport run_test_set_b(const ModelBundle& model, const BenchSuite& suite, const BenchOptions& options) {
  check_model_bits(model);
  const int rate = model.config().sample_rate;
  const int bits = model.config().message_bits;
  std::vector<ItemResult> results(suite.items.size());
  std::vector<bool> included(suite.items.size(), true);
  parallel_for(suite.items.size(), options.workers, [&](size_t i) {
    const auto& item = suite.items[i];
    auto& r = results[i];
    try {
      WatermarkMessage truth;
      std::string hex = item.message_hex;
      if (hex.empty()) {
        auto hex_path = fs::path(item.original);
        hex_path.replace_extension(".hex");
        if (fs::exists(hex_path)) std::ifstream(hex_path) >> hex;
      }
      if (!hex.empty())
        truth = from_hex(hex, bits);
      else
        truth = harden(model.extract(load_at_rate(item.original, rate)));
      const auto y = load_at_rate(item.converted, rate);
      r.correct = count_correct(truth, model.extract(y));
      r.bits = bits;
      r.done = true;
    } catch (const InvalidInput&) {
      r.skipped = true;
    }
  });
  return assemble(suite, results, included, options);
}

BenchReport run_suite(const ModelBundle& model, const BenchSuite& suite, const BenchOptions& options) {
  return suite.kind == SuiteKind::kTestSetA ? run_test_set_a(model, suite, options)
                                            : run_test_set_b(model, suite, options);
}

// ---------------------------------------------------------------------------
// Rendering

ReportFormat parse_format(const std::string& s) {
  if (s == "text" || s == "table_text" || s == "table") return ReportFormat::kText;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  throw InvalidInput("unknown report format \"" + s + "\" (text, csv, json)");
}

namespace {

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

double round4(double v) { return std::stod(fixed4(v)); }

json num(const std::optional<double>& v) { return v ? json(round4(*v)) : json(nullptr); }

const std::vector<std::string> kColumns = {"label", "class",   "expected", "n_items", "acc",  "ci_low",
                                           "ci_high", "snr_db", "pesq",     "secs",    "verdict", "note"};

std::vector<std::string> cells(const BenchRow& r, const std::string& missing) {
  auto opt = [&](const std::optional<double>& v) { return v ? fixed4(*v) : missing; };
  return {r.label,
          class_name(r.cls),
          expected_name(r.expected),
          std::to_string(r.n_items),
          opt(r.acc),
          r.ci ? fixed4(r.ci->low) : missing,
          r.ci ? fixed4(r.ci->high) : missing,
          opt(r.snr_db),
          opt(r.pesq),
          opt(r.secs),
          verdict_name(r.verdict),
          r.note};
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

size_t display_width(const std::string& s) {
  size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

}  // namespace

json report_to_json(const BenchReport& report) {
  json j{{"suite", suite_name(report.kind)},
         {"thresholds", {{"fragile", report.thresholds.fragile}, {"robust", report.thresholds.robust}}},
         {"seed", report.seed}};
  if (!report.provenance.is_null()) j["provenance"] = report.provenance;
  j["rows"] = json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"label", r.label},
                         {"class", class_name(r.cls)},
                         {"expected", expected_name(r.expected)},
                         {"n_items", r.n_items},
                         {"n_bits", r.n_bits},
                         {"acc", num(r.acc)},
                         {"ci_low", r.ci ? json(round4(r.ci->low)) : json(nullptr)},
                         {"ci_high", r.ci ? json(round4(r.ci->high)) : json(nullptr)},
                         {"snr_db", num(r.snr_db)},
                         {"pesq", num(r.pesq)},
                         {"secs", num(r.secs)},
                         {"verdict", verdict_name(r.verdict)},
                         {"note", r.note}});
  }
  return j;
}

BenchReport report_from_json(const json& j) {
  try {
    BenchReport r;
    r.kind = parse_suite(j.at("suite").get<std::string>());
    r.thresholds.fragile = j.at("thresholds").at("fragile").get<double>();
    r.thresholds.robust = j.at("thresholds").at("robust").get<double>();
    r.seed = j.value("seed", uint64_t{0});
    if (j.contains("provenance")) r.provenance = j.at("provenance");
    auto opt = [](const json& v) { return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()); };
    for (const auto& row : j.at("rows")) {
      BenchRow b;
      b.label = row.at("label").get<std::string>();
      b.cls = parse_class(row.at("class").get<std::string>());
      b.expected = row.at("expected").get<std::string>() == "Fragile" ? Expected::kFragile : Expected::kRobust;
      b.n_items = row.at("n_items").get<int>();
      b.n_bits = row.value("n_bits", int64_t{0});
      b.acc = opt(row.at("acc"));
      if (!row.at("ci_low").is_null()) b.ci = Interval{row.at("ci_low").get<double>(), row.at("ci_high").get<double>()};
      b.snr_db = opt(row.at("snr_db"));
      b.pesq = opt(row.at("pesq"));
      b.secs = opt(row.at("secs"));
      const auto v = row.at("verdict").get<std::string>();
      b.verdict = v == "pass" ? Verdict::kPass : v == "fail" ? Verdict::kFail : Verdict::kSkipped;
      b.note = row.value("note", std::string());
      if (b.acc) b.correct_bits = static_cast<int64_t>(std::llround(*b.acc * static_cast<double>(b.n_bits)));
      r.rows.push_back(std::move(b));
    }
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed report: ") + e.what());
  }
}

std::string render_report(const BenchReport& report, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::kJson:
      out << report_to_json(report).dump(2) << "\n";
      break;
    case ReportFormat::kCsv: {
      for (size_t c = 0; c < kColumns.size(); ++c) out << (c ? "," : "") << kColumns[c];
      out << "\n";
      for (const auto& r : report.rows) {
        const auto row = cells(r, "");
        for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_escape(row[c]);
        out << "\n";
      }
      break;
    }
    case ReportFormat::kText: {
      out << suite_name(report.kind) << "  fragile<=" << fixed4(report.thresholds.fragile)
          << "  robust>=" << fixed4(report.thresholds.robust) << "  seed=" << report.seed << "\n";
      if (!report.provenance.is_null()) out << "provenance: " << report.provenance.dump() << "\n";
      std::vector<std::vector<std::string>> table{kColumns};
      for (const auto& r : report.rows) table.push_back(cells(r, "—"));
      std::vector<size_t> width(kColumns.size(), 0);
      for (const auto& row : table)
        for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], display_width(row[c]));
      for (const auto& row : table) {
        std::string line;
        for (size_t c = 0; c < row.size(); ++c) {
          line += row[c];
          if (c + 1 < row.size()) line += std::string(width[c] - display_width(row[c]) + 2, ' ');
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << "\n";
      }
      break;
    }
  }
  return out.str();
}

}  // namespace semimark
