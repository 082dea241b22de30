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


#ifndef SEMIMARK_BENCHMARK_HPP
#define SEMIMARK_BENCHMARK_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "semimark/distortions.hpp"
#include "semimark/metrics.hpp"
#include "semimark/model.hpp"

namespace semimark {

enum class SuiteKind { kTestSetA, kTestSetB };
std::string suite_name(SuiteKind k);
SuiteKind parse_suite(const std::string& s);

// Test Set A items name an attack applied locally; Test Set B items pair a
// watermarked original with an externally converted file.
struct BenchItem {
  std::string original;
  std::string converted;
  std::optional<DistortionSpec> attack;
  DistortionClass cls = DistortionClass::kBenign;
  std::string label;
  // Embedded message (hex) for Test Set B; read from <original>.hex when
  // absent, else taken from the original's own extraction.
  std::string message_hex;
  // Free text (how the conversion was produced); carried, not interpreted.
  std::string provenance;
};

struct BenchSuite {
  SuiteKind kind = SuiteKind::kTestSetA;
  std::vector<BenchItem> items;
};

// Line-delimited JSON. Blank lines and lines starting with '#' are ignored.
// An optional {"suite": "test_set_A" | "test_set_B"} line sets the kind;
// every other line is one item:
//   {"label", "class", "original", "attack": {...}}            (A)
//   {"label", "class", "original", "converted", "message",
//    "provenance"}                                             (B)
// Relative paths resolve against base_dir. Errors throw InvalidInput
// prefixed with "line N:".
BenchSuite parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});
BenchSuite load_manifest(const std::filesystem::path& path);
std::string format_manifest(const BenchSuite& suite);
void save_manifest(const std::filesystem::path& path, const BenchSuite& suite);

// Scans <root>/<label>/{original,converted}/ pairs (matched by file stem).
// <root>/<label>/meta.json may give {"class": ..., "provenance": ...};
// the class defaults to eval_only. Unpaired files go to `unpaired`.
BenchSuite build_test_set_b_manifest(const std::filesystem::path& root,
                                     std::vector<std::string>* unpaired = nullptr);

// Every (clip, attack) pair as a Test Set A suite.
BenchSuite make_test_set_a(const std::vector<std::string>& clips,
                           const std::vector<std::pair<std::string, DistortionSpec>>& attacks);

struct Thresholds {
  double fragile = 0.65;
  double robust = 0.90;
};

enum class Expected { kFragile, kRobust };
enum class Verdict { kPass, kFail, kSkipped };
std::string expected_name(Expected e);
std::string verdict_name(Verdict v);

Expected expected_behavior(DistortionClass cls);
// Malicious rows pass at acc <= fragile; benign and eval_only rows pass at
// acc >= robust.
Verdict judge(DistortionClass cls, double acc, const Thresholds& t);

struct BenchRow {
  std::string label;
  DistortionClass cls = DistortionClass::kBenign;
  Expected expected = Expected::kRobust;
  Verdict verdict = Verdict::kSkipped;
  std::optional<double> acc;
  int n_items = 0;
  int64_t n_bits = 0;
  int64_t correct_bits = 0;
  std::optional<Interval> ci;  // Wilson 95% over bits
  std::optional<double> snr_db, pesq, secs;
  int skipped_items = 0;
  std::string note;
};

struct BenchReport {
  SuiteKind kind = SuiteKind::kTestSetA;
  Thresholds thresholds;
  uint64_t seed = 0;
  std::vector<BenchRow> rows;
  nlohmann::json provenance;  // null when absent

  bool any_failed() const;
};

struct BenchOptions {
  uint64_t seed = 0;
  Thresholds thresholds;
  int max_clips = 500;
  int workers = 1;
  const CodecRegistry* codecs = nullptr;
  const AdapterRegistry* metrics = nullptr;
};

// Embeds one seeded random message per distinct original, applies the
// item's attack, extracts, and groups bit accuracy by label (rows in order
// of first appearance). Quality columns describe the un-attacked
// watermarked audio. Rows whose codec adapter is missing are skipped.
BenchReport run_test_set_a(const ModelBundle& model, const BenchSuite& suite, const BenchOptions& options);
// Extracts from converted files and compares with the embedded message.
// Unreadable items are skipped and counted per row.
BenchReport run_test_set_b(const ModelBundle& model, const BenchSuite& suite, const BenchOptions& options);
BenchReport run_suite(const ModelBundle& model, const BenchSuite& suite, const BenchOptions& options);

enum class ReportFormat { kText, kCsv, kJson };
ReportFormat parse_format(const std::string& s);

// Numbers at 4 decimals. Missing values render as "—" (text), an empty
// field (csv) or null (json).
std::string render_report(const BenchReport& report, ReportFormat format);
nlohmann::json report_to_json(const BenchReport& report);
// Inverse of report_to_json (values keep their 4-decimal rounding).
BenchReport report_from_json(const nlohmann::json& j);

}  // namespace semimark

#endif  // SEMIMARK_BENCHMARK_HPP
