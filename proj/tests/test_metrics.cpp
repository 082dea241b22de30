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


#include <cmath>

#include "doctest_torch.hpp"
#include "semimark/errors.hpp"
#include "semimark/metrics.hpp"
#include "support.hpp"

using namespace semimark;
using testing::gaussian;
using testing::sine;
using testing::tensor_of;

TEST_SUITE("metrics") {

TEST_CASE("snr of a sine plus noise") {
  // Unit-amplitude sine has power 1/2; noise of rms 0.1/sqrt(2) sits 20 dB below.
  const auto x = tensor_of(sine(440.0, 16000, 64000));
  auto noise = tensor_of(gaussian(64000, 3));
  noise = noise / noise.pow(2).mean().sqrt() * (0.1 / std::sqrt(2.0));
  CHECK(snr_db(x, x + noise) == doctest::Approx(20.0).epsilon(1e-9));
  const auto oracle = 10.0 * std::log10(x.pow(2).sum().item<double>() / noise.pow(2).sum().item<double>());
  CHECK(snr_db(x, x + noise) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("snr edge cases") {
  const auto x = tensor_of(sine(440.0, 16000, 1000));
  CHECK(snr_db(x, x) == kSnrCapDb);
  CHECK(snr_db(x, x + 1e-12) == kSnrCapDb);
  CHECK_THROWS_AS(snr_db(torch::zeros({10}), torch::ones({10})), InvalidInput);
  CHECK_THROWS_AS(snr_db(x, x.slice(0, 0, 999)), InvalidInput);
  CHECK_THROWS_AS(snr_db(dsp::make_waveform({1, 2}, 16000), dsp::make_waveform({1, 2}, 8000)), InvalidInput);
}

TEST_CASE("snr is invariant to joint scaling") {
  const auto x = tensor_of(gaussian(4000, 1));
  const auto y = x + tensor_of(gaussian(4000, 2, 0.05));
  for (double a : {1e-3, 0.5, 7.0}) CHECK(snr_db(a * x, a * y) == doctest::Approx(snr_db(x, y)).epsilon(1e-10));
}

TEST_CASE("snr decreases as noise grows") {
  const auto x = tensor_of(gaussian(4000, 1));
  const auto n = tensor_of(gaussian(4000, 2));
  double prev = 1e9;
  for (double s : {1e-4, 1e-3, 1e-2, 0.1, 1.0}) {
    const double v = snr_db(x, x + s * n);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("batched snr matches rows") {
  const auto x = tensor_of(gaussian(3000, 4)).view({3, 1000});
  const auto y = x + tensor_of(gaussian(3000, 5, 0.1)).view({3, 1000});
  const auto v = snr_db_batch(x, y);
  REQUIRE(v.size() == 3);
  for (int64_t b = 0; b < 3; ++b) CHECK(v[static_cast<size_t>(b)] == snr_db(x[b], y[b]));
}

TEST_CASE("adapters report scores or unavailability") {
  testing::Scratch dir("metrics");
  const auto ref = dsp::make_waveform(std::vector<float>(1600, 0.1f), 16000);
  AdapterRegistry empty;
  CHECK(!pesq_adapter(empty, ref, ref).ok());
  CHECK(!secs_adapter(empty, ref, ref).ok());

  const auto good = testing::write_script(dir / "pesq.sh", "test -s \"$1\" && test -s \"$2\" && echo \"MOS-LQO = 3.25\"");
  const auto out_of_range = testing::write_script(dir / "secs.sh", "echo 4.0");
  const auto broken = testing::write_script(dir / "broken.sh", "echo kaput >&2; exit 1");
  AdapterRegistry reg = AdapterRegistry::from_json(nlohmann::json{
      {"pesq", {{"command", {good.string(), "{ref}", "{test}"}}}},
      {"secs", {{"command", {out_of_range.string()}}}},
      {"other", {{"command", {broken.string()}}}}});
  const auto s = pesq_adapter(reg, ref, ref);
  REQUIRE(s.ok());
  CHECK(s.value == 3.25);
  CHECK_THROWS_AS(secs_adapter(reg, ref, ref), EnvironmentError);
  try {
    reg.score("other", ref, ref);
    FAIL("expected EnvironmentError");
  } catch (const EnvironmentError& e) {
    CHECK(std::string(e.what()).find("kaput") != std::string::npos);
  }
  CHECK_THROWS_AS(AdapterRegistry::from_json(nlohmann::json{{"x", {{"command", nlohmann::json::array()}}}}),
                  ConfigError);
}

TEST_CASE("accumulator averages and drops partial adapter columns") {
  MetricAccumulator acc;
  acc.add(1.0, 20.0, AdapterScore::of(3.0), AdapterScore::of(0.8));
  acc.add(0.5, 30.0, AdapterScore::of(4.0), AdapterScore::unavailable());
  const auto r = acc.report();
  CHECK(r.n_items == 2);
  CHECK(r.acc == 0.75);
  CHECK(r.snr_db == 25.0);
  REQUIRE(r.pesq.has_value());
  CHECK(*r.pesq == 3.5);
  CHECK(!r.secs.has_value());
  CHECK(MetricAccumulator().report().n_items == 0);
}

TEST_CASE("wilson interval matches the quadratic roots") {
  const double z = 1.959963984540054;
  for (auto [k, n] : {std::pair<int64_t, int64_t>{0, 10}, {3, 10}, {50, 100}, {97, 100}, {1600, 1600}, {812, 1000}}) {
    // Roots of (p - phat)^2 = z^2 p (1 - p) / n.
    const double ph = static_cast<double>(k) / n;
    const double a = 1.0 + z * z / n;
    const double b = -(2.0 * ph + z * z / n);
    const double c = ph * ph;
    const double disc = std::sqrt(b * b - 4.0 * a * c);
    const auto ci = wilson_interval(k, n);
    CHECK(ci.low == doctest::Approx(std::max(0.0, (-b - disc) / (2.0 * a))).epsilon(1e-9));
    CHECK(ci.high == doctest::Approx(std::min(1.0, (-b + disc) / (2.0 * a))).epsilon(1e-9));
    CHECK(ci.low <= ph);
    CHECK(ci.high >= ph);
  }
  CHECK(wilson_interval(0, 10).high == doctest::Approx(0.2775).epsilon(1e-3));
  const auto none = wilson_interval(0, 0);
  CHECK(none.low == 0.0);
  CHECK(none.high == 1.0);
  CHECK(wilson_interval(50, 100).high - wilson_interval(50, 100).low >
        wilson_interval(500, 1000).high - wilson_interval(500, 1000).low);
}

}  // TEST_SUITE
