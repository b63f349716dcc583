/* Copyright 2026 The boxcal Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "boxcal/calib_metrics.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"

#include "boxcal/rng.hpp"

using namespace boxcal;

namespace {

// 60 samples at conf 0.8 with precision 0.7, 40 at conf 0.3 with precision
// 0.4: ECE = 0.6*0.1 + 0.4*0.1 = 0.10.
std::vector<CalibrationSample> two_bin_fixture() {
  std::vector<CalibrationSample> samples;
  for (int i = 0; i < 60; ++i) samples.push_back({0.8, i < 42, 1});
  for (int i = 0; i < 40; ++i) samples.push_back({0.3, i < 16, 1});
  return samples;
}

std::vector<CalibrationSample> bernoulli_calibrated(std::size_t n,
                                                    std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CalibrationSample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double conf = rng.uniform();
    samples.push_back({conf, rng.bernoulli(conf), 1});
  }
  return samples;
}

}  // namespace

TEST_CASE("ece two-bin fixture evaluates to 0.10") {
  CHECK(std::abs(ece(two_bin_fixture()) - 0.10) < 1e-12);
}

TEST_CASE("ece degenerate fixtures") {
  std::vector<CalibrationSample> perfect(50, {1.0, true, 1});
  CHECK(ece(perfect) == 0.0);
  std::vector<CalibrationSample> inverted(50, {1.0, false, 1});
  CHECK(ece(inverted) == 1.0);
  CHECK_THROWS_AS((void)ece({}), ContractViolation);
}

TEST_CASE("ece bin membership: bins are (k/B, (k+1)/B], zero in bin 0") {
  // conf 0.1 and 0.1000…1 land in different bins; both perfectly labeled.
  std::vector<CalibrationSample> samples = {{0.1, false, 1}, {0.1, true, 1}};
  // bin (0,0.1]: mean conf 0.1, precision 0.5 -> gap 0.4
  CHECK(ece(samples) == doctest::Approx(0.4).epsilon(1e-12));
  std::vector<CalibrationSample> zeros = {{0.0, false, 1}};
  CHECK(ece(zeros) == 0.0);
}

TEST_CASE("ece invariant under permutation and duplication") {
  auto samples = two_bin_fixture();
  const double base = ece(samples);
  Rng rng(3);
  rng.shuffle(samples);
  CHECK(ece(samples) == base);
  auto doubled = samples;
  doubled.insert(doubled.end(), samples.begin(), samples.end());
  CHECK(ece(doubled) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("ece approaches zero on calibrated samples") {
  const auto samples = bernoulli_calibrated(1000000, 99);
  CHECK(ece(samples) < 0.01);
}

TEST_CASE("ace degenerate binnings") {
  // Fewer samples than bins: every sample its own bin.
  std::vector<CalibrationSample> tiny = {{0.2, false, 1}, {0.9, true, 1}};
  BinningSpec spec;
  spec.bin_count = 10;
  const double expected = (std::abs(0.0 - 0.2) + std::abs(1.0 - 0.9)) / 2.0;
  CHECK(ace(tiny, spec) == doctest::Approx(expected).epsilon(1e-15));

  // One bin: overall |precision - mean confidence|.
  spec.bin_count = 1;
  const auto fixture = two_bin_fixture();
  double conf_sum = 0.0;
  int tp = 0;
  for (const auto& s : fixture) {
    conf_sum += s.confidence;
    tp += s.tp ? 1 : 0;
  }
  const double expected_one =
      std::abs(tp / 100.0 - conf_sum / 100.0);
  CHECK(ace(fixture, spec) == doctest::Approx(expected_one).epsilon(1e-15));
}

TEST_CASE("ace stays close to ece on uniform calibrated confidences") {
  const auto samples = bernoulli_calibrated(100000, 17);
  CHECK(std::abs(ace(samples) - ece(samples)) < 0.02);
}

TEST_CASE("sce equals ece for a single category and averages unweighted") {
  const auto fixture = two_bin_fixture();
  CHECK(sce(fixture) == doctest::Approx(ece(fixture)).epsilon(1e-15));

  // Category 1: 20 samples conf 0.75 with 13 tp -> gap 0.10.
  // Category 2: 20 samples conf 0.45 with 3 tp  -> gap 0.30.
  std::vector<CalibrationSample> samples;
  for (int i = 0; i < 20; ++i) samples.push_back({0.75, i < 13, 1});
  for (int i = 0; i < 20; ++i) samples.push_back({0.45, i < 3, 2});
  CHECK(sce(samples) == doctest::Approx(0.20).epsilon(1e-12));
}

TEST_CASE("nll fixtures") {
  std::vector<CalibrationSample> half = {{0.5, true, 1}};
  CHECK(nll(half) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  std::vector<CalibrationSample> exact = {{1.0, true, 1}, {0.0, false, 1}};
  CHECK(nll(exact) == doctest::Approx(0.0).epsilon(1e-9));

  std::vector<CalibrationSample> mixed;
  for (int i = 0; i < 10; ++i) mixed.push_back({0.9, i < 9, 1});
  const double expected = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1));
  CHECK(nll(mixed) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(nll(mixed) == doctest::Approx(0.3251).epsilon(1e-3));
}

TEST_CASE("brier fixtures") {
  std::vector<CalibrationSample> exact = {{1.0, true, 1}, {0.0, false, 1}};
  CHECK(brier(exact) == 0.0);
  std::vector<CalibrationSample> half(10, {0.5, true, 1});
  half.resize(20, {0.5, false, 1});
  CHECK(brier(half) == 0.25);
  std::vector<CalibrationSample> mixed = {{0.2, false, 1}, {0.8, true, 1}};
  CHECK(brier(mixed) == doctest::Approx(0.04).epsilon(1e-15));
}

TEST_CASE("metric ranges") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CalibrationSample> samples;
    const int n = static_cast<int>(rng.uniform_int(1, 200));
    for (int i = 0; i < n; ++i) {
      samples.push_back({rng.uniform(), rng.bernoulli(0.4),
                         static_cast<int>(rng.uniform_int(1, 3))});
    }
    for (double v : {ece(samples), ace(samples), sce(samples)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(nll(samples) >= 0.0);
    CHECK(brier(samples) >= 0.0);
    CHECK(brier(samples) <= 1.0);
  }
}

TEST_CASE("reliability table sums counts and serializes") {
  const auto fixture = two_bin_fixture();
  const ReliabilityTable table = reliability_table(fixture);
  std::size_t total = 0;
  for (const auto& b : table.bins) {
    total += b.count;
    CHECK(b.precision >= 0.0);
    CHECK(b.precision <= 1.0);
  }
  CHECK(total == fixture.size());
  CHECK(table.ece == doctest::Approx(0.10).epsilon(1e-12));

  const std::string csv = reliability_csv(table);
  CHECK(csv.rfind("bin_low,bin_high,mean_conf,precision,count\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);  // header + 10 bins
}
