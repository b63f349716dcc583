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

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace boxcal {

void BinningSpec::validate() const {
  if (bin_count < 1) throw ContractViolation("binning: bin_count must be >= 1");
}

namespace {

void require_samples(std::span<const CalibrationSample> samples) {
  if (samples.empty()) {
    throw ContractViolation("calibration metrics: empty sample list");
  }
}

int equal_width_bin(double conf, int bins) {
  if (conf <= 0.0) return 0;
  const int idx = static_cast<int>(std::ceil(conf * bins)) - 1;
  return std::clamp(idx, 0, bins - 1);
}

struct BinAccumulator {
  double conf_sum = 0.0;
  std::size_t tp_count = 0;
  std::size_t count = 0;
};

double gap_from_bins(const std::vector<BinAccumulator>& bins, std::size_t total) {
  double gap = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    const double conf = b.conf_sum / static_cast<double>(b.count);
    const double prec =
        static_cast<double>(b.tp_count) / static_cast<double>(b.count);
    gap += static_cast<double>(b.count) / static_cast<double>(total) *
           std::abs(prec - conf);
  }
  return gap;
}

}  // namespace

double ece(std::span<const CalibrationSample> samples, const BinningSpec& spec) {
  spec.validate();
  require_samples(samples);
  std::vector<BinAccumulator> bins(static_cast<std::size_t>(spec.bin_count));
  for (const auto& s : samples) {
    auto& b = bins[static_cast<std::size_t>(
        equal_width_bin(s.confidence, spec.bin_count))];
    b.conf_sum += s.confidence;
    b.tp_count += s.tp ? 1 : 0;
    b.count += 1;
  }
  return gap_from_bins(bins, samples.size());
}

double ace(std::span<const CalibrationSample> samples, const BinningSpec& spec) {
  spec.validate();
  require_samples(samples);
  std::vector<CalibrationSample> sorted(samples.begin(), samples.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const CalibrationSample& a, const CalibrationSample& b) {
                     return a.confidence < b.confidence;
                   });
  const std::size_t n = sorted.size();
  const std::size_t b_count =
      std::min<std::size_t>(static_cast<std::size_t>(spec.bin_count), n);
  const std::size_t base = n / b_count;
  const std::size_t extra = n % b_count;  // first `extra` bins get one more

  std::vector<BinAccumulator> bins(b_count);
  std::size_t pos = 0;
  for (std::size_t bi = 0; bi < b_count; ++bi) {
    const std::size_t take = base + (bi < extra ? 1 : 0);
    for (std::size_t i = 0; i < take; ++i, ++pos) {
      bins[bi].conf_sum += sorted[pos].confidence;
      bins[bi].tp_count += sorted[pos].tp ? 1 : 0;
      bins[bi].count += 1;
    }
  }
  return gap_from_bins(bins, n);
}

double sce(std::span<const CalibrationSample> samples, const BinningSpec& spec) {
  spec.validate();
  require_samples(samples);
  std::map<int, std::vector<CalibrationSample>> by_category;
  for (const auto& s : samples) by_category[s.category].push_back(s);
  double sum = 0.0;
  for (const auto& [category, group] : by_category) {
    sum += ece(group, spec);
  }
  return sum / static_cast<double>(by_category.size());
}

double nll(std::span<const CalibrationSample> samples) {
  require_samples(samples);
  constexpr double kClip = 1e-12;
  double sum = 0.0;
  for (const auto& s : samples) {
    const double p = std::clamp(s.confidence, kClip, 1.0 - kClip);
    sum += s.tp ? -std::log(p) : -std::log1p(-p);
  }
  return sum / static_cast<double>(samples.size());
}

double brier(std::span<const CalibrationSample> samples) {
  require_samples(samples);
  double sum = 0.0;
  for (const auto& s : samples) {
    const double r = (s.tp ? 1.0 : 0.0) - s.confidence;
    sum += r * r;
  }
  return sum / static_cast<double>(samples.size());
}

ReliabilityTable reliability_table(std::span<const CalibrationSample> samples,
                                   const BinningSpec& spec) {
  spec.validate();
  require_samples(samples);
  const int b_count = spec.bin_count;
  std::vector<BinAccumulator> acc(static_cast<std::size_t>(b_count));
  for (const auto& s : samples) {
    auto& b =
        acc[static_cast<std::size_t>(equal_width_bin(s.confidence, b_count))];
    b.conf_sum += s.confidence;
    b.tp_count += s.tp ? 1 : 0;
    b.count += 1;
  }
  ReliabilityTable table;
  for (int bi = 0; bi < b_count; ++bi) {
    const auto& a = acc[static_cast<std::size_t>(bi)];
    ReliabilityBin bin;
    bin.bin_low = static_cast<double>(bi) / b_count;
    bin.bin_high = static_cast<double>(bi + 1) / b_count;
    bin.count = a.count;
    if (a.count > 0) {
      bin.mean_conf = a.conf_sum / static_cast<double>(a.count);
      bin.precision =
          static_cast<double>(a.tp_count) / static_cast<double>(a.count);
    }
    table.bins.push_back(bin);
  }
  table.ece = ece(samples, spec);
  table.ace = ace(samples, spec);
  table.sce = sce(samples, spec);
  table.nll = nll(samples);
  table.brier = brier(samples);
  return table;
}

std::string reliability_csv(const ReliabilityTable& table) {
  std::ostringstream out;
  out << "bin_low,bin_high,mean_conf,precision,count\n";
  out.precision(17);
  for (const auto& b : table.bins) {
    out << b.bin_low << ',' << b.bin_high << ',' << b.mean_conf << ','
        << b.precision << ',' << b.count << '\n';
  }
  return out.str();
}

}  // namespace boxcal
