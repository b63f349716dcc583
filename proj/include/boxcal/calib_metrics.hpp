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
#ifndef BOXCAL_CALIB_METRICS_HPP_
#define BOXCAL_CALIB_METRICS_HPP_

#include <span>
#include <string>
#include <vector>

#include "boxcal/types.hpp"

namespace boxcal {

struct CalibrationSample {
  double confidence = 0.0;
  bool tp = false;
  int category = 0;
};

enum class BinningScheme { equal_width, adaptive_equal_count };

struct BinningSpec {
  BinningScheme scheme = BinningScheme::equal_width;
  int bin_count = 10;
  bool per_class = false;

  void validate() const;
};

// All metrics return fractions in [0, 1] (NLL is unbounded above); the CLI
// renders the binned calibration errors in percent.

// Equal-width binned gap Σ_b (n_b/N) |prec(b) - conf(b)|. Bin k covers
// (k/B, (k+1)/B]; confidence 0 falls into bin 0. conf(b) is the mean
// confidence of the bin's samples. Empty input is an error.
double ece(std::span<const CalibrationSample> samples,
           const BinningSpec& spec = {});

// As ece, but bins are consecutive runs of the confidence-sorted samples
// holding floor(N/B) or ceil(N/B) samples each.
double ace(std::span<const CalibrationSample> samples,
           const BinningSpec& spec = {});

// Unweighted mean of the per-category equal-width ECE over categories
// present in the sample list.
double sce(std::span<const CalibrationSample> samples,
           const BinningSpec& spec = {});

// Mean negative log-likelihood with confidences clipped by 1e-12.
double nll(std::span<const CalibrationSample> samples);

// Mean squared error between confidence and label.
double brier(std::span<const CalibrationSample> samples);

struct ReliabilityBin {
  double bin_low = 0.0;
  double bin_high = 0.0;
  double mean_conf = 0.0;
  double precision = 0.0;
  std::size_t count = 0;
};

struct ReliabilityTable {
  std::vector<ReliabilityBin> bins;
  double ece = 0.0;
  double ace = 0.0;
  double sce = 0.0;
  double nll = 0.0;
  double brier = 0.0;
};

ReliabilityTable reliability_table(std::span<const CalibrationSample> samples,
                                   const BinningSpec& spec = {});

// CSV with header bin_low,bin_high,mean_conf,precision,count.
std::string reliability_csv(const ReliabilityTable& table);

}  // namespace boxcal

#endif  // BOXCAL_CALIB_METRICS_HPP_
