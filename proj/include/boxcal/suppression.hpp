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
#ifndef BOXCAL_SUPPRESSION_HPP_
#define BOXCAL_SUPPRESSION_HPP_

#include <vector>

#include "boxcal/types.hpp"

namespace boxcal {

enum class SuppressionKind { hard, soft_gaussian };

struct SuppressionConfig {
  SuppressionKind kind = SuppressionKind::hard;
  double t_nms = 0.5;        // hard only: IoU >= t_nms suppresses
  double sigma = 0.2;        // soft only: factor exp(-IoU^2 / sigma)
  double score_floor = 0.0;  // drop detections at or below this confidence
  bool class_agnostic = false;

  static SuppressionConfig hard_nms(double t, double floor = 0.0,
                                    bool agnostic = false);
  // Default floor keeps the output finite without measurably moving mAP.
  static SuppressionConfig soft_nms(double sigma, double floor = 1e-3,
                                    bool agnostic = false);
  void validate() const;
};

// Greedy suppression over one image's detections.
//
// Detections are traversed once in descending input confidence (ties by
// ascending detection_id). Each kept detection rescales every remaining
// same-class successor's confidence by the discount factor; detections whose
// running confidence is at or below score_floor are removed and suppress
// nothing. Output is sorted descending by final confidence.
std::vector<Detection> suppress(std::vector<Detection> dets,
                                const SuppressionConfig& cfg);

// Re-implementation of `suppress` working row-wise over the precomputed
// pairwise IoU matrix. Kept separate as a verification path; do not fold
// the two together.
std::vector<Detection> suppress_matrix(std::vector<Detection> dets,
                                       const SuppressionConfig& cfg);

// Applies `suppress` image by image.
DetectionSet suppress_all(const DetectionSet& ds, const SuppressionConfig& cfg);

}  // namespace boxcal

#endif  // BOXCAL_SUPPRESSION_HPP_
