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
#ifndef BOXCAL_GEOMETRY_HPP_
#define BOXCAL_GEOMETRY_HPP_

#include <vector>

#include "boxcal/types.hpp"

namespace boxcal {

// Intersection over union. Zero-area unions (including two zero-area boxes)
// yield 0 by the convention 0/0 := 0.
double iou(const Box& a, const Box& b);

// N x N matrix with entry (i, k) = 1 - iou(boxes[i], boxes[k]).
std::vector<std::vector<double>> pairwise_jaccard_matrix(
    const std::vector<Box>& boxes);

// Per-detection overlap summaries over the Jaccard distances 1 - IoU.
//
// The suppressing side aggregates over detections that strictly precede i
// in the deterministic confidence order (the boxes that would suppress i
// under NMS); the suppressed side aggregates over detections succeeding i.
// Empty aggregation sets yield min = product = 1.0.
struct JaccardSummary {
  double j_min_suppressing = 1.0;
  double j_prod_suppressing = 1.0;
  double j_min_suppressed = 1.0;
  double j_prod_suppressed = 1.0;
};

// `dets` must hold the detections of one image, sorted by confidence_order;
// anything else is a ContractViolation. Aggregation is restricted to
// detections of the same category unless class_agnostic.
std::vector<JaccardSummary> jaccard_summaries(const std::vector<Detection>& dets,
                                              bool class_agnostic = false);

}  // namespace boxcal

#endif  // BOXCAL_GEOMETRY_HPP_
