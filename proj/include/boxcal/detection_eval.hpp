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
#ifndef BOXCAL_DETECTION_EVAL_HPP_
#define BOXCAL_DETECTION_EVAL_HPP_

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "boxcal/types.hpp"

namespace boxcal {

struct DetectionMatch {
  std::int64_t detection_id = 0;
  int image = 0;
  int category = 0;
  double confidence = 0.0;
  bool tp = false;
  bool ignored = false;  // absorbed by a crowd region: neither TP nor FP
  std::optional<std::int64_t> matched_gt;
};

struct MatchResult {
  double t_iou = 0.5;
  // Global deterministic confidence order (descending, ties by ascending
  // detection_id).
  std::vector<DetectionMatch> detections;
  // Non-crowd ground-truth object counts per category.
  std::map<int, std::size_t> gt_per_category;
  // Ids of matched ground-truth objects.
  std::vector<std::int64_t> matched_gt_ids;
};

// Greedy per-(image, category) matching: detections in confidence order each
// claim the unmatched non-crowd ground truth with the highest IoU >= t_iou
// (GT ties by lowest id). Unmatched detections overlapping a same-category
// crowd region at IoU >= t_iou are marked ignored.
MatchResult match(const DetectionSet& dets, const Dataset& gt, double t_iou);

struct PRCurve {
  std::vector<double> precision;  // cumulative, per ranked detection
  std::vector<double> recall;
  std::array<double, 101> interpolated{};  // max precision at recall >= r
};

// One category's ranked PR data; nullopt when the category has no
// (non-crowd) ground truth.
std::optional<PRCurve> pr_curve(const MatchResult& result, int category);

// Mean interpolated precision over the 101 recall levels {0.00, ..., 1.00}.
std::optional<double> average_precision(const MatchResult& result,
                                        int category);

struct MapMetrics {
  double map = 0.0;    // mean AP over t_iou in {0.50, 0.55, ..., 0.95}
  double map50 = 0.0;  // mean AP at t_iou = 0.50
};

// COCO-style mAP over categories with ground truth, computed on the
// per-image top-`cap` detections.
MapMetrics map_metrics(const DetectionSet& dets, const Dataset& gt,
                       int cap = 100);

// The ten COCO evaluation thresholds, exact rationals (50 + 5k) / 100.
std::vector<double> coco_thresholds();

// CSV with header detection_id,image_id,category_id,confidence,tp,t_iou;
// ignored detections are skipped.
std::string matches_csv(const MatchResult& result);

}  // namespace boxcal

#endif  // BOXCAL_DETECTION_EVAL_HPP_
