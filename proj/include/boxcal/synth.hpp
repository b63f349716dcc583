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
#ifndef BOXCAL_SYNTH_HPP_
#define BOXCAL_SYNTH_HPP_

#include <cstdint>
#include <map>

#include "boxcal/types.hpp"

namespace boxcal {

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

enum class ConfidenceLaw {
  calibrated,         // P(tp-capable | s) = s
  overconfident_pow,  // P(tp-capable | s) = s^gamma
  logistic_skew,      // P(tp-capable | s) = sigmoid(k * logit(s))
};

// Detector-free world model: every ground-truth object emits one primary
// detection whose probability of being placed on the object follows the
// confidence law; duplicates are jittered copies of the primary at an IoU
// drawn from duplicate_iou, always at strictly lower confidence; spurious
// false positives land away from every object.
//
// Deterministic by construction (rng scheme v1, substream "synth"). Box
// coordinates are quantized to 1/64 px so serialized files round-trip
// bit-exactly.
struct SynthConfig {
  std::uint64_t seed = 1;
  int images = 100;
  IntRange objects_per_image{1, 8};
  int categories = 6;
  IntRange duplicate_count{0, 0};
  RealRange duplicate_iou{0.6, 0.9};
  ConfidenceLaw law = ConfidenceLaw::calibrated;
  double law_param = 1.0;  // gamma for overconfident_pow, k for logistic_skew
  double fp_rate = 0.0;    // expected spurious detections per image
  RealRange box_scale{24.0, 160.0};
  double image_width = 640.0;
  double image_height = 640.0;
  // IoU between a placed primary and its object, drawn uniformly; the lower
  // bound stays above 0.5 so placed primaries are matchable at t_iou = 0.5.
  RealRange primary_iou{0.55, 0.95};
  // Stress-test switch: duplicates draw an independent confidence instead of
  // ranking strictly below their primary.
  bool shuffle_duplicate_rank = false;

  void validate() const;  // throws GenerationError on infeasible settings
};

enum class DetectionKind { primary_placed, primary_miss, duplicate, spurious };

// Generation metadata keyed by detection_id; not part of the serialized
// COCO output, but the ground truth for the generator's own claims.
struct DetectionProvenance {
  DetectionKind kind = DetectionKind::spurious;
  std::int64_t primary_id = -1;  // for duplicates
  std::int64_t gt_id = -1;       // for primaries
};

struct SynthResult {
  Dataset dataset;
  DetectionSet detections;
  std::map<std::int64_t, DetectionProvenance> provenance;
};

SynthResult generate(const SynthConfig& cfg);

}  // namespace boxcal

#endif  // BOXCAL_SYNTH_HPP_
