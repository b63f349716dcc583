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
#include "boxcal/geometry.hpp"

#include <algorithm>

namespace boxcal {

double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

std::vector<std::vector<double>> pairwise_jaccard_matrix(
    const std::vector<Box>& boxes) {
  const std::size_t n = boxes.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i; k < n; ++k) {
      const double d = 1.0 - iou(boxes[i], boxes[k]);
      m[i][k] = d;
      m[k][i] = d;
    }
  }
  return m;
}

std::vector<JaccardSummary> jaccard_summaries(const std::vector<Detection>& dets,
                                              bool class_agnostic) {
  const std::size_t n = dets.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (confidence_order(dets[i + 1], dets[i])) {
      throw ContractViolation(
          "jaccard_summaries: input must be sorted by confidence_order");
    }
    if (dets[i].image != dets[i + 1].image) {
      throw ContractViolation(
          "jaccard_summaries: detections must belong to one image");
    }
  }

  std::vector<Box> boxes(n);
  for (std::size_t i = 0; i < n; ++i) boxes[i] = dets[i].box;
  const auto jd = pairwise_jaccard_matrix(boxes);

  std::vector<JaccardSummary> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    JaccardSummary s;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      if (!class_agnostic && dets[k].category != dets[i].category) continue;
      if (k < i) {
        s.j_min_suppressing = std::min(s.j_min_suppressing, jd[i][k]);
        s.j_prod_suppressing *= jd[i][k];
      } else {
        s.j_min_suppressed = std::min(s.j_min_suppressed, jd[i][k]);
        s.j_prod_suppressed *= jd[i][k];
      }
    }
    out[i] = s;
  }
  return out;
}

}  // namespace boxcal
