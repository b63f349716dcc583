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
#include "boxcal/detection_eval.hpp"

#include <algorithm>
#include <sstream>

#include "boxcal/geometry.hpp"

namespace boxcal {

namespace {

struct GtRef {
  const GroundTruthObject* gt;
  bool matched = false;
};

}  // namespace

MatchResult match(const DetectionSet& dets, const Dataset& gt, double t_iou) {
  if (!(t_iou > 0.0 && t_iou <= 1.0)) {
    throw ContractViolation("match: t_iou must be in (0, 1]");
  }
  MatchResult result;
  result.t_iou = t_iou;

  for (const auto& cat : gt.categories) {
    result.gt_per_category.emplace(cat.id, 0);
  }
  // (image, category) -> ground truth, split by crowd flag.
  std::map<std::pair<int, int>, std::vector<GtRef>> plain, crowd;
  for (const auto& g : gt.ground_truth) {
    auto& bucket = g.is_crowd ? crowd : plain;
    bucket[{g.image, g.category}].push_back(GtRef{&g});
    if (!g.is_crowd) result.gt_per_category[g.category] += 1;
  }
  for (auto& [key, refs] : plain) {
    std::sort(refs.begin(), refs.end(), [](const GtRef& a, const GtRef& b) {
      return a.gt->id < b.gt->id;
    });
  }

  for (const auto& [image, image_dets] : dets.by_image) {
    // Detections arrive in confidence_order per image; the greedy pass is
    // per category, so filtering preserves the order within each category.
    for (const auto& det : image_dets) {
      DetectionMatch m;
      m.detection_id = det.detection_id;
      m.image = det.image;
      m.category = det.category;
      m.confidence = det.confidence;

      auto it = plain.find({image, det.category});
      if (it != plain.end()) {
        GtRef* best = nullptr;
        double best_iou = 0.0;
        for (auto& ref : it->second) {
          if (ref.matched) continue;
          const double o = iou(det.box, ref.gt->box);
          if (o >= t_iou && o > best_iou) {
            best = &ref;
            best_iou = o;
          }
        }
        if (best != nullptr) {
          best->matched = true;
          m.tp = true;
          m.matched_gt = best->gt->id;
          result.matched_gt_ids.push_back(best->gt->id);
        }
      }
      if (!m.tp) {
        auto cit = crowd.find({image, det.category});
        if (cit != crowd.end()) {
          for (const auto& ref : cit->second) {
            if (iou(det.box, ref.gt->box) >= t_iou) {
              m.ignored = true;
              break;
            }
          }
        }
      }
      result.detections.push_back(m);
    }
  }

  std::sort(result.detections.begin(), result.detections.end(),
            [](const DetectionMatch& a, const DetectionMatch& b) {
              if (a.confidence != b.confidence) {
                return a.confidence > b.confidence;
              }
              return a.detection_id < b.detection_id;
            });
  return result;
}

std::optional<PRCurve> pr_curve(const MatchResult& result, int category) {
  const auto git = result.gt_per_category.find(category);
  if (git == result.gt_per_category.end() || git->second == 0) {
    return std::nullopt;
  }
  const double n_gt = static_cast<double>(git->second);

  PRCurve curve;
  std::size_t tp = 0, fp = 0;
  for (const auto& m : result.detections) {
    if (m.category != category || m.ignored) continue;
    (m.tp ? tp : fp) += 1;
    curve.precision.push_back(static_cast<double>(tp) /
                              static_cast<double>(tp + fp));
    curve.recall.push_back(static_cast<double>(tp) / n_gt);
  }

  // Precision envelope over ranked suffixes, then the interpolated value at
  // recall level r is the envelope at the first point with recall >= r.
  std::vector<double> envelope(curve.precision.size());
  double running_max = 0.0;
  for (std::size_t i = curve.precision.size(); i-- > 0;) {
    running_max = std::max(running_max, curve.precision[i]);
    envelope[i] = running_max;
  }
  curve.interpolated.fill(0.0);
  for (int level = 0; level <= 100; ++level) {
    const double r = static_cast<double>(level) / 100.0;
    const auto it =
        std::lower_bound(curve.recall.begin(), curve.recall.end(), r);
    if (it != curve.recall.end()) {
      curve.interpolated[static_cast<std::size_t>(level)] =
          envelope[static_cast<std::size_t>(it - curve.recall.begin())];
    }
  }
  return curve;
}

std::optional<double> average_precision(const MatchResult& result,
                                        int category) {
  const auto curve = pr_curve(result, category);
  if (!curve) return std::nullopt;
  double sum = 0.0;
  for (double p : curve->interpolated) sum += p;
  return sum / 101.0;
}

std::vector<double> coco_thresholds() {
  std::vector<double> out;
  for (int k = 0; k < 10; ++k) {
    out.push_back(static_cast<double>(50 + 5 * k) / 100.0);
  }
  return out;
}

MapMetrics map_metrics(const DetectionSet& dets, const Dataset& gt, int cap) {
  const DetectionSet capped = apply_cap(dets, cap);
  MapMetrics metrics;
  double total = 0.0;
  int threshold_count = 0;
  for (double t : coco_thresholds()) {
    const MatchResult result = match(capped, gt, t);
    double sum = 0.0;
    int categories = 0;
    for (const auto& [category, n_gt] : result.gt_per_category) {
      if (n_gt == 0) continue;
      sum += average_precision(result, category).value_or(0.0);
      ++categories;
    }
    const double mean_ap = categories > 0 ? sum / categories : 0.0;
    if (threshold_count == 0) metrics.map50 = mean_ap;
    total += mean_ap;
    ++threshold_count;
  }
  metrics.map = total / threshold_count;
  return metrics;
}

std::string matches_csv(const MatchResult& result) {
  std::ostringstream out;
  out << "detection_id,image_id,category_id,confidence,tp,t_iou\n";
  out.precision(17);
  for (const auto& m : result.detections) {
    if (m.ignored) continue;
    out << m.detection_id << ',' << m.image << ',' << m.category << ','
        << m.confidence << ',' << (m.tp ? 1 : 0) << ',' << result.t_iou
        << '\n';
  }
  return out.str();
}

}  // namespace boxcal
