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
#include "boxcal/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace boxcal {

bool Box::finite() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2);
}

const ImageInfo* Dataset::find_image(int id) const {
  for (const auto& img : images) {
    if (img.id == id) return &img;
  }
  return nullptr;
}

bool Dataset::has_category(int id) const {
  return std::any_of(categories.begin(), categories.end(),
                     [id](const CategoryInfo& c) { return c.id == id; });
}

ValidationError::ValidationError(std::vector<std::string> issues)
    : std::runtime_error([&issues] {
        std::ostringstream msg;
        msg << "validation failed with " << issues.size() << " issue(s)";
        for (std::size_t i = 0; i < issues.size() && i < 10; ++i) {
          msg << "\n  - " << issues[i];
        }
        if (issues.size() > 10) {
          msg << "\n  ... and " << issues.size() - 10 << " more";
        }
        return msg.str();
      }()),
      issues_(std::move(issues)) {}

DetectionSet DetectionSet::from_detections(std::vector<Detection> detections) {
  DetectionSet ds;
  std::set<std::int64_t> seen;
  std::vector<std::string> issues;
  for (const auto& det : detections) {
    if (!seen.insert(det.detection_id).second) {
      issues.push_back("duplicate detection_id " +
                       std::to_string(det.detection_id));
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  for (auto& det : detections) {
    ds.by_image[det.image].push_back(det);
  }
  for (auto& [image, dets] : ds.by_image) {
    std::sort(dets.begin(), dets.end(), confidence_order);
  }
  return ds;
}

std::size_t DetectionSet::size() const {
  std::size_t n = 0;
  for (const auto& [image, dets] : by_image) n += dets.size();
  return n;
}

std::vector<Detection> DetectionSet::flatten() const {
  std::vector<Detection> out;
  out.reserve(size());
  for (const auto& [image, dets] : by_image) {
    out.insert(out.end(), dets.begin(), dets.end());
  }
  return out;
}

DetectionSet apply_cap(const DetectionSet& ds, int cap) {
  if (cap < 0) throw ContractViolation("apply_cap: cap must be >= 0");
  DetectionSet out;
  out.per_image_cap = cap;
  for (const auto& [image, dets] : ds.by_image) {
    auto kept = dets;  // already in confidence_order
    if (kept.size() > static_cast<std::size_t>(cap)) {
      kept.resize(static_cast<std::size_t>(cap));
    }
    if (!kept.empty()) out.by_image[image] = std::move(kept);
  }
  return out;
}

Dataset validate_dataset(Dataset raw) {
  std::vector<std::string> issues;

  std::set<int> image_ids;
  for (const auto& img : raw.images) {
    if (!image_ids.insert(img.id).second) {
      issues.push_back("duplicate image id " + std::to_string(img.id));
    }
    if (!(std::isfinite(img.width) && std::isfinite(img.height)) ||
        img.width < 0 || img.height < 0) {
      issues.push_back("image " + std::to_string(img.id) +
                       " has invalid dimensions");
    }
  }
  std::set<int> category_ids;
  for (const auto& cat : raw.categories) {
    if (!category_ids.insert(cat.id).second) {
      issues.push_back("duplicate category id " + std::to_string(cat.id));
    }
  }

  for (std::size_t i = 0; i < raw.ground_truth.size(); ++i) {
    auto& gt = raw.ground_truth[i];
    const std::string tag =
        "annotation " + std::to_string(gt.id) + " (index " +
        std::to_string(i) + ")";
    if (!gt.box.finite()) {
      issues.push_back(tag + ": non-finite box coordinates");
      continue;
    }
    if (gt.box.x2 < gt.box.x1 || gt.box.y2 < gt.box.y1) {
      issues.push_back(tag + ": inverted box");
      continue;
    }
    if (image_ids.count(gt.image) == 0) {
      issues.push_back(tag + ": references unknown image id " +
                       std::to_string(gt.image));
      continue;
    }
    if (category_ids.count(gt.category) == 0) {
      issues.push_back(tag + ": references unknown category id " +
                       std::to_string(gt.category));
      continue;
    }
    const ImageInfo* img = raw.find_image(gt.image);
    gt.box.x1 = std::clamp(gt.box.x1, 0.0, img->width);
    gt.box.x2 = std::clamp(gt.box.x2, 0.0, img->width);
    gt.box.y1 = std::clamp(gt.box.y1, 0.0, img->height);
    gt.box.y2 = std::clamp(gt.box.y2, 0.0, img->height);
  }

  if (!issues.empty()) throw ValidationError(std::move(issues));
  return raw;
}

}  // namespace boxcal
