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
#include "boxcal/suppression.hpp"

#include <algorithm>
#include <cmath>

#include "boxcal/geometry.hpp"

namespace boxcal {

SuppressionConfig SuppressionConfig::hard_nms(double t, double floor,
                                              bool agnostic) {
  SuppressionConfig cfg;
  cfg.kind = SuppressionKind::hard;
  cfg.t_nms = t;
  cfg.score_floor = floor;
  cfg.class_agnostic = agnostic;
  return cfg;
}

SuppressionConfig SuppressionConfig::soft_nms(double sigma, double floor,
                                              bool agnostic) {
  SuppressionConfig cfg;
  cfg.kind = SuppressionKind::soft_gaussian;
  cfg.sigma = sigma;
  cfg.score_floor = floor;
  cfg.class_agnostic = agnostic;
  return cfg;
}

void SuppressionConfig::validate() const {
  if (kind == SuppressionKind::hard && (t_nms < 0.0 || t_nms > 1.0)) {
    throw ContractViolation("suppression: t_nms must be in [0, 1]");
  }
  if (kind == SuppressionKind::soft_gaussian && !(sigma > 0.0)) {
    throw ContractViolation("suppression: sigma must be positive");
  }
  if (score_floor < 0.0 || score_floor >= 1.0) {
    throw ContractViolation("suppression: score_floor must be in [0, 1)");
  }
}

namespace {

void check_single_image(const std::vector<Detection>& dets) {
  for (std::size_t i = 1; i < dets.size(); ++i) {
    if (dets[i].image != dets[0].image) {
      throw ContractViolation("suppress: detections must belong to one image");
    }
  }
}

double discount(const SuppressionConfig& cfg, double overlap) {
  if (cfg.kind == SuppressionKind::hard) {
    return overlap >= cfg.t_nms ? 0.0 : 1.0;
  }
  return std::exp(-(overlap * overlap) / cfg.sigma);
}

}  // namespace

std::vector<Detection> suppress(std::vector<Detection> dets,
                                const SuppressionConfig& cfg) {
  cfg.validate();
  check_single_image(dets);
  std::sort(dets.begin(), dets.end(), confidence_order);

  const std::size_t n = dets.size();
  std::vector<bool> removed(n, false);
  std::vector<Detection> kept;
  kept.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (removed[i]) continue;
    if (dets[i].confidence <= cfg.score_floor) {
      removed[i] = true;
      continue;
    }
    kept.push_back(dets[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (removed[j]) continue;
      if (!cfg.class_agnostic && dets[j].category != dets[i].category) continue;
      dets[j].confidence *= discount(cfg, iou(dets[i].box, dets[j].box));
      if (dets[j].confidence <= cfg.score_floor) removed[j] = true;
    }
  }

  std::sort(kept.begin(), kept.end(), confidence_order);
  return kept;
}

std::vector<Detection> suppress_matrix(std::vector<Detection> dets,
                                       const SuppressionConfig& cfg) {
  cfg.validate();
  check_single_image(dets);
  std::sort(dets.begin(), dets.end(), confidence_order);

  const std::size_t n = dets.size();
  std::vector<Box> boxes(n);
  for (std::size_t i = 0; i < n; ++i) boxes[i] = dets[i].box;
  const auto jd = pairwise_jaccard_matrix(boxes);

  std::vector<bool> kept(n, false);
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) score[i] = dets[i].confidence;

  for (std::size_t j = 0; j < n; ++j) {
    double s = score[j];
    for (std::size_t i = 0; i < j && s > cfg.score_floor; ++i) {
      if (!kept[i]) continue;
      if (!cfg.class_agnostic && dets[i].category != dets[j].category) continue;
      s *= discount(cfg, 1.0 - jd[i][j]);
    }
    score[j] = s;
    kept[j] = s > cfg.score_floor;
  }

  std::vector<Detection> out;
  for (std::size_t j = 0; j < n; ++j) {
    if (!kept[j]) continue;
    Detection d = dets[j];
    d.confidence = score[j];
    out.push_back(d);
  }
  std::sort(out.begin(), out.end(), confidence_order);
  return out;
}

DetectionSet suppress_all(const DetectionSet& ds, const SuppressionConfig& cfg) {
  DetectionSet out;
  out.per_image_cap = ds.per_image_cap;
  for (const auto& [image, dets] : ds.by_image) {
    auto kept = suppress(dets, cfg);
    if (!kept.empty()) out.by_image[image] = std::move(kept);
  }
  return out;
}

}  // namespace boxcal
