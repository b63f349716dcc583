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
#include "boxcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "boxcal/geometry.hpp"
#include "boxcal/rng.hpp"

namespace boxcal {

namespace {

constexpr double kGrid = 64.0;  // coordinate quantization, 1/64 px

double quantize(double v) { return std::round(v * kGrid) / kGrid; }

Box quantize_box(const Box& b) {
  return Box{quantize(b.x1), quantize(b.y1), quantize(b.x2), quantize(b.y2)};
}

double law_probability(const SynthConfig& cfg, double s) {
  switch (cfg.law) {
    case ConfidenceLaw::calibrated:
      return s;
    case ConfidenceLaw::overconfident_pow:
      return std::pow(s, cfg.law_param);
    case ConfidenceLaw::logistic_skew: {
      const double z = cfg.law_param * (std::log(s) - std::log1p(-s));
      return 1.0 / (1.0 + std::exp(-z));
    }
  }
  return s;
}

// Translate `base` along one axis so the overlap with the original lands at
// `target_iou` exactly (before quantization): for a shift d along x,
// IoU = (w - d) / (w + d), hence d = w (1 - t) / (1 + t).
Box jitter_to_iou(const Box& base, double target_iou, Rng& rng) {
  const bool along_x = rng.bernoulli(0.5);
  const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double extent = along_x ? base.width() : base.height();
  const double shift =
      sign * extent * (1.0 - target_iou) / (1.0 + target_iou);
  Box out = base;
  if (along_x) {
    out.x1 += shift;
    out.x2 += shift;
  } else {
    out.y1 += shift;
    out.y2 += shift;
  }
  return quantize_box(out);
}

}  // namespace

void SynthConfig::validate() const {
  if (images < 0) throw GenerationError("synth: images must be >= 0");
  if (categories < 1) throw GenerationError("synth: need at least 1 category");
  if (objects_per_image.lo > objects_per_image.hi || objects_per_image.lo < 0) {
    throw GenerationError("synth: empty objects_per_image range");
  }
  if (duplicate_count.lo > duplicate_count.hi || duplicate_count.lo < 0) {
    throw GenerationError("synth: empty duplicate_count range");
  }
  if (!(box_scale.lo > 0.0) || box_scale.lo > box_scale.hi) {
    throw GenerationError("synth: box_scale must be a positive range");
  }
  if (box_scale.hi > std::min(image_width, image_height)) {
    throw GenerationError("synth: box_scale exceeds image size");
  }
  if (fp_rate < 0.0) throw GenerationError("synth: fp_rate must be >= 0");
  for (const RealRange* r : {&duplicate_iou, &primary_iou}) {
    if (r->lo > r->hi || r->lo <= 0.0 || r->hi > 1.0) {
      throw GenerationError("synth: IoU range must lie inside (0, 1]");
    }
  }
  // Quantizing the jitter shift moves the achieved IoU by up to roughly
  // 2 * (grid/2) / box width; the draw margin below must absorb that.
  const double quant_err = 2.0 * (0.5 / kGrid) / box_scale.lo;
  const double margin = std::min(0.01, 0.25 * (duplicate_iou.hi - duplicate_iou.lo));
  if (duplicate_count.hi > 0 && quant_err > margin) {
    throw GenerationError(
        "synth: cannot achieve requested duplicate_iou with requested "
        "box_scale");
  }
}

SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng = Rng::substream(cfg.seed, "synth");

  SynthResult out;
  for (int c = 1; c <= cfg.categories; ++c) {
    out.dataset.categories.push_back({c, "cat_" + std::to_string(c)});
  }

  std::vector<Detection> detections;
  std::int64_t next_gt_id = 1;
  std::int64_t next_det_id = 0;

  const double dup_margin =
      std::min(0.01, 0.25 * (cfg.duplicate_iou.hi - cfg.duplicate_iou.lo));
  const double primary_margin =
      std::min(0.01, 0.25 * (cfg.primary_iou.hi - cfg.primary_iou.lo));

  auto random_box = [&](double& w, double& h) {
    w = rng.uniform(cfg.box_scale.lo, cfg.box_scale.hi);
    h = rng.uniform(cfg.box_scale.lo, cfg.box_scale.hi);
    const double x1 = rng.uniform(0.0, cfg.image_width - w);
    const double y1 = rng.uniform(0.0, cfg.image_height - h);
    return quantize_box(Box{x1, y1, x1 + w, y1 + h});
  };

  auto place_background_box = [&](const std::vector<Box>& gt_boxes) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      double w, h;
      const Box candidate = random_box(w, h);
      bool clear = true;
      for (const Box& g : gt_boxes) {
        if (iou(candidate, g) >= 0.3) {
          clear = false;
          break;
        }
      }
      if (clear) return candidate;
    }
    throw GenerationError(
        "synth: could not place a background box away from objects");
  };

  for (int image = 1; image <= cfg.images; ++image) {
    out.dataset.images.push_back(
        {image, cfg.image_width, cfg.image_height});

    const int n_objects = static_cast<int>(
        rng.uniform_int(cfg.objects_per_image.lo, cfg.objects_per_image.hi));
    std::vector<Box> gt_boxes;
    struct PlannedObject {
      Box box;
      int category;
      std::int64_t gt_id;
    };
    std::vector<PlannedObject> objects;
    for (int o = 0; o < n_objects; ++o) {
      double w, h;
      const Box box = random_box(w, h);
      const int category = static_cast<int>(rng.uniform_int(1, cfg.categories));
      const std::int64_t gt_id = next_gt_id++;
      out.dataset.ground_truth.push_back(
          {gt_id, box, category, image, /*is_crowd=*/false});
      gt_boxes.push_back(box);
      objects.push_back({box, category, gt_id});
    }

    for (const auto& obj : objects) {
      const double s = rng.uniform();
      const bool placed = rng.bernoulli(law_probability(cfg, s));
      Box primary_box;
      if (placed) {
        const double target = rng.uniform(cfg.primary_iou.lo + primary_margin,
                                          cfg.primary_iou.hi - primary_margin);
        primary_box = jitter_to_iou(obj.box, target, rng);
      } else {
        primary_box = place_background_box(gt_boxes);
      }
      const std::int64_t primary_id = next_det_id++;
      detections.push_back({primary_box, s, obj.category, image, primary_id});
      out.provenance[primary_id] = {placed ? DetectionKind::primary_placed
                                           : DetectionKind::primary_miss,
                                    -1, obj.gt_id};

      const int n_dup = static_cast<int>(
          rng.uniform_int(cfg.duplicate_count.lo, cfg.duplicate_count.hi));
      for (int d = 0; d < n_dup; ++d) {
        const double target = rng.uniform(cfg.duplicate_iou.lo + dup_margin,
                                          cfg.duplicate_iou.hi - dup_margin);
        const Box dup_box = jitter_to_iou(primary_box, target, rng);
        const double dup_conf = cfg.shuffle_duplicate_rank
                                    ? rng.uniform()
                                    : s * rng.uniform(0.5, 1.0);
        const std::int64_t dup_id = next_det_id++;
        detections.push_back({dup_box, dup_conf, obj.category, image, dup_id});
        out.provenance[dup_id] = {DetectionKind::duplicate, primary_id, -1};
      }
    }

    const int n_fp = rng.poisson(cfg.fp_rate);
    for (int f = 0; f < n_fp; ++f) {
      const Box fp_box = place_background_box(gt_boxes);
      const int category = static_cast<int>(rng.uniform_int(1, cfg.categories));
      const std::int64_t fp_id = next_det_id++;
      detections.push_back({fp_box, rng.uniform(), category, image, fp_id});
      out.provenance[fp_id] = {DetectionKind::spurious, -1, -1};
    }
  }

  out.dataset = validate_dataset(std::move(out.dataset));
  out.detections = DetectionSet::from_detections(std::move(detections));
  return out;
}

}  // namespace boxcal
