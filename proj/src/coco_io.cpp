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
#include "boxcal/coco_io.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace boxcal {

namespace {

Box box_from_xywh(const nlohmann::json& bbox) {
  if (!bbox.is_array() || bbox.size() != 4) {
    throw ValidationError({"bbox must be an array of 4 numbers"});
  }
  Box b;
  b.x1 = bbox[0].get<double>();
  b.y1 = bbox[1].get<double>();
  b.x2 = b.x1 + bbox[2].get<double>();
  b.y2 = b.y1 + bbox[3].get<double>();
  return b;
}

nlohmann::ordered_json box_to_xywh(const Box& b) {
  return nlohmann::ordered_json::array(
      {b.x1, b.y1, b.x2 - b.x1, b.y2 - b.y1});
}

}  // namespace

Dataset dataset_from_json(const nlohmann::json& j) {
  Dataset ds;
  if (!j.is_object()) {
    throw ValidationError({"annotation file must be a JSON object"});
  }
  for (const auto& ji : j.value("images", nlohmann::json::array())) {
    ImageInfo img;
    img.id = ji.at("id").get<int>();
    img.width = ji.at("width").get<double>();
    img.height = ji.at("height").get<double>();
    ds.images.push_back(img);
  }
  for (const auto& jc : j.value("categories", nlohmann::json::array())) {
    CategoryInfo cat;
    cat.id = jc.at("id").get<int>();
    cat.name = jc.value("name", std::string());
    ds.categories.push_back(cat);
  }
  std::int64_t fallback_id = 1;
  for (const auto& ja : j.value("annotations", nlohmann::json::array())) {
    GroundTruthObject gt;
    gt.id = ja.contains("id") ? ja.at("id").get<std::int64_t>() : fallback_id;
    ++fallback_id;
    gt.image = ja.at("image_id").get<int>();
    gt.category = ja.at("category_id").get<int>();
    gt.box = box_from_xywh(ja.at("bbox"));
    if (ja.contains("iscrowd")) {
      gt.is_crowd = ja.at("iscrowd").get<int>() != 0;
    }
    ds.ground_truth.push_back(gt);
  }
  return validate_dataset(std::move(ds));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(read_json_file(path));
}

nlohmann::ordered_json dataset_to_json(const Dataset& ds) {
  nlohmann::ordered_json j;
  auto& images = j["images"] = nlohmann::ordered_json::array();
  for (const auto& img : ds.images) {
    images.push_back(
        {{"id", img.id}, {"width", img.width}, {"height", img.height}});
  }
  auto& annotations = j["annotations"] = nlohmann::ordered_json::array();
  for (const auto& gt : ds.ground_truth) {
    annotations.push_back({{"id", gt.id},
                           {"image_id", gt.image},
                           {"category_id", gt.category},
                           {"bbox", box_to_xywh(gt.box)},
                           {"area", gt.box.area()},
                           {"iscrowd", gt.is_crowd ? 1 : 0}});
  }
  auto& categories = j["categories"] = nlohmann::ordered_json::array();
  for (const auto& cat : ds.categories) {
    categories.push_back({{"id", cat.id}, {"name", cat.name}});
  }
  return j;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_text_file(path, dataset_to_json(ds).dump(2) + "\n");
}

DetectionSet detections_from_json(const nlohmann::json& j,
                                  const Dataset* reference) {
  if (!j.is_array()) {
    throw ValidationError({"results file must be a JSON array"});
  }
  std::set<int> image_ids, category_ids;
  if (reference != nullptr) {
    for (const auto& img : reference->images) image_ids.insert(img.id);
    for (const auto& cat : reference->categories) category_ids.insert(cat.id);
  }

  std::vector<Detection> dets;
  std::vector<std::string> issues;
  std::int64_t next_id = 0;
  for (const auto& jd : j) {
    Detection det;
    det.detection_id = next_id++;
    const std::string tag = "detection " + std::to_string(det.detection_id);
    det.image = jd.at("image_id").get<int>();
    det.category = jd.at("category_id").get<int>();
    det.confidence = jd.at("score").get<double>();
    det.box = box_from_xywh(jd.at("bbox"));
    if (!det.box.finite()) {
      issues.push_back(tag + ": non-finite box coordinates");
      continue;
    }
    if (det.box.x2 < det.box.x1 || det.box.y2 < det.box.y1) {
      issues.push_back(tag + ": negative box extent");
      continue;
    }
    if (!(std::isfinite(det.confidence) && det.confidence >= 0.0 &&
          det.confidence <= 1.0)) {
      issues.push_back(tag + ": score outside [0, 1]");
      continue;
    }
    if (reference != nullptr) {
      if (image_ids.count(det.image) == 0) {
        issues.push_back(tag + ": references unknown image id " +
                         std::to_string(det.image));
        continue;
      }
      if (category_ids.count(det.category) == 0) {
        issues.push_back(tag + ": references unknown category id " +
                         std::to_string(det.category));
        continue;
      }
    }
    dets.push_back(det);
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return DetectionSet::from_detections(std::move(dets));
}

DetectionSet load_detections(const std::filesystem::path& path,
                             const Dataset* reference) {
  return detections_from_json(read_json_file(path), reference);
}

nlohmann::ordered_json detections_to_json(const DetectionSet& ds) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& [image, dets] : ds.by_image) {
    for (const auto& det : dets) {
      j.push_back({{"image_id", det.image},
                   {"category_id", det.category},
                   {"bbox", box_to_xywh(det.box)},
                   {"score", det.confidence}});
    }
  }
  return j;
}

void save_detections(const DetectionSet& ds,
                     const std::filesystem::path& path) {
  write_text_file(path, detections_to_json(ds).dump(2) + "\n");
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("failed to parse '" + path.string() + "': " + e.what());
  }
  return j;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace boxcal
