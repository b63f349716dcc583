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
#ifndef BOXCAL_COCO_IO_HPP_
#define BOXCAL_COCO_IO_HPP_

#include <filesystem>
#include <string>

#include "json.hpp"

#include "boxcal/types.hpp"

namespace boxcal {

// COCO annotation JSON (keys `images`, `annotations`, `categories`; extra
// keys ignored). Boxes arrive as [x, y, w, h] and are converted to corner
// form; the result is passed through validate_dataset.
Dataset dataset_from_json(const nlohmann::json& j);
Dataset load_dataset(const std::filesystem::path& path);

nlohmann::ordered_json dataset_to_json(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// COCO results JSON: flat array of {image_id, category_id, bbox, score}.
// detection_ids are assigned in file order (0, 1, ...). When `reference` is
// given, detections on unknown images or categories are a validation error.
DetectionSet detections_from_json(const nlohmann::json& j,
                                  const Dataset* reference = nullptr);
DetectionSet load_detections(const std::filesystem::path& path,
                             const Dataset* reference = nullptr);

nlohmann::ordered_json detections_to_json(const DetectionSet& ds);
void save_detections(const DetectionSet& ds,
                     const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& text);

}  // namespace boxcal

#endif  // BOXCAL_COCO_IO_HPP_
