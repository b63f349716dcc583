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
#ifndef BOXCAL_TYPES_HPP_
#define BOXCAL_TYPES_HPP_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace boxcal {

// Axis-aligned rectangle in absolute pixel coordinates, corner convention.
// Valid boxes satisfy x1 <= x2, y1 <= y2 with all coordinates finite;
// zero-area boxes are legal inputs.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool finite() const;
  bool valid() const { return finite() && x2 >= x1 && y2 >= y1; }
};

struct Detection {
  Box box;
  double confidence = 0.0;    // in [0, 1]
  int category = 0;
  int image = 0;
  std::int64_t detection_id = 0;  // unique within a detection set
};

struct GroundTruthObject {
  std::int64_t id = 0;
  Box box;
  int category = 0;
  int image = 0;
  bool is_crowd = false;
};

struct ImageInfo {
  int id = 0;
  double width = 0.0;
  double height = 0.0;
};

struct CategoryInfo {
  int id = 0;
  std::string name;
};

struct Dataset {
  std::vector<ImageInfo> images;
  std::vector<GroundTruthObject> ground_truth;
  std::vector<CategoryInfo> categories;

  const ImageInfo* find_image(int id) const;
  bool has_category(int id) const;
};

// Deterministic ordering used everywhere traversal order matters:
// descending confidence, ties broken by ascending detection_id.
inline bool confidence_order(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return a.detection_id < b.detection_id;
}

// Detections grouped per image, each group held in confidence_order.
// per_image_cap == -1 means no cap has been applied.
struct DetectionSet {
  std::map<int, std::vector<Detection>> by_image;
  int per_image_cap = -1;

  static DetectionSet from_detections(std::vector<Detection> detections);

  std::size_t size() const;
  std::vector<Detection> flatten() const;  // image order, then confidence_order
};

// Keeps the per-image top-`cap` detections under the deterministic ordering.
DetectionSet apply_cap(const DetectionSet& ds, int cap);

// Clamps ground-truth boxes to image bounds and checks every Dataset
// invariant. Throws ValidationError listing all offending records.
Dataset validate_dataset(Dataset raw);

// Raised when input data violates a documented invariant; `issues` lists
// every offending record.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

// Caller broke an API precondition (unsorted input, mixed images, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace boxcal

#endif  // BOXCAL_TYPES_HPP_
