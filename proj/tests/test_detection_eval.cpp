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

#include <cmath>

#include "doctest.h"

#include "boxcal/geometry.hpp"
#include "boxcal/rng.hpp"
#include "oracles.hpp"

using namespace boxcal;

namespace {

Dataset one_gt_dataset() {
  Dataset ds;
  ds.images = {{1, 100, 100}};
  ds.categories = {{1, "a"}, {2, "b"}};
  ds.ground_truth = {{1, Box{10, 10, 30, 30}, 1, 1, false}};
  return ds;
}

DetectionSet dets_of(std::vector<Detection> dets) {
  return DetectionSet::from_detections(std::move(dets));
}

}  // namespace

TEST_CASE("match: single detection above threshold is a TP") {
  // IoU([10,10,30,30],[10,10,30,26]) = 320/400 = 0.8 >= 0.5.
  const auto result = match(
      dets_of({{Box{10, 10, 30, 26}, 0.9, 1, 1, 0}}), one_gt_dataset(), 0.5);
  REQUIRE(result.detections.size() == 1);
  CHECK(result.detections[0].tp);
  CHECK(result.detections[0].matched_gt == 1);
}

TEST_CASE("match: second overlapping detection is a duplicate FP") {
  const auto result = match(dets_of({{Box{10, 10, 30, 30}, 0.9, 1, 1, 0},
                                     {Box{10, 10, 30, 28}, 0.8, 1, 1, 1}}),
                            one_gt_dataset(), 0.5);
  REQUIRE(result.detections.size() == 2);
  CHECK(result.detections[0].tp);
  CHECK_FALSE(result.detections[1].tp);
  CHECK_FALSE(result.detections[1].ignored);
}

TEST_CASE("match: category mismatch is an FP at any overlap") {
  const auto result = match(
      dets_of({{Box{10, 10, 30, 30}, 0.9, 2, 1, 0}}), one_gt_dataset(), 0.5);
  CHECK_FALSE(result.detections[0].tp);
}

TEST_CASE("match: crowd regions absorb unmatched detections") {
  Dataset ds = one_gt_dataset();
  ds.ground_truth.push_back({2, Box{60, 60, 90, 90}, 1, 1, true});
  const auto result =
      match(dets_of({{Box{60, 60, 90, 90}, 0.7, 1, 1, 0},
                     {Box{61, 60, 91, 90}, 0.6, 1, 1, 1}}),
            ds, 0.5);
  CHECK(result.detections[0].ignored);
  CHECK(result.detections[1].ignored);  // crowd absorbs any number
  CHECK_FALSE(result.detections[0].tp);

  // Ignored detections vanish from the PR data: AP over category 1 counts
  // only the single unmatched GT with no scored detections.
  CHECK(average_precision(result, 1).value() == 0.0);
}

TEST_CASE("match: tie on IoU resolved by lowest GT id") {
  Dataset ds;
  ds.images = {{1, 100, 100}};
  ds.categories = {{1, "a"}};
  ds.ground_truth = {{7, Box{0, 0, 10, 10}, 1, 1, false},
                     {3, Box{0, 0, 10, 10}, 1, 1, false}};
  const auto result =
      match(dets_of({{Box{0, 0, 10, 10}, 0.9, 1, 1, 0}}), ds, 0.5);
  CHECK(result.detections[0].matched_gt == 3);
}

TEST_CASE("average precision fixtures") {
  SUBCASE("single TP gives AP 1") {
    const auto result = match(
        dets_of({{Box{10, 10, 30, 30}, 0.9, 1, 1, 0}}), one_gt_dataset(), 0.5);
    CHECK(average_precision(result, 1).value() == 1.0);
  }
  SUBCASE("FP ranked above the TP gives AP 0.5 exactly") {
    const auto result = match(dets_of({{Box{70, 70, 90, 90}, 0.95, 1, 1, 0},
                                       {Box{10, 10, 30, 30}, 0.9, 1, 1, 1}}),
                              one_gt_dataset(), 0.5);
    CHECK(std::abs(average_precision(result, 1).value() - 0.5) < 1e-12);
  }
  SUBCASE("no detections with ground truth present gives AP 0") {
    const auto result = match(dets_of({}), one_gt_dataset(), 0.5);
    CHECK(average_precision(result, 1).value() == 0.0);
  }
  SUBCASE("category without ground truth is skipped") {
    const auto result = match(dets_of({}), one_gt_dataset(), 0.5);
    CHECK_FALSE(average_precision(result, 2).has_value());
  }
}

TEST_CASE("interpolated precision is non-increasing in recall") {
  Rng rng(61);
  Dataset ds;
  ds.images = {{1, 400, 400}};
  ds.categories = {{1, "a"}};
  std::vector<Detection> dets;
  for (int i = 0; i < 30; ++i) {
    const double x = rng.uniform(0, 350);
    const double y = rng.uniform(0, 350);
    ds.ground_truth.push_back(
        {i + 1, Box{x, y, x + 30, y + 30}, 1, 1, false});
    if (rng.bernoulli(0.7)) {
      dets.push_back({Box{x + rng.uniform(0, 8), y, x + 30, y + 30},
                      rng.uniform(), 1, 1, i});
    }
  }
  const auto result = match(dets_of(dets), ds, 0.5);
  const auto curve = pr_curve(result, 1).value();
  for (std::size_t i = 1; i < curve.interpolated.size(); ++i) {
    CHECK(curve.interpolated[i] <= curve.interpolated[i - 1] + 1e-15);
  }
  // precision * (TP + FP) equals the integer TP count at every rank.
  std::size_t tp = 0, fp = 0;
  for (const auto& m : result.detections) {
    if (m.ignored) continue;
    (m.tp ? tp : fp) += 1;
    const std::size_t rank = tp + fp;
    CHECK(std::abs(curve.precision[rank - 1] * static_cast<double>(rank) -
                   static_cast<double>(tp)) < 1e-9);
  }
}

TEST_CASE("map_metrics fixtures") {
  SUBCASE("perfect detector") {
    Dataset ds = one_gt_dataset();
    const auto m = map_metrics(
        dets_of({{Box{10, 10, 30, 30}, 1.0, 1, 1, 0}}), ds);
    CHECK(m.map == 1.0);
    CHECK(m.map50 == 1.0);
  }
  SUBCASE("IoU 0.7 exactly passes thresholds up to 0.70") {
    // det [10,10,30,24] vs gt [10,10,30,30]: inter 280, union 400 -> 0.7.
    const auto m = map_metrics(
        dets_of({{Box{10, 10, 30, 24}, 1.0, 1, 1, 0}}), one_gt_dataset());
    CHECK(m.map50 == 1.0);
    CHECK(std::abs(m.map - 0.5) < 1e-12);
  }
  SUBCASE("empty detections") {
    const auto m = map_metrics(dets_of({}), one_gt_dataset());
    CHECK(m.map == 0.0);
    CHECK(m.map50 == 0.0);
  }
}

TEST_CASE("TP count is non-increasing in the IoU threshold") {
  Rng rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset ds;
    ds.images = {{1, 300, 300}};
    ds.categories = {{1, "a"}, {2, "b"}};
    std::vector<Detection> dets;
    for (int i = 0; i < 12; ++i) {
      const double x = rng.uniform(0, 250);
      const double y = rng.uniform(0, 250);
      const int cat = static_cast<int>(rng.uniform_int(1, 2));
      ds.ground_truth.push_back({i + 1, Box{x, y, x + 40, y + 40}, cat, 1,
                                 false});
      dets.push_back({Box{x + rng.uniform(0, 25), y + rng.uniform(0, 25),
                          x + 40 + rng.uniform(-10, 10), y + 40},
                      rng.uniform(), cat, 1, i});
    }
    const auto set = dets_of(dets);
    std::size_t prev = dets.size() + 1;
    for (double t : coco_thresholds()) {
      const auto result = match(set, ds, t);
      std::size_t tp = 0;
      for (const auto& m : result.detections) tp += m.tp ? 1 : 0;
      CHECK(tp <= prev);
      prev = tp;
    }
  }
}

TEST_CASE("adding a non-overlapping FP never increases AP") {
  Rng rng(63);
  Dataset ds;
  ds.images = {{1, 500, 500}};
  ds.categories = {{1, "a"}};
  std::vector<Detection> dets;
  for (int i = 0; i < 10; ++i) {
    const double x = 5 + 45.0 * i;
    ds.ground_truth.push_back({i + 1, Box{x, 5, x + 30, 35}, 1, 1, false});
    if (i < 7) {
      dets.push_back({Box{x, 5, x + 30, 35}, rng.uniform(0.3, 0.9), 1, 1, i});
    }
  }
  const double base =
      average_precision(match(dets_of(dets), ds, 0.5), 1).value();

  auto with_low = dets;
  with_low.push_back({Box{5, 450, 35, 480}, 0.01, 1, 1, 100});
  const double low =
      average_precision(match(dets_of(with_low), ds, 0.5), 1).value();
  CHECK(low <= base + 1e-12);

  auto with_high = dets;
  with_high.push_back({Box{5, 450, 35, 480}, 0.99, 1, 1, 101});
  const double high =
      average_precision(match(dets_of(with_high), ds, 0.5), 1).value();
  CHECK(high <= base + 1e-12);
  CHECK(high < base);  // ranked above every TP, it must cost precision
}

TEST_CASE("greedy matcher agrees with the enumerated reference") {
  Rng rng(64);
  for (int trial = 0; trial < 200; ++trial) {
    Dataset ds;
    ds.images = {{1, 120, 120}};
    ds.categories = {{1, "a"}, {2, "b"}};
    std::vector<GroundTruthObject> gts;
    const int n_gt = static_cast<int>(rng.uniform_int(0, 8));
    for (int g = 0; g < n_gt; ++g) {
      const double x = rng.uniform(0, 80);
      const double y = rng.uniform(0, 80);
      GroundTruthObject gt{g + 1, Box{x, y, x + rng.uniform(15, 40),
                                      y + rng.uniform(15, 40)},
                           static_cast<int>(rng.uniform_int(1, 2)), 1, false};
      gts.push_back(gt);
      ds.ground_truth.push_back(gt);
    }
    auto dets = oracles::random_image_detections(rng, 8, 1, 2);
    const double t = rng.uniform(0.3, 0.7);
    const auto result = match(dets_of(dets), ds, t);
    std::size_t tp = 0;
    for (const auto& m : result.detections) tp += m.tp ? 1 : 0;
    CHECK(tp == oracles::enumerate_greedy_tp(dets, gts, t));
  }
}

TEST_CASE("matches_csv exposes labels in confidence order") {
  const auto result = match(dets_of({{Box{10, 10, 30, 30}, 0.9, 1, 1, 0},
                                     {Box{70, 70, 90, 90}, 0.4, 1, 1, 1}}),
                            one_gt_dataset(), 0.5);
  const std::string csv = matches_csv(result);
  CHECK(csv.rfind("detection_id,image_id,category_id,confidence,tp,t_iou\n",
                  0) == 0);
  CHECK(csv.find("0,1,1,0.9,1,0.5") != std::string::npos);
  CHECK(csv.find("1,1,1,0.4,0,0.5") != std::string::npos);
}
