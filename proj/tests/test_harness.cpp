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
#include "boxcal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

#include "boxcal/detection_eval.hpp"
#include "boxcal/synth.hpp"

using namespace boxcal;

namespace {

SynthResult duplicate_world(std::uint64_t seed = 77, int images = 250) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.images = images;
  cfg.objects_per_image = {1, 6};
  cfg.duplicate_count = {2, 3};
  cfg.duplicate_iou = {0.6, 0.9};
  cfg.law = ConfidenceLaw::overconfident_pow;
  cfg.law_param = 2.0;
  cfg.fp_rate = 0.5;
  cfg.categories = 4;
  return generate(cfg);
}

}  // namespace

TEST_CASE("splits are deterministic, disjoint and exhaustive") {
  std::vector<int> ids;
  for (int i = 1; i <= 53; ++i) ids.push_back(i);

  SplitPlan plan;
  plan.seed = 9;
  plan.repeats = 10;
  plan.fit_fraction = 0.6;
  const auto a = make_splits(ids, plan);
  const auto b = make_splits(ids, plan);
  REQUIRE(a.size() == 10);
  for (std::size_t r = 0; r < a.size(); ++r) {
    CHECK(a[r].fit_images == b[r].fit_images);
    CHECK(a[r].eval_images == b[r].eval_images);

    std::set<int> all(a[r].fit_images.begin(), a[r].fit_images.end());
    for (int id : a[r].eval_images) CHECK(all.insert(id).second);
    CHECK(all.size() == ids.size());
    CHECK(a[r].fit_images.size() == 32);  // round(0.6 * 53)
  }
  // Different seeds produce different partitions.
  plan.seed = 10;
  CHECK(make_splits(ids, plan)[0].fit_images != a[0].fit_images);
}

TEST_CASE("labeled samples carry matcher labels and clipped variates") {
  const SynthResult world = duplicate_world(5, 40);
  FeatureRecipe recipe;  // confidence + j_min_suppressing
  const auto samples =
      labeled_samples(world.detections, world.dataset, recipe, 0.5);
  REQUIRE(!samples.empty());
  std::size_t tp = 0;
  for (const auto& s : samples) {
    REQUIRE(s.values.size() == 2);
    for (double v : s.values) {
      CHECK(v >= recipe.epsilon_clip);
      CHECK(v <= 1.0 - recipe.epsilon_clip);
    }
    tp += s.tp ? 1 : 0;
  }
  const auto match_result = match(world.detections, world.dataset, 0.5);
  std::size_t expect_tp = 0, expect_n = 0;
  for (const auto& m : match_result.detections) {
    if (m.ignored) continue;
    ++expect_n;
    expect_tp += m.tp ? 1 : 0;
  }
  CHECK(samples.size() == expect_n);
  CHECK(tp == expect_tp);
}

TEST_CASE("fitting reads only the fit partition") {
  const SynthResult world = duplicate_world(11, 60);
  SplitPlan plan;
  plan.seed = 4;
  plan.repeats = 1;
  std::vector<int> ids;
  for (const auto& img : world.dataset.images) ids.push_back(img.id);
  const auto split = make_splits(ids, plan)[0];

  FeatureRecipe recipe;
  const auto fit_gt = subset_dataset(world.dataset, split.fit_images);
  const auto fit_dets = subset_detections(world.detections, split.fit_images);
  const auto model_a =
      fit(labeled_samples(fit_dets, fit_gt, recipe, 0.5), recipe);

  // Wipe every eval-partition label; fitted parameters must not move.
  Dataset censored = world.dataset;
  const std::set<int> eval_set(split.eval_images.begin(),
                               split.eval_images.end());
  std::erase_if(censored.ground_truth, [&](const GroundTruthObject& g) {
    return eval_set.count(g.image) > 0;
  });
  const auto fit_gt2 = subset_dataset(censored, split.fit_images);
  const auto model_b =
      fit(labeled_samples(fit_dets, fit_gt2, recipe, 0.5), recipe);
  CHECK(model_a.theta == model_b.theta);
}

TEST_CASE("report aggregate algebra matches the split rows") {
  const SynthResult world = duplicate_world(21, 120);
  RunConfig cfg;
  cfg.pipeline = Pipeline::nms;
  cfg.params.t_nms = 0.5;
  cfg.split.seed = 2;
  cfg.split.repeats = 5;
  const EvalReport report = run_pipeline(world.dataset, world.detections, cfg);
  REQUIRE(report.splits.size() == 5);
  REQUIRE(report.skipped == 0);

  double mean = 0.0;
  for (const auto& s : report.splits) mean += s.metrics.map50;
  mean /= 5.0;
  CHECK(report.aggregate.mean.map50 == doctest::Approx(mean).epsilon(1e-15));
  double pos = 0.0, neg = 0.0;
  for (const auto& s : report.splits) {
    pos = std::max(pos, s.metrics.map50 - mean);
    neg = std::max(neg, mean - s.metrics.map50);
  }
  CHECK(report.aggregate.max_pos_dev.map50 == pos);
  CHECK(report.aggregate.max_neg_dev.map50 == neg);
}

TEST_CASE("report JSON round-trips byte-identically") {
  const SynthResult world = duplicate_world(22, 80);
  RunConfig cfg;
  cfg.pipeline = Pipeline::iou_aware;
  cfg.split.repeats = 3;
  const EvalReport report = run_pipeline(world.dataset, world.detections, cfg);
  const std::string text = report.to_json().dump(2);
  const EvalReport reloaded =
      EvalReport::from_json(nlohmann::json::parse(text));
  CHECK(reloaded.to_json().dump(2) == text);
  CHECK(reloaded.render() == report.render());
}

TEST_CASE("iou-aware calibration beats the raw dump on every split") {
  const SynthResult world = duplicate_world(23, 250);
  RunConfig raw_cfg;
  raw_cfg.pipeline = Pipeline::none;
  raw_cfg.split.repeats = 4;
  RunConfig cal_cfg = raw_cfg;
  cal_cfg.pipeline = Pipeline::iou_aware;

  const EvalReport raw = run_pipeline(world.dataset, world.detections, raw_cfg);
  const EvalReport cal = run_pipeline(world.dataset, world.detections, cal_cfg);
  REQUIRE(cal.skipped == 0);
  for (std::size_t r = 0; r < raw.splits.size(); ++r) {
    CHECK(cal.splits[r].metrics.map50 >= raw.splits[r].metrics.map50);
  }
  CHECK(cal.aggregate.mean.ece < raw.aggregate.mean.ece);
}

TEST_CASE("sweep grids") {
  const auto soft = SweepGrid::soft_nms_default();
  const auto pts = soft.points();
  REQUIRE(pts.size() == 20);
  CHECK(pts.front() == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(pts.back() == doctest::Approx(0.2).epsilon(1e-12));
  for (std::size_t i = 2; i < pts.size(); ++i) {
    CHECK(pts[i] / pts[i - 1] ==
          doctest::Approx(pts[1] / pts[0]).epsilon(1e-9));
  }

  const auto hard = SweepGrid::hard_nms_default();
  const auto hpts = hard.points();
  REQUIRE(hpts.size() == 11);
  CHECK(hpts.front() == 0.4);
  CHECK(hpts.back() == 0.9);
  CHECK(hpts[1] - hpts[0] == doctest::Approx(0.05).epsilon(1e-12));

  SweepGrid one{"t_nms", 0.62, 0.9, 1, false};
  CHECK(one.points() == std::vector<double>{0.62});
}

TEST_CASE("sweep with one step equals a direct evaluation") {
  const SynthResult world = duplicate_world(24, 100);
  RunConfig base;
  const SweepGrid grid{"t_nms", 0.55, 0.55, 1, false};
  const SweepResult result =
      sweep(world.dataset, world.detections, Pipeline::nms, grid, base);
  REQUIRE(result.rows.size() == 1);

  RunConfig direct = base;
  direct.pipeline = Pipeline::nms;
  direct.params.t_nms = 0.55;
  const EvalReport report =
      run_whole(world.dataset, world.detections, direct);
  CHECK(result.rows[0].map == report.aggregate.mean.map);
  CHECK(result.rows[0].map50 == report.aggregate.mean.map50);
}

TEST_CASE("sweep is flat on a duplicate-free dump") {
  SynthConfig cfg;
  cfg.seed = 31;
  cfg.images = 100;
  cfg.duplicate_count = {0, 0};
  cfg.fp_rate = 0.0;
  const SynthResult world = generate(cfg);
  const SweepResult result =
      sweep(world.dataset, world.detections, Pipeline::nms,
            SweepGrid::hard_nms_default(), RunConfig{});
  for (const auto& row : result.rows) {
    CHECK(row.map50 == result.rows[0].map50);
  }
}

TEST_CASE("tiou study 1x1 equals run_pipeline calibration metrics") {
  const SynthResult world = duplicate_world(25, 150);
  RunConfig base;
  base.pipeline = Pipeline::iou_aware;
  base.split.repeats = 3;
  const auto cells =
      tiou_study(world.dataset, world.detections, {0.5}, {0.5}, base);
  REQUIRE(cells.size() == 1);

  base.t_iou_fit = 0.5;
  base.t_iou_metrics = 0.5;
  const EvalReport report =
      run_pipeline(world.dataset, world.detections, base);
  CHECK(cells[0].metrics.ece ==
        doctest::Approx(report.aggregate.mean.ece).epsilon(1e-12));
  CHECK(cells[0].metrics.nll ==
        doctest::Approx(report.aggregate.mean.nll).epsilon(1e-12));
}

TEST_CASE("ablation row with confidence only equals the univariate pipeline") {
  const SynthResult world = duplicate_world(26, 120);
  RunConfig base;
  base.split.repeats = 2;

  RunConfig uni = base;
  uni.pipeline = Pipeline::beta_univariate;
  const EvalReport uni_report =
      run_pipeline(world.dataset, world.detections, uni);

  RunConfig aware = base;
  aware.pipeline = Pipeline::iou_aware;
  aware.params.recipe = PipelineParams::univariate_beta();
  const EvalReport aware_report =
      run_pipeline(world.dataset, world.detections, aware);

  CHECK(uni_report.aggregate.mean.map50 == aware_report.aggregate.mean.map50);
  CHECK(uni_report.aggregate.mean.ece == aware_report.aggregate.mean.ece);
}

TEST_CASE("ablation grid shape and smoke run") {
  const auto grid = ablation_recipe_grid();
  CHECK(grid.size() == 12);
  for (const auto& r : grid) {
    CHECK(r.variates.front() == Variate::confidence);
    r.validate();
  }
  // All-variates recipe fits without error end to end.
  const SynthResult world = duplicate_world(27, 100);
  RunConfig cfg;
  cfg.pipeline = Pipeline::iou_aware;
  cfg.params.recipe = grid.back();
  cfg.split.repeats = 2;
  const EvalReport report = run_pipeline(world.dataset, world.detections, cfg);
  CHECK(report.skipped == 0);
  CHECK(report.aggregate.mean.map50 > 0.0);
}

TEST_CASE("splits lacking a label class are skipped and flagged") {
  // Detections never overlap any object: all labels are FP, so fitting
  // pipelines must fail per split while the report stays usable.
  Dataset ds;
  ds.categories = {{1, "a"}};
  std::vector<Detection> dets;
  for (int img = 1; img <= 12; ++img) {
    ds.images.push_back({img, 200, 200});
    ds.ground_truth.push_back(
        {img, Box{0, 0, 20, 20}, 1, img, false});
    for (int d = 0; d < 30; ++d) {
      dets.push_back({Box{100.0 + d, 100, 140.0 + d, 140},
                      0.1 + 0.8 * d / 30.0, 1, img,
                      img * 1000 + d});
    }
  }
  RunConfig cfg;
  cfg.pipeline = Pipeline::iou_aware;
  cfg.split.repeats = 3;
  const EvalReport report =
      run_pipeline(ds, DetectionSet::from_detections(dets), cfg);
  CHECK(report.skipped == 3);
  CHECK(report.aggregate.split_count == 0);
  for (const auto& s : report.splits) {
    CHECK_FALSE(s.ok);
    CHECK(!s.error.empty());
  }
}

TEST_CASE("nms_plus_beta fits on the suppressed fit partition") {
  const SynthResult world = duplicate_world(28, 150);
  RunConfig cfg;
  cfg.pipeline = Pipeline::nms_plus_beta;
  cfg.params.t_nms = 0.5;
  cfg.split.repeats = 3;
  const EvalReport report = run_pipeline(world.dataset, world.detections, cfg);
  REQUIRE(report.skipped == 0);

  RunConfig plain = cfg;
  plain.pipeline = Pipeline::nms;
  const EvalReport nms_only =
      run_pipeline(world.dataset, world.detections, plain);
  // Same suppression, so the ranking metrics coincide; calibration improves.
  CHECK(report.aggregate.mean.map50 ==
        doctest::Approx(nms_only.aggregate.mean.map50).epsilon(1e-12));
  CHECK(report.aggregate.mean.ece < nms_only.aggregate.mean.ece);
}
