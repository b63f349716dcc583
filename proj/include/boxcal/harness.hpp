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
#ifndef BOXCAL_HARNESS_HPP_
#define BOXCAL_HARNESS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "boxcal/calib_metrics.hpp"
#include "boxcal/calibration.hpp"
#include "boxcal/types.hpp"

namespace boxcal {

// Image-wise cross-validation plan: `repeats` random fit/eval partitions of
// fit_fraction of the images each.
struct SplitPlan {
  std::uint64_t seed = 1;
  int repeats = 10;
  double fit_fraction = 0.6;

  void validate() const;
};

struct ImageSplit {
  std::vector<int> fit_images;   // sorted
  std::vector<int> eval_images;  // sorted, disjoint complement
};

std::vector<ImageSplit> make_splits(std::vector<int> image_ids,
                                    const SplitPlan& plan);

// Restriction helpers for partitioned evaluation.
Dataset subset_dataset(const Dataset& ds, const std::vector<int>& images);
DetectionSet subset_detections(const DetectionSet& ds,
                               const std::vector<int>& images);

// Supervision extraction: TP labels from greedy matching at t_iou plus the
// per-detection Jaccard summaries. Crowd-absorbed detections are skipped.
std::vector<LabeledSample> labeled_samples(const DetectionSet& dets,
                                           const Dataset& gt,
                                           const FeatureRecipe& recipe,
                                           double t_iou);
std::vector<CalibrationSample> calibration_samples(const DetectionSet& dets,
                                                   const Dataset& gt,
                                                   double t_iou);

enum class Pipeline {
  none,
  nms,
  soft_nms,
  beta_univariate,
  iou_aware,
  nms_plus_beta,
  soft_plus_beta,
};

std::string_view pipeline_name(Pipeline p);
std::optional<Pipeline> pipeline_from_name(std::string_view name);

struct PipelineParams {
  double t_nms = 0.5;
  double sigma = 0.2;
  double hard_floor = 0.0;
  double soft_floor = 1e-3;
  bool class_agnostic = false;
  FeatureRecipe recipe;  // conditioning recipe for iou_aware
  FitObjective objective = FitObjective::nll;

  static FeatureRecipe univariate_beta();
};

struct RunConfig {
  Pipeline pipeline = Pipeline::none;
  PipelineParams params;
  SplitPlan split;
  int cap_pre = 400;
  int cap_eval = 100;
  double t_iou_fit = 0.5;
  double t_iou_metrics = 0.5;
  BinningSpec bins;
  bool metrics_uncapped = false;
  bool cap_per_class = false;
};

struct MetricRow {
  double map = 0.0;
  double map50 = 0.0;
  double ece = 0.0;
  double ace = 0.0;
  double sce = 0.0;
  double nll = 0.0;
};

struct SplitOutcome {
  int index = 0;
  bool ok = true;
  std::string error;
  MetricRow metrics;
  std::size_t fit_image_count = 0;
  std::size_t eval_image_count = 0;
};

// Mean with maximum positive / negative deviation over the non-skipped rows.
struct Aggregate {
  MetricRow mean;
  MetricRow max_pos_dev;
  MetricRow max_neg_dev;
  int split_count = 0;
};

Aggregate aggregate_rows(const std::vector<SplitOutcome>& rows);

struct EvalReport {
  std::string pipeline;
  std::string params;  // short human-readable parameter description
  std::uint64_t seed = 0;
  int repeats = 0;
  double fit_fraction = 0.0;
  int cap_pre = 0;
  int cap_eval = 0;
  double t_iou_fit = 0.0;
  double t_iou_metrics = 0.0;
  std::map<std::string, std::uint64_t> substreams;
  std::vector<SplitOutcome> splits;
  Aggregate aggregate;
  int skipped = 0;

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  std::string render() const;  // fixed-format table, metrics in percent
};

EvalReport run_pipeline(const Dataset& gt, const DetectionSet& dets,
                        const RunConfig& cfg);

// Whole-set variant: fitting pipelines fit in-sample on the full set and the
// metrics are computed on the same set (the sweep's oracle-tuning view).
// The report carries a single pseudo-split.
EvalReport run_whole(const Dataset& gt, const DetectionSet& dets,
                     const RunConfig& cfg);

// Hyper-parameter grid. Default grids: hard NMS t in [0.40, 0.90], 11 linear
// steps; soft-NMS sigma in [0.001, 0.20], 20 log steps.
struct SweepGrid {
  std::string parameter = "t_nms";
  double start = 0.4;
  double stop = 0.9;
  int steps = 11;
  bool log_spacing = false;

  static SweepGrid hard_nms_default();
  static SweepGrid soft_nms_default();
  std::vector<double> points() const;
  void validate() const;
};

struct SweepRow {
  double value = 0.0;
  double map = 0.0;
  double map50 = 0.0;
};

struct SweepResult {
  Pipeline method = Pipeline::nms;
  SweepGrid grid;
  std::vector<SweepRow> rows;
  std::size_t best = 0;  // argmax by map

  std::string csv() const;
};

// Oracle tuning on the full provided set (no splits), matching how swept
// baselines are reported.
SweepResult sweep(const Dataset& gt, const DetectionSet& dets, Pipeline method,
                  const SweepGrid& grid, const RunConfig& base);

struct TiouCell {
  double t_fit = 0.0;
  double t_eval = 0.0;
  MetricRow metrics;  // map/map50 left zero; calibration metrics filled
  double mean_fit_tp_count = 0.0;
  int skipped_splits = 0;
};

// Fits the conditioning recipe at each t_fit and scores calibration metrics
// against labels at each t_eval, averaged over the split plan.
std::vector<TiouCell> tiou_study(const Dataset& gt, const DetectionSet& dets,
                                 const std::vector<double>& t_fit,
                                 const std::vector<double>& t_eval,
                                 const RunConfig& base);

std::string tiou_csv(const std::vector<TiouCell>& cells);

struct AblationRow {
  FeatureRecipe recipe;
  Aggregate aggregate;
  int skipped = 0;
};

// The conditioning-variable grid: confidence alone, each overlap statistic
// alone, and every combination of the extra statistics with j_min_suppressing.
std::vector<FeatureRecipe> ablation_recipe_grid();

// Family/dependence grid over the bivariate recipe plus univariates; used by
// the gradient verification sweep.
std::vector<FeatureRecipe> calibration_method_grid();

std::vector<AblationRow> ablation_suite(const Dataset& gt,
                                        const DetectionSet& dets,
                                        const RunConfig& base);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace boxcal

#endif  // BOXCAL_HARNESS_HPP_
