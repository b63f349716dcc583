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
#include <sstream>

#include "boxcal/detection_eval.hpp"
#include "boxcal/geometry.hpp"
#include "boxcal/rng.hpp"
#include "boxcal/suppression.hpp"

namespace boxcal {

void SplitPlan::validate() const {
  if (repeats < 1) throw ContractViolation("split: repeats must be >= 1");
  if (!(fit_fraction > 0.0 && fit_fraction < 1.0)) {
    throw ContractViolation("split: fit_fraction must be in (0, 1)");
  }
}

std::vector<ImageSplit> make_splits(std::vector<int> image_ids,
                                    const SplitPlan& plan) {
  plan.validate();
  if (image_ids.size() < 2) {
    throw ContractViolation("split: need at least 2 images");
  }
  std::sort(image_ids.begin(), image_ids.end());
  Rng rng = Rng::substream(plan.seed, "splits");

  std::vector<ImageSplit> splits;
  const std::size_t n = image_ids.size();
  auto n_fit = static_cast<std::size_t>(
      std::llround(plan.fit_fraction * static_cast<double>(n)));
  n_fit = std::clamp<std::size_t>(n_fit, 1, n - 1);
  for (int r = 0; r < plan.repeats; ++r) {
    auto shuffled = image_ids;
    rng.shuffle(shuffled);
    ImageSplit split;
    split.fit_images.assign(shuffled.begin(),
                            shuffled.begin() + static_cast<long>(n_fit));
    split.eval_images.assign(shuffled.begin() + static_cast<long>(n_fit),
                             shuffled.end());
    std::sort(split.fit_images.begin(), split.fit_images.end());
    std::sort(split.eval_images.begin(), split.eval_images.end());
    splits.push_back(std::move(split));
  }
  return splits;
}

Dataset subset_dataset(const Dataset& ds, const std::vector<int>& images) {
  const std::set<int> keep(images.begin(), images.end());
  Dataset out;
  out.categories = ds.categories;
  for (const auto& img : ds.images) {
    if (keep.count(img.id)) out.images.push_back(img);
  }
  for (const auto& gt : ds.ground_truth) {
    if (keep.count(gt.image)) out.ground_truth.push_back(gt);
  }
  return out;
}

DetectionSet subset_detections(const DetectionSet& ds,
                               const std::vector<int>& images) {
  DetectionSet out;
  out.per_image_cap = ds.per_image_cap;
  for (int image : images) {
    auto it = ds.by_image.find(image);
    if (it != ds.by_image.end()) out.by_image[image] = it->second;
  }
  return out;
}

namespace {

// tp/ignored flags per detection id.
std::map<std::int64_t, std::pair<bool, bool>> label_map(
    const DetectionSet& dets, const Dataset& gt, double t_iou) {
  const MatchResult result = match(dets, gt, t_iou);
  std::map<std::int64_t, std::pair<bool, bool>> labels;
  for (const auto& m : result.detections) {
    labels[m.detection_id] = {m.tp, m.ignored};
  }
  return labels;
}

}  // namespace

std::vector<LabeledSample> labeled_samples(const DetectionSet& dets,
                                           const Dataset& gt,
                                           const FeatureRecipe& recipe,
                                           double t_iou) {
  recipe.validate();
  const auto labels = label_map(dets, gt, t_iou);
  std::vector<LabeledSample> samples;
  const double eps = recipe.epsilon_clip;
  for (const auto& [image, image_dets] : dets.by_image) {
    const auto summaries = jaccard_summaries(image_dets);
    for (std::size_t i = 0; i < image_dets.size(); ++i) {
      const auto& [tp, ignored] = labels.at(image_dets[i].detection_id);
      if (ignored) continue;
      const VariateValues values =
          VariateValues::from(image_dets[i].confidence, summaries[i]);
      LabeledSample sample;
      sample.tp = tp;
      sample.values.reserve(recipe.variates.size());
      for (Variate v : recipe.variates) {
        sample.values.push_back(std::clamp(values.get(v), eps, 1.0 - eps));
      }
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

std::vector<CalibrationSample> calibration_samples(const DetectionSet& dets,
                                                   const Dataset& gt,
                                                   double t_iou) {
  const auto labels = label_map(dets, gt, t_iou);
  std::vector<CalibrationSample> samples;
  for (const auto& [image, image_dets] : dets.by_image) {
    for (const auto& det : image_dets) {
      const auto& [tp, ignored] = labels.at(det.detection_id);
      if (ignored) continue;
      samples.push_back({det.confidence, tp, det.category});
    }
  }
  return samples;
}

std::string_view pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::none: return "none";
    case Pipeline::nms: return "nms";
    case Pipeline::soft_nms: return "soft_nms";
    case Pipeline::beta_univariate: return "beta_univariate";
    case Pipeline::iou_aware: return "iou_aware";
    case Pipeline::nms_plus_beta: return "nms_plus_beta";
    case Pipeline::soft_plus_beta: return "soft_plus_beta";
  }
  return "?";
}

std::optional<Pipeline> pipeline_from_name(std::string_view name) {
  for (Pipeline p : {Pipeline::none, Pipeline::nms, Pipeline::soft_nms,
                     Pipeline::beta_univariate, Pipeline::iou_aware,
                     Pipeline::nms_plus_beta, Pipeline::soft_plus_beta}) {
    if (name == pipeline_name(p)) return p;
  }
  return std::nullopt;
}

FeatureRecipe PipelineParams::univariate_beta() {
  FeatureRecipe recipe;
  recipe.family = CalibrationFamily::beta;
  recipe.variates = {Variate::confidence};
  recipe.dependent = false;
  return recipe;
}

namespace {

DetectionSet apply_cap_per_class(const DetectionSet& ds, int cap) {
  if (cap < 0) throw ContractViolation("apply_cap: cap must be >= 0");
  DetectionSet out;
  out.per_image_cap = ds.per_image_cap;
  for (const auto& [image, dets] : ds.by_image) {
    std::map<int, int> taken;
    std::vector<Detection> kept;
    for (const auto& det : dets) {  // confidence_order
      if (taken[det.category] < cap) {
        kept.push_back(det);
        taken[det.category] += 1;
      }
    }
    if (!kept.empty()) out.by_image[image] = std::move(kept);
  }
  return out;
}

struct PipelineRun {
  DetectionSet processed;  // eval partition after the full chain, pre eval-cap
};

PipelineRun execute_pipeline(const RunConfig& cfg, const Dataset& fit_gt,
                             const DetectionSet& fit_dets,
                             const DetectionSet& eval_dets) {
  const auto hard = SuppressionConfig::hard_nms(
      cfg.params.t_nms, cfg.params.hard_floor, cfg.params.class_agnostic);
  const auto soft = SuppressionConfig::soft_nms(
      cfg.params.sigma, cfg.params.soft_floor, cfg.params.class_agnostic);
  FitOptions fit_opts;
  fit_opts.objective = cfg.params.objective;
  fit_opts.t_iou_labels = cfg.t_iou_fit;

  switch (cfg.pipeline) {
    case Pipeline::none:
      return {eval_dets};
    case Pipeline::nms:
      return {suppress_all(eval_dets, hard)};
    case Pipeline::soft_nms:
      return {suppress_all(eval_dets, soft)};
    case Pipeline::beta_univariate: {
      const auto recipe = PipelineParams::univariate_beta();
      const auto model = fit(
          labeled_samples(fit_dets, fit_gt, recipe, cfg.t_iou_fit), recipe,
          fit_opts);
      return {iou_aware_calibrate(eval_dets, model)};
    }
    case Pipeline::iou_aware: {
      const auto model = fit(
          labeled_samples(fit_dets, fit_gt, cfg.params.recipe, cfg.t_iou_fit),
          cfg.params.recipe, fit_opts);
      return {iou_aware_calibrate(eval_dets, model)};
    }
    case Pipeline::nms_plus_beta:
    case Pipeline::soft_plus_beta: {
      const auto& sup = cfg.pipeline == Pipeline::nms_plus_beta ? hard : soft;
      const auto recipe = PipelineParams::univariate_beta();
      const auto fit_sup = suppress_all(fit_dets, sup);
      const auto model =
          fit(labeled_samples(fit_sup, fit_gt, recipe, cfg.t_iou_fit), recipe,
              fit_opts);
      return {iou_aware_calibrate(suppress_all(eval_dets, sup), model)};
    }
  }
  throw ContractViolation("run_pipeline: unknown pipeline");
}

std::string params_description(const RunConfig& cfg) {
  std::ostringstream out;
  switch (cfg.pipeline) {
    case Pipeline::none:
      break;
    case Pipeline::nms:
    case Pipeline::nms_plus_beta:
      out << "t_nms=" << cfg.params.t_nms;
      break;
    case Pipeline::soft_nms:
    case Pipeline::soft_plus_beta:
      out << "sigma=" << cfg.params.sigma;
      break;
    case Pipeline::beta_univariate:
      out << PipelineParams::univariate_beta().describe();
      break;
    case Pipeline::iou_aware:
      out << cfg.params.recipe.describe();
      break;
  }
  return out.str();
}

}  // namespace

Aggregate aggregate_rows(const std::vector<SplitOutcome>& rows) {
  Aggregate agg;
  auto fields = {&MetricRow::map,  &MetricRow::map50, &MetricRow::ece,
                 &MetricRow::ace,  &MetricRow::sce,   &MetricRow::nll};
  for (const auto& row : rows) {
    if (!row.ok) continue;
    agg.split_count += 1;
    for (auto f : fields) agg.mean.*f += row.metrics.*f;
  }
  if (agg.split_count == 0) return agg;
  for (auto f : fields) agg.mean.*f /= agg.split_count;
  for (const auto& row : rows) {
    if (!row.ok) continue;
    for (auto f : fields) {
      const double dev = row.metrics.*f - agg.mean.*f;
      agg.max_pos_dev.*f = std::max(agg.max_pos_dev.*f, dev);
      agg.max_neg_dev.*f = std::max(agg.max_neg_dev.*f, -dev);
    }
  }
  return agg;
}

EvalReport run_pipeline(const Dataset& gt, const DetectionSet& dets,
                        const RunConfig& cfg) {
  cfg.split.validate();
  cfg.bins.validate();

  const DetectionSet pre = cfg.cap_per_class
                               ? apply_cap_per_class(dets, cfg.cap_pre)
                               : apply_cap(dets, cfg.cap_pre);

  std::vector<int> image_ids;
  image_ids.reserve(gt.images.size());
  for (const auto& img : gt.images) image_ids.push_back(img.id);
  const auto splits = make_splits(image_ids, cfg.split);

  EvalReport report;
  report.pipeline = std::string(pipeline_name(cfg.pipeline));
  report.params = params_description(cfg);
  report.seed = cfg.split.seed;
  report.repeats = cfg.split.repeats;
  report.fit_fraction = cfg.split.fit_fraction;
  report.cap_pre = cfg.cap_pre;
  report.cap_eval = cfg.cap_eval;
  report.t_iou_fit = cfg.t_iou_fit;
  report.t_iou_metrics = cfg.t_iou_metrics;
  report.substreams["splits"] = Rng::derive_seed(cfg.split.seed, "splits");

  for (std::size_t r = 0; r < splits.size(); ++r) {
    SplitOutcome outcome;
    outcome.index = static_cast<int>(r);
    outcome.fit_image_count = splits[r].fit_images.size();
    outcome.eval_image_count = splits[r].eval_images.size();
    try {
      const Dataset fit_gt = subset_dataset(gt, splits[r].fit_images);
      const Dataset eval_gt = subset_dataset(gt, splits[r].eval_images);
      const DetectionSet fit_dets =
          subset_detections(pre, splits[r].fit_images);
      const DetectionSet eval_dets =
          subset_detections(pre, splits[r].eval_images);

      const PipelineRun run =
          execute_pipeline(cfg, fit_gt, fit_dets, eval_dets);
      const DetectionSet capped = apply_cap(run.processed, cfg.cap_eval);

      const MapMetrics perf = map_metrics(capped, eval_gt, cfg.cap_eval);
      const auto samples = calibration_samples(
          cfg.metrics_uncapped ? run.processed : capped, eval_gt,
          cfg.t_iou_metrics);
      outcome.metrics.map = perf.map;
      outcome.metrics.map50 = perf.map50;
      outcome.metrics.ece = ece(samples, cfg.bins);
      outcome.metrics.ace = ace(samples, cfg.bins);
      outcome.metrics.sce = sce(samples, cfg.bins);
      outcome.metrics.nll = nll(samples);
    } catch (const FitError& e) {
      outcome.ok = false;
      outcome.error = e.what();
    } catch (const ContractViolation& e) {
      outcome.ok = false;
      outcome.error = e.what();
    }
    if (!outcome.ok) report.skipped += 1;
    report.splits.push_back(std::move(outcome));
  }
  report.aggregate = aggregate_rows(report.splits);
  return report;
}

namespace {

nlohmann::ordered_json metric_row_to_json(const MetricRow& m) {
  return {{"map", m.map},   {"map50", m.map50}, {"ece", m.ece},
          {"ace", m.ace},   {"sce", m.sce},     {"nll", m.nll}};
}

MetricRow metric_row_from_json(const nlohmann::json& j) {
  MetricRow m;
  m.map = j.at("map").get<double>();
  m.map50 = j.at("map50").get<double>();
  m.ece = j.at("ece").get<double>();
  m.ace = j.at("ace").get<double>();
  m.sce = j.at("sce").get<double>();
  m.nll = j.at("nll").get<double>();
  return m;
}

}  // namespace

EvalReport run_whole(const Dataset& gt, const DetectionSet& dets,
                     const RunConfig& cfg) {
  cfg.bins.validate();
  const DetectionSet pre = cfg.cap_per_class
                               ? apply_cap_per_class(dets, cfg.cap_pre)
                               : apply_cap(dets, cfg.cap_pre);

  EvalReport report;
  report.pipeline = std::string(pipeline_name(cfg.pipeline));
  report.params = params_description(cfg);
  report.seed = cfg.split.seed;
  report.repeats = 1;
  report.fit_fraction = 1.0;
  report.cap_pre = cfg.cap_pre;
  report.cap_eval = cfg.cap_eval;
  report.t_iou_fit = cfg.t_iou_fit;
  report.t_iou_metrics = cfg.t_iou_metrics;

  SplitOutcome outcome;
  outcome.index = 0;
  outcome.fit_image_count = gt.images.size();
  outcome.eval_image_count = gt.images.size();
  try {
    const PipelineRun run = execute_pipeline(cfg, gt, pre, pre);
    const DetectionSet capped = apply_cap(run.processed, cfg.cap_eval);
    const MapMetrics perf = map_metrics(capped, gt, cfg.cap_eval);
    const auto samples = calibration_samples(
        cfg.metrics_uncapped ? run.processed : capped, gt, cfg.t_iou_metrics);
    outcome.metrics.map = perf.map;
    outcome.metrics.map50 = perf.map50;
    outcome.metrics.ece = ece(samples, cfg.bins);
    outcome.metrics.ace = ace(samples, cfg.bins);
    outcome.metrics.sce = sce(samples, cfg.bins);
    outcome.metrics.nll = nll(samples);
  } catch (const FitError& e) {
    outcome.ok = false;
    outcome.error = e.what();
    report.skipped = 1;
  }
  report.splits.push_back(std::move(outcome));
  report.aggregate = aggregate_rows(report.splits);
  return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["header"]["pipeline"] = pipeline;
  j["header"]["params"] = params;
  j["header"]["seed"] = seed;
  j["header"]["repeats"] = repeats;
  j["header"]["fit_fraction"] = fit_fraction;
  j["header"]["cap_pre"] = cap_pre;
  j["header"]["cap_eval"] = cap_eval;
  j["header"]["t_iou_fit"] = t_iou_fit;
  j["header"]["t_iou_metrics"] = t_iou_metrics;
  j["header"]["substreams"] = substreams;
  auto& rows = j["splits"] = nlohmann::ordered_json::array();
  for (const auto& s : splits) {
    nlohmann::ordered_json row;
    row["index"] = s.index;
    row["ok"] = s.ok;
    if (!s.ok) row["error"] = s.error;
    row["fit_images"] = s.fit_image_count;
    row["eval_images"] = s.eval_image_count;
    if (s.ok) row["metrics"] = metric_row_to_json(s.metrics);
    rows.push_back(std::move(row));
  }
  j["aggregate"]["split_count"] = aggregate.split_count;
  j["aggregate"]["mean"] = metric_row_to_json(aggregate.mean);
  j["aggregate"]["max_pos_dev"] = metric_row_to_json(aggregate.max_pos_dev);
  j["aggregate"]["max_neg_dev"] = metric_row_to_json(aggregate.max_neg_dev);
  j["skipped"] = skipped;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  const auto& h = j.at("header");
  r.pipeline = h.at("pipeline").get<std::string>();
  r.params = h.at("params").get<std::string>();
  r.seed = h.at("seed").get<std::uint64_t>();
  r.repeats = h.at("repeats").get<int>();
  r.fit_fraction = h.at("fit_fraction").get<double>();
  r.cap_pre = h.at("cap_pre").get<int>();
  r.cap_eval = h.at("cap_eval").get<int>();
  r.t_iou_fit = h.at("t_iou_fit").get<double>();
  r.t_iou_metrics = h.at("t_iou_metrics").get<double>();
  r.substreams =
      h.at("substreams").get<std::map<std::string, std::uint64_t>>();
  for (const auto& row : j.at("splits")) {
    SplitOutcome s;
    s.index = row.at("index").get<int>();
    s.ok = row.at("ok").get<bool>();
    if (!s.ok) s.error = row.at("error").get<std::string>();
    s.fit_image_count = row.at("fit_images").get<std::size_t>();
    s.eval_image_count = row.at("eval_images").get<std::size_t>();
    if (s.ok) s.metrics = metric_row_from_json(row.at("metrics"));
    r.splits.push_back(std::move(s));
  }
  r.aggregate.split_count = j.at("aggregate").at("split_count").get<int>();
  r.aggregate.mean = metric_row_from_json(j.at("aggregate").at("mean"));
  r.aggregate.max_pos_dev =
      metric_row_from_json(j.at("aggregate").at("max_pos_dev"));
  r.aggregate.max_neg_dev =
      metric_row_from_json(j.at("aggregate").at("max_neg_dev"));
  r.skipped = j.at("skipped").get<int>();
  return r;
}

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string EvalReport::render() const {
  std::ostringstream out;
  out << "pipeline: " << pipeline;
  if (!params.empty()) out << " (" << params << ")";
  out << "\nsplits: " << repeats << " x " << fixed2(fit_fraction * 100.0)
      << "% fit, seed " << seed << ", caps " << cap_pre << "/" << cap_eval
      << ", t_iou fit " << fixed2(t_iou_fit) << " metrics "
      << fixed2(t_iou_metrics) << "\n";
  if (skipped > 0) out << "skipped splits: " << skipped << "\n";
  out << "metric      mean   (+max    -max)\n";
  struct Line {
    const char* name;
    double MetricRow::* field;
    double scale;
  };
  const Line lines[] = {
      {"mAP   [%]", &MetricRow::map, 100.0},
      {"mAP50 [%]", &MetricRow::map50, 100.0},
      {"ECE   [%]", &MetricRow::ece, 100.0},
      {"ACE   [%]", &MetricRow::ace, 100.0},
      {"SCE   [%]", &MetricRow::sce, 100.0},
      {"NLL      ", &MetricRow::nll, 1.0},
  };
  for (const auto& line : lines) {
    out << line.name << "  " << fixed2(aggregate.mean.*line.field * line.scale)
        << "  (+" << fixed2(aggregate.max_pos_dev.*line.field * line.scale)
        << "  -" << fixed2(aggregate.max_neg_dev.*line.field * line.scale)
        << ")\n";
  }
  return out.str();
}

SweepGrid SweepGrid::hard_nms_default() {
  return SweepGrid{"t_nms", 0.40, 0.90, 11, false};
}

SweepGrid SweepGrid::soft_nms_default() {
  return SweepGrid{"sigma", 0.001, 0.20, 20, true};
}

void SweepGrid::validate() const {
  if (steps < 1) throw ContractViolation("sweep: steps must be >= 1");
  if (log_spacing && !(start > 0.0 && stop > 0.0)) {
    throw ContractViolation("sweep: log spacing requires a positive interval");
  }
}

std::vector<double> SweepGrid::points() const {
  validate();
  std::vector<double> out;
  if (steps == 1) {
    out.push_back(start);
    return out;
  }
  for (int i = 0; i < steps; ++i) {
    const double f = static_cast<double>(i) / (steps - 1);
    if (log_spacing) {
      out.push_back(start * std::pow(stop / start, f));
    } else {
      out.push_back(start + f * (stop - start));
    }
  }
  return out;
}

SweepResult sweep(const Dataset& gt, const DetectionSet& dets, Pipeline method,
                  const SweepGrid& grid, const RunConfig& base) {
  if (method != Pipeline::nms && method != Pipeline::soft_nms) {
    throw ContractViolation("sweep: method must be nms or soft_nms");
  }
  const DetectionSet pre = base.cap_per_class
                               ? apply_cap_per_class(dets, base.cap_pre)
                               : apply_cap(dets, base.cap_pre);
  SweepResult result;
  result.method = method;
  result.grid = grid;
  for (double value : grid.points()) {
    const auto cfg =
        method == Pipeline::nms
            ? SuppressionConfig::hard_nms(value, base.params.hard_floor,
                                          base.params.class_agnostic)
            : SuppressionConfig::soft_nms(value, base.params.soft_floor,
                                          base.params.class_agnostic);
    const MapMetrics m =
        map_metrics(suppress_all(pre, cfg), gt, base.cap_eval);
    result.rows.push_back({value, m.map, m.map50});
  }
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    if (result.rows[i].map > result.rows[result.best].map) result.best = i;
  }
  return result;
}

std::string SweepResult::csv() const {
  std::ostringstream out;
  out << "parameter,value,map,map50,best\n";
  out.precision(17);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << grid.parameter << ',' << rows[i].value << ',' << rows[i].map << ','
        << rows[i].map50 << ',' << (i == best ? 1 : 0) << '\n';
  }
  return out.str();
}

std::vector<TiouCell> tiou_study(const Dataset& gt, const DetectionSet& dets,
                                 const std::vector<double>& t_fit,
                                 const std::vector<double>& t_eval,
                                 const RunConfig& base) {
  base.split.validate();
  const DetectionSet pre = base.cap_per_class
                               ? apply_cap_per_class(dets, base.cap_pre)
                               : apply_cap(dets, base.cap_pre);
  std::vector<int> image_ids;
  for (const auto& img : gt.images) image_ids.push_back(img.id);
  const auto splits = make_splits(image_ids, base.split);

  std::vector<TiouCell> cells;
  for (double tf : t_fit) {
    // One cell accumulator per t_eval.
    std::vector<TiouCell> row(t_eval.size());
    for (std::size_t e = 0; e < t_eval.size(); ++e) {
      row[e].t_fit = tf;
      row[e].t_eval = t_eval[e];
    }
    for (const auto& split : splits) {
      try {
        const Dataset fit_gt = subset_dataset(gt, split.fit_images);
        const Dataset eval_gt = subset_dataset(gt, split.eval_images);
        const DetectionSet fit_dets = subset_detections(pre, split.fit_images);
        const DetectionSet eval_dets =
            subset_detections(pre, split.eval_images);

        const auto samples =
            labeled_samples(fit_dets, fit_gt, base.params.recipe, tf);
        FitOptions opts;
        opts.objective = base.params.objective;
        opts.t_iou_labels = tf;
        const auto model = fit(samples, base.params.recipe, opts);
        std::size_t tp_count = 0;
        for (const auto& s : samples) tp_count += s.tp ? 1 : 0;

        const DetectionSet capped =
            apply_cap(iou_aware_calibrate(eval_dets, model), base.cap_eval);
        for (std::size_t e = 0; e < t_eval.size(); ++e) {
          const auto eval_samples =
              calibration_samples(capped, eval_gt, t_eval[e]);
          row[e].metrics.ece += ece(eval_samples, base.bins);
          row[e].metrics.ace += ace(eval_samples, base.bins);
          row[e].metrics.sce += sce(eval_samples, base.bins);
          row[e].metrics.nll += nll(eval_samples);
          row[e].mean_fit_tp_count += static_cast<double>(tp_count);
        }
      } catch (const FitError&) {
        for (auto& cell : row) cell.skipped_splits += 1;
      }
    }
    for (auto& cell : row) {
      const int used = base.split.repeats - cell.skipped_splits;
      if (used > 0) {
        cell.metrics.ece /= used;
        cell.metrics.ace /= used;
        cell.metrics.sce /= used;
        cell.metrics.nll /= used;
        cell.mean_fit_tp_count /= used;
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string tiou_csv(const std::vector<TiouCell>& cells) {
  std::ostringstream out;
  out << "t_fit,t_eval,ece,ace,sce,nll,mean_fit_tp_count,skipped_splits\n";
  out.precision(17);
  for (const auto& c : cells) {
    out << c.t_fit << ',' << c.t_eval << ',' << c.metrics.ece << ','
        << c.metrics.ace << ',' << c.metrics.sce << ',' << c.metrics.nll << ','
        << c.mean_fit_tp_count << ',' << c.skipped_splits << '\n';
  }
  return out.str();
}

std::vector<FeatureRecipe> ablation_recipe_grid() {
  using V = Variate;
  const std::vector<std::vector<V>> sets = {
      {V::confidence},
      {V::confidence, V::j_min_suppressing},
      {V::confidence, V::j_prod_suppressing},
      {V::confidence, V::j_min_suppressed},
      {V::confidence, V::j_prod_suppressed},
      {V::confidence, V::j_min_suppressing, V::j_prod_suppressing},
      {V::confidence, V::j_min_suppressing, V::j_min_suppressed},
      {V::confidence, V::j_min_suppressing, V::j_prod_suppressing,
       V::j_min_suppressed},
      {V::confidence, V::j_min_suppressing, V::j_prod_suppressed},
      {V::confidence, V::j_min_suppressing, V::j_min_suppressed,
       V::j_prod_suppressed},
      {V::confidence, V::j_min_suppressing, V::j_prod_suppressing,
       V::j_prod_suppressed},
      {V::confidence, V::j_min_suppressing, V::j_prod_suppressing,
       V::j_min_suppressed, V::j_prod_suppressed},
  };
  std::vector<FeatureRecipe> recipes;
  for (const auto& variates : sets) {
    FeatureRecipe r;
    r.family = CalibrationFamily::beta;
    r.variates = variates;
    r.dependent = variates.size() > 1;
    recipes.push_back(std::move(r));
  }
  return recipes;
}

std::vector<FeatureRecipe> calibration_method_grid() {
  std::vector<FeatureRecipe> recipes;
  for (CalibrationFamily family :
       {CalibrationFamily::logistic, CalibrationFamily::beta}) {
    for (bool dependent : {false, true}) {
      FeatureRecipe r;
      r.family = family;
      r.variates = {Variate::confidence, Variate::j_min_suppressing};
      r.dependent = dependent;
      recipes.push_back(std::move(r));
    }
    FeatureRecipe uni;
    uni.family = family;
    uni.variates = {Variate::confidence};
    uni.dependent = false;
    recipes.push_back(std::move(uni));
  }
  return recipes;
}

std::vector<AblationRow> ablation_suite(const Dataset& gt,
                                        const DetectionSet& dets,
                                        const RunConfig& base) {
  std::vector<AblationRow> rows;
  for (const auto& recipe : ablation_recipe_grid()) {
    RunConfig cfg = base;
    cfg.pipeline = Pipeline::iou_aware;
    cfg.params.recipe = recipe;
    const EvalReport report = run_pipeline(gt, dets, cfg);
    rows.push_back({recipe, report.aggregate, report.skipped});
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "recipe,map,map50,ece,ace,sce,nll,map_max_pos,map_max_neg,skipped\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.recipe.describe() << ',' << r.aggregate.mean.map << ','
        << r.aggregate.mean.map50 << ',' << r.aggregate.mean.ece << ','
        << r.aggregate.mean.ace << ',' << r.aggregate.mean.sce << ','
        << r.aggregate.mean.nll << ',' << r.aggregate.max_pos_dev.map << ','
        << r.aggregate.max_neg_dev.map << ',' << r.skipped << '\n';
  }
  return out.str();
}

}  // namespace boxcal
