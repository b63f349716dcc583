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
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "boxcal/calib_metrics.hpp"
#include "boxcal/calibration.hpp"
#include "boxcal/coco_io.hpp"
#include "boxcal/detection_eval.hpp"
#include "boxcal/harness.hpp"
#include "boxcal/suppression.hpp"
#include "boxcal/synth.hpp"
#include "boxcal/types.hpp"

namespace {

using namespace boxcal;

constexpr int kExitValidation = 2;
constexpr int kExitFit = 3;
constexpr int kExitIo = 4;

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(std::stod(item));
  }
  return out;
}

void parse_range(const std::string& text, double& lo, double& hi) {
  const auto pos = text.find(':');
  if (pos == std::string::npos) {
    lo = hi = std::stod(text);
    return;
  }
  lo = std::stod(text.substr(0, pos));
  hi = std::stod(text.substr(pos + 1));
}

void parse_range(const std::string& text, int& lo, int& hi) {
  double dlo, dhi;
  parse_range(text, dlo, dhi);
  lo = static_cast<int>(dlo);
  hi = static_cast<int>(dhi);
}

FeatureRecipe recipe_from_flags(const std::string& family,
                                const std::string& variates, bool independent,
                                double epsilon_clip) {
  FeatureRecipe recipe;
  if (family == "beta") {
    recipe.family = CalibrationFamily::beta;
  } else if (family == "logistic") {
    recipe.family = CalibrationFamily::logistic;
  } else {
    throw ContractViolation("unknown family '" + family + "'");
  }
  recipe.variates.clear();
  std::stringstream ss(variates);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = variate_from_name(item);
    if (!v) throw ContractViolation("unknown variate '" + item + "'");
    recipe.variates.push_back(*v);
  }
  recipe.dependent = !independent;
  recipe.epsilon_clip = epsilon_clip;
  recipe.validate();
  return recipe;
}

struct EvalFlags {
  std::string gt_path, dets_path, out_path, reliability_path;
  std::string pipeline = "none";
  double t_nms = 0.5, sigma = 0.2;
  double hard_floor = 0.0, soft_floor = 1e-3;
  bool class_agnostic = false;
  std::string family = "beta";
  std::string variates = "confidence,j_min_suppressing";
  bool independent = false;
  double epsilon_clip = 1e-6;
  std::string objective = "nll";
  std::uint64_t seed = 1;
  int splits = 10;
  double fit_frac = 0.6;
  double t_iou = 0.5;
  int cap_pre = 400, cap_eval = 100, bins = 10;
  bool no_split = false, metrics_uncapped = false, cap_per_class = false;
};

void add_protocol_flags(CLI::App* cmd, EvalFlags& f) {
  cmd->add_option("--seed", f.seed, "root seed for splits");
  cmd->add_option("--splits", f.splits, "number of split repeats");
  cmd->add_option("--fit-frac", f.fit_frac, "fit partition fraction");
  cmd->add_option("--t-iou", f.t_iou, "IoU threshold for TP labels");
  cmd->add_option("--cap-pre", f.cap_pre, "per-image cap before processing");
  cmd->add_option("--cap-eval", f.cap_eval, "per-image cap for evaluation");
  cmd->add_option("--bins", f.bins, "calibration metric bin count");
  cmd->add_flag("--metrics-uncapped", f.metrics_uncapped,
                "calibration metrics on the uncapped set");
  cmd->add_flag("--cap-per-class", f.cap_per_class,
                "apply the pre cap per (image, class)");
}

void add_recipe_flags(CLI::App* cmd, EvalFlags& f) {
  cmd->add_option("--family", f.family, "calibration family: beta|logistic");
  cmd->add_option("--variates", f.variates,
                  "comma-separated conditioning variates");
  cmd->add_flag("--independent", f.independent,
                "drop the pairwise interaction terms");
  cmd->add_option("--epsilon-clip", f.epsilon_clip,
                  "clip applied before log transforms");
  cmd->add_option("--objective", f.objective, "fit objective: nll|brier");
}

RunConfig make_run_config(const EvalFlags& f) {
  RunConfig cfg;
  const auto pipeline = pipeline_from_name(f.pipeline);
  if (!pipeline) {
    throw ContractViolation("unknown pipeline '" + f.pipeline + "'");
  }
  cfg.pipeline = *pipeline;
  cfg.params.t_nms = f.t_nms;
  cfg.params.sigma = f.sigma;
  cfg.params.hard_floor = f.hard_floor;
  cfg.params.soft_floor = f.soft_floor;
  cfg.params.class_agnostic = f.class_agnostic;
  cfg.params.recipe =
      recipe_from_flags(f.family, f.variates, f.independent, f.epsilon_clip);
  if (f.objective == "nll") {
    cfg.params.objective = FitObjective::nll;
  } else if (f.objective == "brier") {
    cfg.params.objective = FitObjective::brier;
  } else {
    throw ContractViolation("unknown objective '" + f.objective + "'");
  }
  cfg.split.seed = f.seed;
  cfg.split.repeats = f.splits;
  cfg.split.fit_fraction = f.fit_frac;
  cfg.cap_pre = f.cap_pre;
  cfg.cap_eval = f.cap_eval;
  cfg.t_iou_fit = f.t_iou;
  cfg.t_iou_metrics = f.t_iou;
  cfg.bins.bin_count = f.bins;
  cfg.metrics_uncapped = f.metrics_uncapped;
  cfg.cap_per_class = f.cap_per_class;
  return cfg;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"detection post-processing toolkit: NMS baselines and "
               "IoU-aware confidence calibration"};
  app.require_subcommand(1);
  app.set_config("--config");

  // validate
  std::string v_gt, v_dets;
  auto* validate_cmd =
      app.add_subcommand("validate", "check annotation/result files");
  validate_cmd->add_option("--gt", v_gt, "COCO annotation JSON")->required();
  validate_cmd->add_option("--dets", v_dets, "COCO results JSON");

  // synth
  SynthConfig synth_cfg;
  std::string s_objects = "1:8", s_duplicates = "0:0", s_dup_iou = "0.6:0.9";
  std::string s_box_scale = "24:160", s_law = "calibrated";
  std::string s_out_gt = "synth_gt.json", s_out_dets = "synth_dets.json";
  double s_img_size = 640.0;
  auto* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic detection world");
  synth_cmd->add_option("--seed", synth_cfg.seed, "generator seed");
  synth_cmd->add_option("--images", synth_cfg.images, "image count");
  synth_cmd->add_option("--objects", s_objects, "objects per image, lo:hi");
  synth_cmd->add_option("--categories", synth_cfg.categories, "category count");
  synth_cmd->add_option("--duplicates", s_duplicates,
                        "duplicates per object, lo:hi");
  synth_cmd->add_option("--duplicate-iou", s_dup_iou,
                        "duplicate IoU with its primary, lo:hi");
  synth_cmd->add_option("--law", s_law,
                        "confidence law: calibrated | pow:<gamma> | skew:<k>");
  synth_cmd->add_option("--fp-rate", synth_cfg.fp_rate,
                        "spurious detections per image");
  synth_cmd->add_option("--box-scale", s_box_scale, "box extent in px, lo:hi");
  synth_cmd->add_option("--img-size", s_img_size, "square image size in px");
  synth_cmd->add_flag("--shuffle-duplicate-rank",
                      synth_cfg.shuffle_duplicate_rank,
                      "duplicates draw independent confidences");
  synth_cmd->add_option("--out-gt", s_out_gt, "annotation output path");
  synth_cmd->add_option("--out-dets", s_out_dets, "results output path");

  // fit
  EvalFlags fit_flags;
  std::string fit_out = "model.json";
  auto* fit_cmd =
      app.add_subcommand("fit", "fit a calibration model on a full dump");
  fit_cmd->add_option("--gt", fit_flags.gt_path)->required();
  fit_cmd->add_option("--dets", fit_flags.dets_path)->required();
  fit_cmd->add_option("--out", fit_out, "model output path");
  fit_cmd->add_option("--t-iou", fit_flags.t_iou);
  fit_cmd->add_option("--cap-pre", fit_flags.cap_pre);
  add_recipe_flags(fit_cmd, fit_flags);

  // apply
  std::string a_dets, a_model, a_out = "calibrated.json";
  auto* apply_cmd =
      app.add_subcommand("apply", "apply a calibration model to detections");
  apply_cmd->add_option("--dets", a_dets)->required();
  apply_cmd->add_option("--model", a_model)->required();
  apply_cmd->add_option("--out", a_out, "results output path");

  // nms
  std::string n_dets, n_out = "suppressed.json", n_kind = "hard";
  double n_t = 0.5, n_sigma = 0.2, n_floor = -1.0;
  bool n_agnostic = false;
  auto* nms_cmd = app.add_subcommand("nms", "run NMS over detections");
  nms_cmd->add_option("--dets", n_dets)->required();
  nms_cmd->add_option("--out", n_out);
  nms_cmd->add_option("--kind", n_kind, "hard | soft");
  nms_cmd->add_option("--t-nms", n_t, "hard suppression threshold");
  nms_cmd->add_option("--sigma", n_sigma, "soft decay parameter");
  nms_cmd->add_option("--score-floor", n_floor,
                      "drop at/below this confidence (default 0 hard, 1e-3 soft)");
  nms_cmd->add_flag("--class-agnostic", n_agnostic);

  // eval
  EvalFlags eval_flags;
  bool eval_quiet = false;
  auto* eval_cmd = app.add_subcommand(
      "eval", "cross-validated pipeline evaluation (or --no-split)");
  eval_cmd->add_option("--gt", eval_flags.gt_path)->required();
  eval_cmd->add_option("--dets", eval_flags.dets_path)->required();
  eval_cmd->add_option("--pipeline", eval_flags.pipeline,
                       "none|nms|soft_nms|beta_univariate|iou_aware|"
                       "nms_plus_beta|soft_plus_beta");
  eval_cmd->add_option("--t-nms", eval_flags.t_nms);
  eval_cmd->add_option("--sigma", eval_flags.sigma);
  eval_cmd->add_option("--score-floor-hard", eval_flags.hard_floor);
  eval_cmd->add_option("--score-floor-soft", eval_flags.soft_floor);
  eval_cmd->add_flag("--class-agnostic", eval_flags.class_agnostic);
  eval_cmd->add_flag("--no-split", eval_flags.no_split,
                     "single whole-set evaluation");
  eval_cmd->add_option("--out", eval_flags.out_path, "report JSON path");
  eval_cmd->add_option("--reliability", eval_flags.reliability_path,
                       "reliability table CSV (requires --no-split)");
  eval_cmd->add_flag("--quiet", eval_quiet, "suppress the rendered table");
  add_protocol_flags(eval_cmd, eval_flags);
  add_recipe_flags(eval_cmd, eval_flags);

  // sweep
  EvalFlags sweep_flags;
  std::string sw_method = "nms", sw_spacing, sw_out;
  double sw_start = -1.0, sw_stop = -1.0;
  int sw_steps = -1;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "NMS hyper-parameter grid search");
  sweep_cmd->add_option("--gt", sweep_flags.gt_path)->required();
  sweep_cmd->add_option("--dets", sweep_flags.dets_path)->required();
  sweep_cmd->add_option("--method", sw_method, "nms | soft_nms");
  sweep_cmd->add_option("--start", sw_start);
  sweep_cmd->add_option("--stop", sw_stop);
  sweep_cmd->add_option("--steps", sw_steps);
  sweep_cmd->add_option("--spacing", sw_spacing, "linear | log");
  sweep_cmd->add_option("--out", sw_out, "sweep table CSV path");
  sweep_cmd->add_option("--cap-pre", sweep_flags.cap_pre);
  sweep_cmd->add_option("--cap-eval", sweep_flags.cap_eval);

  // study-tiou
  EvalFlags study_flags;
  std::string st_tfit = "0.5,0.6,0.7,0.8", st_teval = "0.5,0.6,0.7,0.8";
  std::string st_out;
  auto* study_cmd = app.add_subcommand(
      "study-tiou", "fit/eval label-threshold sensitivity matrix");
  study_cmd->add_option("--gt", study_flags.gt_path)->required();
  study_cmd->add_option("--dets", study_flags.dets_path)->required();
  study_cmd->add_option("--t-fit", st_tfit, "comma-separated fit thresholds");
  study_cmd->add_option("--t-eval", st_teval,
                        "comma-separated metric thresholds");
  study_cmd->add_option("--out", st_out, "matrix CSV path");
  add_protocol_flags(study_cmd, study_flags);
  add_recipe_flags(study_cmd, study_flags);

  // ablate
  EvalFlags ablate_flags;
  std::string ab_out;
  auto* ablate_cmd = app.add_subcommand(
      "ablate", "conditioning-variable ablation over the recipe grid");
  ablate_cmd->add_option("--gt", ablate_flags.gt_path)->required();
  ablate_cmd->add_option("--dets", ablate_flags.dets_path)->required();
  ablate_cmd->add_option("--out", ab_out, "ablation table CSV path");
  add_protocol_flags(ablate_cmd, ablate_flags);

  // report
  std::string r_in, r_out;
  bool r_render = false;
  auto* report_cmd =
      app.add_subcommand("report", "re-load / re-render a report JSON");
  report_cmd->add_option("--in", r_in)->required();
  report_cmd->add_option("--out", r_out, "re-emit the report JSON");
  report_cmd->add_flag("--render", r_render, "print the rendered table");

  CLI11_PARSE(app, argc, argv);

  if (validate_cmd->parsed()) {
    const Dataset ds = load_dataset(v_gt);
    std::cout << "gt: " << ds.images.size() << " images, "
              << ds.ground_truth.size() << " objects, "
              << ds.categories.size() << " categories\n";
    if (!v_dets.empty()) {
      const DetectionSet dets = load_detections(v_dets, &ds);
      std::cout << "dets: " << dets.size() << " detections on "
                << dets.by_image.size() << " images\n";
    }
    std::cout << "ok\n";
    return 0;
  }

  if (synth_cmd->parsed()) {
    parse_range(s_objects, synth_cfg.objects_per_image.lo,
                synth_cfg.objects_per_image.hi);
    parse_range(s_duplicates, synth_cfg.duplicate_count.lo,
                synth_cfg.duplicate_count.hi);
    parse_range(s_dup_iou, synth_cfg.duplicate_iou.lo,
                synth_cfg.duplicate_iou.hi);
    parse_range(s_box_scale, synth_cfg.box_scale.lo, synth_cfg.box_scale.hi);
    synth_cfg.image_width = synth_cfg.image_height = s_img_size;
    if (s_law == "calibrated") {
      synth_cfg.law = ConfidenceLaw::calibrated;
    } else if (s_law.rfind("pow:", 0) == 0) {
      synth_cfg.law = ConfidenceLaw::overconfident_pow;
      synth_cfg.law_param = std::stod(s_law.substr(4));
    } else if (s_law.rfind("skew:", 0) == 0) {
      synth_cfg.law = ConfidenceLaw::logistic_skew;
      synth_cfg.law_param = std::stod(s_law.substr(5));
    } else {
      throw ContractViolation("unknown law '" + s_law + "'");
    }
    const SynthResult world = generate(synth_cfg);
    save_dataset(world.dataset, s_out_gt);
    save_detections(world.detections, s_out_dets);
    std::cout << "wrote " << s_out_gt << " ("
              << world.dataset.ground_truth.size() << " objects) and "
              << s_out_dets << " (" << world.detections.size()
              << " detections)\n";
    return 0;
  }

  if (fit_cmd->parsed()) {
    const Dataset gt = load_dataset(fit_flags.gt_path);
    const DetectionSet dets =
        apply_cap(load_detections(fit_flags.dets_path, &gt), fit_flags.cap_pre);
    const FeatureRecipe recipe =
        recipe_from_flags(fit_flags.family, fit_flags.variates,
                          fit_flags.independent, fit_flags.epsilon_clip);
    FitOptions opts;
    opts.t_iou_labels = fit_flags.t_iou;
    opts.objective = fit_flags.objective == "brier" ? FitObjective::brier
                                                    : FitObjective::nll;
    const auto samples = labeled_samples(dets, gt, recipe, fit_flags.t_iou);
    const CalibrationModel model = fit(samples, recipe, opts);
    save_model(model, fit_out);
    std::cout << "fitted " << recipe.describe() << " on " << samples.size()
              << " samples in " << model.fit_meta.iterations
              << " iterations (objective " << model.fit_meta.objective
              << (model.fit_meta.converged ? "" : ", NOT converged") << ")\n"
              << "wrote " << fit_out << "\n";
    return 0;
  }

  if (apply_cmd->parsed()) {
    const CalibrationModel model = load_model(a_model);
    const DetectionSet dets = load_detections(a_dets);
    save_detections(iou_aware_calibrate(dets, model), a_out);
    std::cout << "wrote " << a_out << "\n";
    return 0;
  }

  if (nms_cmd->parsed()) {
    SuppressionConfig cfg;
    if (n_kind == "hard") {
      cfg = SuppressionConfig::hard_nms(n_t, n_floor < 0.0 ? 0.0 : n_floor,
                                        n_agnostic);
    } else if (n_kind == "soft") {
      cfg = SuppressionConfig::soft_nms(n_sigma, n_floor < 0.0 ? 1e-3 : n_floor,
                                        n_agnostic);
    } else {
      throw ContractViolation("unknown NMS kind '" + n_kind + "'");
    }
    const DetectionSet dets = load_detections(n_dets);
    save_detections(suppress_all(dets, cfg), n_out);
    std::cout << "wrote " << n_out << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    const Dataset gt = load_dataset(eval_flags.gt_path);
    const DetectionSet dets = load_detections(eval_flags.dets_path, &gt);
    const RunConfig cfg = make_run_config(eval_flags);
    if (!eval_flags.reliability_path.empty() && !eval_flags.no_split) {
      throw ContractViolation("--reliability requires --no-split");
    }
    const EvalReport report = eval_flags.no_split
                                  ? run_whole(gt, dets, cfg)
                                  : run_pipeline(gt, dets, cfg);
    if (!eval_quiet) std::cout << report.render();
    if (!eval_flags.out_path.empty()) {
      write_text_file(eval_flags.out_path, report.to_json().dump(2) + "\n");
    }
    return 0;
  }

  if (sweep_cmd->parsed()) {
    const Dataset gt = load_dataset(sweep_flags.gt_path);
    const DetectionSet dets = load_detections(sweep_flags.dets_path, &gt);
    const Pipeline method =
        sw_method == "soft_nms" ? Pipeline::soft_nms : Pipeline::nms;
    SweepGrid grid = method == Pipeline::nms ? SweepGrid::hard_nms_default()
                                             : SweepGrid::soft_nms_default();
    if (sw_start >= 0.0) grid.start = sw_start;
    if (sw_stop >= 0.0) grid.stop = sw_stop;
    if (sw_steps > 0) grid.steps = sw_steps;
    if (!sw_spacing.empty()) grid.log_spacing = sw_spacing == "log";
    const RunConfig base = make_run_config(sweep_flags);
    const SweepResult result = sweep(gt, dets, method, grid, base);
    std::cout << result.csv();
    std::cout << "best: " << grid.parameter << "="
              << result.rows[result.best].value
              << " map=" << result.rows[result.best].map
              << " map50=" << result.rows[result.best].map50 << "\n";
    if (!sw_out.empty()) write_text_file(sw_out, result.csv());
    return 0;
  }

  if (study_cmd->parsed()) {
    const Dataset gt = load_dataset(study_flags.gt_path);
    const DetectionSet dets = load_detections(study_flags.dets_path, &gt);
    study_flags.pipeline = "iou_aware";
    const RunConfig base = make_run_config(study_flags);
    const auto cells = tiou_study(gt, dets, parse_double_list(st_tfit),
                                  parse_double_list(st_teval), base);
    std::cout << tiou_csv(cells);
    if (!st_out.empty()) write_text_file(st_out, tiou_csv(cells));
    return 0;
  }

  if (ablate_cmd->parsed()) {
    const Dataset gt = load_dataset(ablate_flags.gt_path);
    const DetectionSet dets = load_detections(ablate_flags.dets_path, &gt);
    ablate_flags.pipeline = "iou_aware";
    const RunConfig base = make_run_config(ablate_flags);
    const auto rows = ablation_suite(gt, dets, base);
    std::cout << ablation_csv(rows);
    if (!ab_out.empty()) write_text_file(ab_out, ablation_csv(rows));
    return 0;
  }

  if (report_cmd->parsed()) {
    const EvalReport report = EvalReport::from_json(read_json_file(r_in));
    if (!r_out.empty()) {
      write_text_file(r_out, report.to_json().dump(2) + "\n");
    }
    if (r_render || r_out.empty()) std::cout << report.render();
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ContractViolation& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const GenerationError& e) {
    std::cerr << "generation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
