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
#ifndef BOXCAL_CALIBRATION_HPP_
#define BOXCAL_CALIBRATION_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "boxcal/geometry.hpp"
#include "boxcal/types.hpp"

namespace boxcal {

enum class CalibrationFamily { logistic, beta };

// Conditioning variables a calibration map may use. `confidence` is the raw
// detector score; the j_* statistics come from geometry::jaccard_summaries.
enum class Variate {
  confidence,
  j_min_suppressing,
  j_prod_suppressing,
  j_min_suppressed,
  j_prod_suppressed,
};

std::string_view variate_name(Variate v);
std::optional<Variate> variate_from_name(std::string_view name);

// Which map to fit: family, conditioning variables (confidence always
// included), whether pairwise interaction terms are added (conditionally
// dependent form), and the clip applied before log transforms.
//
// Feature layout, in order:
//   beta:     per variate v: ln(v), -ln(1-v);
//             if dependent, per pair (k<l): the four cross products of
//             the two variates' features.
//   logistic: per variate v: logit(v);
//             if dependent, per pair (k<l): logit(v_k) * logit(v_l).
// theta holds one weight per feature followed by the bias, so the
// univariate beta model is exactly (a, b, c) with
//   score = sigmoid(a ln s - b ln(1-s) + c),
// the identity map at (1, 1, 0).
struct FeatureRecipe {
  CalibrationFamily family = CalibrationFamily::beta;
  std::vector<Variate> variates{Variate::confidence,
                                Variate::j_min_suppressing};
  bool dependent = true;
  double epsilon_clip = 1e-6;

  std::size_t feature_count() const;
  std::size_t parameter_count() const { return feature_count() + 1; }
  void validate() const;
  std::string describe() const;  // e.g. "beta-dep(confidence,j_min_suppressing)"
};

// Raw variate values for one detection, all in [0, 1].
struct VariateValues {
  double confidence = 0.0;
  double j_min_suppressing = 1.0;
  double j_prod_suppressing = 1.0;
  double j_min_suppressed = 1.0;
  double j_prod_suppressed = 1.0;

  static VariateValues from(double conf, const JaccardSummary& s);
  double get(Variate v) const;
};

// Clips every selected variate to [eps, 1-eps] and applies the family
// transform per the layout documented on FeatureRecipe.
std::vector<double> featurize(const VariateValues& values,
                              const FeatureRecipe& recipe);

struct FitMeta {
  int iterations = 0;
  double objective = 0.0;
  std::size_t sample_count = 0;
  double t_iou_labels = 0.5;
  bool converged = true;
};

struct CalibrationModel {
  FeatureRecipe recipe;
  std::vector<double> theta;  // feature weights, bias last
  FitMeta fit_meta;

  // Identity-on-confidence parameters: per-variate identity weights for
  // confidence, zero weights elsewhere.
  static CalibrationModel identity(FeatureRecipe recipe);
  void validate() const;
};

double calibrate_score(const CalibrationModel& model,
                       const VariateValues& values);

// One supervision sample: raw variate values (recipe order, already clipped
// to (0, 1)) plus the TP label.
struct LabeledSample {
  std::vector<double> values;
  bool tp = false;
};

enum class FitObjective { nll, brier };

struct FitOptions {
  FitObjective objective = FitObjective::nll;
  int max_iterations = 500;
  double gradient_tol = 1e-7;
  double t_iou_labels = 0.5;  // recorded into fit_meta
};

// Deterministic damped-Newton fit from the fixed identity initialization.
// Requires >= 100 samples containing both label values; throws FitError
// otherwise. Non-convergence is reported via fit_meta.converged.
CalibrationModel fit(const std::vector<LabeledSample>& samples,
                     const FeatureRecipe& recipe, const FitOptions& opts = {});

// Mean objective value at theta; fills `grad` with the analytic gradient
// when non-null. Exposed so the gradient can be checked independently.
double objective_value(const std::vector<LabeledSample>& samples,
                       const FeatureRecipe& recipe,
                       std::span<const double> theta, FitObjective objective,
                       std::vector<double>* grad = nullptr);

// Same fit from an explicit starting point (convexity checks).
CalibrationModel fit_from(const std::vector<LabeledSample>& samples,
                          const FeatureRecipe& recipe,
                          std::vector<double> theta0, const FitOptions& opts);

// Replaces every confidence with the calibrated score conditioned on that
// image's Jaccard summaries. Boxes, categories and ids are untouched and no
// detection is removed.
DetectionSet iou_aware_calibrate(const DetectionSet& ds,
                                 const CalibrationModel& model);

// Versioned JSON persistence. Loading an unknown format_version throws.
std::string model_to_json(const CalibrationModel& model);
CalibrationModel model_from_json(const std::string& text);
void save_model(const CalibrationModel& model, const std::string& path);
CalibrationModel load_model(const std::string& path);

}  // namespace boxcal

#endif  // BOXCAL_CALIBRATION_HPP_
