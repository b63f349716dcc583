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
#include "boxcal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Dense>

#include "json.hpp"

namespace boxcal {

namespace {

constexpr int kFormatVersion = 1;

const char* family_name(CalibrationFamily f) {
  return f == CalibrationFamily::beta ? "beta" : "logistic";
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

std::string_view variate_name(Variate v) {
  switch (v) {
    case Variate::confidence: return "confidence";
    case Variate::j_min_suppressing: return "j_min_suppressing";
    case Variate::j_prod_suppressing: return "j_prod_suppressing";
    case Variate::j_min_suppressed: return "j_min_suppressed";
    case Variate::j_prod_suppressed: return "j_prod_suppressed";
  }
  return "?";
}

std::optional<Variate> variate_from_name(std::string_view name) {
  for (Variate v : {Variate::confidence, Variate::j_min_suppressing,
                    Variate::j_prod_suppressing, Variate::j_min_suppressed,
                    Variate::j_prod_suppressed}) {
    if (name == variate_name(v)) return v;
  }
  return std::nullopt;
}

std::size_t FeatureRecipe::feature_count() const {
  const std::size_t v = variates.size();
  const std::size_t pairs = v * (v - 1) / 2;
  if (family == CalibrationFamily::beta) {
    return 2 * v + (dependent ? 4 * pairs : 0);
  }
  return v + (dependent ? pairs : 0);
}

void FeatureRecipe::validate() const {
  if (variates.empty()) {
    throw ContractViolation("recipe: variates must be non-empty");
  }
  if (std::find(variates.begin(), variates.end(), Variate::confidence) ==
      variates.end()) {
    throw ContractViolation("recipe: confidence must be included");
  }
  for (std::size_t i = 0; i < variates.size(); ++i) {
    for (std::size_t k = i + 1; k < variates.size(); ++k) {
      if (variates[i] == variates[k]) {
        throw ContractViolation("recipe: duplicate variate");
      }
    }
  }
  if (!(epsilon_clip > 0.0 && epsilon_clip <= 0.01)) {
    throw ContractViolation("recipe: epsilon_clip must be in (0, 0.01]");
  }
}

std::string FeatureRecipe::describe() const {
  std::string out = family_name(family);
  out += dependent ? "-dep(" : "-ind(";
  for (std::size_t i = 0; i < variates.size(); ++i) {
    if (i) out += ",";
    out += variate_name(variates[i]);
  }
  out += ")";
  return out;
}

VariateValues VariateValues::from(double conf, const JaccardSummary& s) {
  VariateValues v;
  v.confidence = conf;
  v.j_min_suppressing = s.j_min_suppressing;
  v.j_prod_suppressing = s.j_prod_suppressing;
  v.j_min_suppressed = s.j_min_suppressed;
  v.j_prod_suppressed = s.j_prod_suppressed;
  return v;
}

double VariateValues::get(Variate v) const {
  switch (v) {
    case Variate::confidence: return confidence;
    case Variate::j_min_suppressing: return j_min_suppressing;
    case Variate::j_prod_suppressing: return j_prod_suppressing;
    case Variate::j_min_suppressed: return j_min_suppressed;
    case Variate::j_prod_suppressed: return j_prod_suppressed;
  }
  return 0.0;
}

namespace {

// Core transform over raw values aligned with recipe.variates.
void features_from_values(std::span<const double> vals,
                          const FeatureRecipe& recipe,
                          std::vector<double>& out) {
  const std::size_t v = vals.size();
  out.clear();
  out.reserve(recipe.feature_count());
  const double eps = recipe.epsilon_clip;
  for (double raw : vals) {
    if (!(raw >= 0.0 && raw <= 1.0)) {
      throw ContractViolation("featurize: variate value outside [0, 1]");
    }
    const double x = std::clamp(raw, eps, 1.0 - eps);
    if (recipe.family == CalibrationFamily::beta) {
      out.push_back(std::log(x));
      out.push_back(-std::log1p(-x));
    } else {
      out.push_back(std::log(x) - std::log1p(-x));  // logit
    }
  }
  if (!recipe.dependent) return;
  const std::size_t stride = recipe.family == CalibrationFamily::beta ? 2 : 1;
  for (std::size_t k = 0; k < v; ++k) {
    for (std::size_t l = k + 1; l < v; ++l) {
      for (std::size_t a = 0; a < stride; ++a) {
        for (std::size_t b = 0; b < stride; ++b) {
          out.push_back(out[stride * k + a] * out[stride * l + b]);
        }
      }
    }
  }
}

}  // namespace

std::vector<double> featurize(const VariateValues& values,
                              const FeatureRecipe& recipe) {
  recipe.validate();
  std::vector<double> raw(recipe.variates.size());
  for (std::size_t i = 0; i < recipe.variates.size(); ++i) {
    raw[i] = values.get(recipe.variates[i]);
  }
  std::vector<double> out;
  features_from_values(raw, recipe, out);
  return out;
}

CalibrationModel CalibrationModel::identity(FeatureRecipe recipe) {
  recipe.validate();
  CalibrationModel m;
  m.recipe = std::move(recipe);
  m.theta.assign(m.recipe.parameter_count(), 0.0);
  const std::size_t stride =
      m.recipe.family == CalibrationFamily::beta ? 2 : 1;
  for (std::size_t i = 0; i < m.recipe.variates.size(); ++i) {
    if (m.recipe.variates[i] != Variate::confidence) continue;
    m.theta[stride * i] = 1.0;
    if (stride == 2) m.theta[stride * i + 1] = 1.0;
  }
  return m;
}

void CalibrationModel::validate() const {
  recipe.validate();
  if (theta.size() != recipe.parameter_count()) {
    throw ContractViolation("model: theta length does not match recipe");
  }
  for (double t : theta) {
    if (!std::isfinite(t)) {
      throw ContractViolation("model: non-finite parameter");
    }
  }
}

double calibrate_score(const CalibrationModel& model,
                       const VariateValues& values) {
  model.validate();
  const auto features = featurize(values, model.recipe);
  double z = model.theta.back();
  for (std::size_t i = 0; i < features.size(); ++i) {
    z += model.theta[i] * features[i];
  }
  return sigmoid(z);
}

namespace {

struct Design {
  Eigen::MatrixXd x;  // N x (features + 1), bias column last
  Eigen::VectorXd y;
};

Design build_design(const std::vector<LabeledSample>& samples,
                    const FeatureRecipe& recipe) {
  const std::size_t n = samples.size();
  const std::size_t k = recipe.parameter_count();
  Design d;
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  d.y.resize(static_cast<Eigen::Index>(n));
  std::vector<double> feat;
  for (std::size_t i = 0; i < n; ++i) {
    if (samples[i].values.size() != recipe.variates.size()) {
      throw ContractViolation("fit: sample value count does not match recipe");
    }
    features_from_values(samples[i].values, recipe, feat);
    for (std::size_t j = 0; j < feat.size(); ++j) {
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = feat[j];
    }
    d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1)) = 1.0;
    d.y(static_cast<Eigen::Index>(i)) = samples[i].tp ? 1.0 : 0.0;
  }
  return d;
}

// Mean objective, analytic gradient and a PSD curvature matrix (exact
// Hessian for NLL, Gauss-Newton for Brier).
double eval_objective(const Design& d, const Eigen::VectorXd& theta,
                      FitObjective objective, Eigen::VectorXd* grad,
                      Eigen::MatrixXd* hess) {
  const auto n = d.x.rows();
  const Eigen::VectorXd z = d.x * theta;
  Eigen::VectorXd p(n), w(n);
  double value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    p(i) = sigmoid(z(i));
    w(i) = p(i) * (1.0 - p(i));
    if (objective == FitObjective::nll) {
      value += softplus(z(i)) - d.y(i) * z(i);
    } else {
      const double r = p(i) - d.y(i);
      value += r * r;
    }
  }
  value /= static_cast<double>(n);
  if (grad) {
    Eigen::VectorXd resid(n);
    if (objective == FitObjective::nll) {
      resid = p - d.y;
    } else {
      resid = 2.0 * (p - d.y).cwiseProduct(w);
    }
    *grad = d.x.transpose() * resid / static_cast<double>(n);
  }
  if (hess) {
    Eigen::VectorXd hw =
        objective == FitObjective::nll ? w : Eigen::VectorXd(2.0 * w.cwiseProduct(w));
    *hess = d.x.transpose() * hw.asDiagonal() * d.x / static_cast<double>(n);
  }
  return value;
}

Eigen::VectorXd initial_theta(const FeatureRecipe& recipe) {
  Eigen::VectorXd theta =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(recipe.parameter_count()));
  const std::size_t stride =
      recipe.family == CalibrationFamily::beta ? 2 : 1;
  for (std::size_t i = 0; i < recipe.variates.size(); ++i) {
    theta(static_cast<Eigen::Index>(stride * i)) = 1.0;
    if (stride == 2) theta(static_cast<Eigen::Index>(stride * i + 1)) = 1.0;
  }
  return theta;
}

CalibrationModel fit_impl(const std::vector<LabeledSample>& samples,
                          const FeatureRecipe& recipe, Eigen::VectorXd theta,
                          const FitOptions& opts) {
  recipe.validate();
  if (samples.size() < 100) {
    throw FitError("fit: need at least 100 labeled samples");
  }
  bool has_pos = false, has_neg = false;
  for (const auto& s : samples) (s.tp ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    throw FitError("fit: samples must contain both label values");
  }

  const Design design = build_design(samples, recipe);
  const auto k = theta.size();

  Eigen::VectorXd grad(k);
  Eigen::MatrixXd hess(k, k);
  double value = eval_objective(design, theta, opts.objective, &grad, &hess);

  double damping = 1e-12;
  int iterations = 0;
  bool converged = false;
  while (iterations < opts.max_iterations) {
    if (grad.lpNorm<Eigen::Infinity>() < opts.gradient_tol) {
      converged = true;
      break;
    }
    ++iterations;

    // Levenberg-damped Newton step with Armijo backtracking.
    bool accepted = false;
    while (!accepted && damping < 1e12) {
      Eigen::MatrixXd damped = hess;
      damped.diagonal().array() += damping;
      Eigen::LLT<Eigen::MatrixXd> llt(damped);
      if (llt.info() != Eigen::Success) {
        damping *= 100.0;
        continue;
      }
      const Eigen::VectorXd dir = llt.solve(-grad);
      const double slope = grad.dot(dir);
      if (!(slope < 0.0)) {
        damping *= 100.0;
        continue;
      }
      double step = 1.0;
      for (int halvings = 0; halvings < 60; ++halvings) {
        const Eigen::VectorXd cand = theta + step * dir;
        const double cand_value =
            eval_objective(design, cand, opts.objective, nullptr, nullptr);
        if (cand_value <= value + 1e-4 * step * slope) {
          theta = cand;
          value = cand_value;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) damping *= 100.0;
    }
    if (!accepted) break;  // no progress possible at any damping
    damping = std::max(damping * 0.1, 1e-12);
    value = eval_objective(design, theta, opts.objective, &grad, &hess);
  }
  if (grad.lpNorm<Eigen::Infinity>() < opts.gradient_tol) converged = true;

  CalibrationModel model;
  model.recipe = recipe;
  model.theta.assign(theta.data(), theta.data() + theta.size());
  model.fit_meta.iterations = iterations;
  model.fit_meta.objective = value;
  model.fit_meta.sample_count = samples.size();
  model.fit_meta.t_iou_labels = opts.t_iou_labels;
  model.fit_meta.converged = converged;
  return model;
}

}  // namespace

CalibrationModel fit(const std::vector<LabeledSample>& samples,
                     const FeatureRecipe& recipe, const FitOptions& opts) {
  return fit_impl(samples, recipe, initial_theta(recipe), opts);
}

CalibrationModel fit_from(const std::vector<LabeledSample>& samples,
                          const FeatureRecipe& recipe,
                          std::vector<double> theta0, const FitOptions& opts) {
  if (theta0.size() != recipe.parameter_count()) {
    throw ContractViolation("fit_from: theta0 length does not match recipe");
  }
  Eigen::VectorXd theta =
      Eigen::Map<const Eigen::VectorXd>(theta0.data(),
                                        static_cast<Eigen::Index>(theta0.size()));
  return fit_impl(samples, recipe, theta, opts);
}

double objective_value(const std::vector<LabeledSample>& samples,
                       const FeatureRecipe& recipe,
                       std::span<const double> theta, FitObjective objective,
                       std::vector<double>* grad) {
  recipe.validate();
  if (theta.size() != recipe.parameter_count()) {
    throw ContractViolation("objective_value: theta length mismatch");
  }
  const Design design = build_design(samples, recipe);
  const Eigen::VectorXd th = Eigen::Map<const Eigen::VectorXd>(
      theta.data(), static_cast<Eigen::Index>(theta.size()));
  Eigen::VectorXd g;
  const double value =
      eval_objective(design, th, objective, grad ? &g : nullptr, nullptr);
  if (grad) grad->assign(g.data(), g.data() + g.size());
  return value;
}

DetectionSet iou_aware_calibrate(const DetectionSet& ds,
                                 const CalibrationModel& model) {
  model.validate();
  DetectionSet out;
  out.per_image_cap = ds.per_image_cap;
  for (const auto& [image, dets] : ds.by_image) {
    const auto summaries = jaccard_summaries(dets, /*class_agnostic=*/false);
    std::vector<Detection> rescored = dets;
    for (std::size_t i = 0; i < rescored.size(); ++i) {
      rescored[i].confidence = calibrate_score(
          model, VariateValues::from(dets[i].confidence, summaries[i]));
    }
    std::sort(rescored.begin(), rescored.end(), confidence_order);
    out.by_image[image] = std::move(rescored);
  }
  return out;
}

std::string model_to_json(const CalibrationModel& model) {
  model.validate();
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["recipe"]["family"] = family_name(model.recipe.family);
  auto& vars = j["recipe"]["variates"] = nlohmann::ordered_json::array();
  for (Variate v : model.recipe.variates) vars.push_back(variate_name(v));
  j["recipe"]["dependent"] = model.recipe.dependent;
  j["recipe"]["epsilon_clip"] = model.recipe.epsilon_clip;
  j["theta"] = model.theta;
  j["fit_meta"]["iterations"] = model.fit_meta.iterations;
  j["fit_meta"]["objective"] = model.fit_meta.objective;
  j["fit_meta"]["sample_count"] = model.fit_meta.sample_count;
  j["fit_meta"]["t_iou_labels"] = model.fit_meta.t_iou_labels;
  j["fit_meta"]["converged"] = model.fit_meta.converged;
  return j.dump(2) + "\n";
}

CalibrationModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FitError(std::string("model: invalid JSON: ") + e.what());
  }
  if (!j.contains("format_version") ||
      j["format_version"].get<int>() != kFormatVersion) {
    throw FitError("model: unknown format_version");
  }
  CalibrationModel m;
  const auto& jr = j.at("recipe");
  const std::string fam = jr.at("family").get<std::string>();
  if (fam == "beta") {
    m.recipe.family = CalibrationFamily::beta;
  } else if (fam == "logistic") {
    m.recipe.family = CalibrationFamily::logistic;
  } else {
    throw FitError("model: unknown family '" + fam + "'");
  }
  m.recipe.variates.clear();
  for (const auto& name : jr.at("variates")) {
    const auto v = variate_from_name(name.get<std::string>());
    if (!v) throw FitError("model: unknown variate '" + name.get<std::string>() + "'");
    m.recipe.variates.push_back(*v);
  }
  m.recipe.dependent = jr.at("dependent").get<bool>();
  m.recipe.epsilon_clip = jr.at("epsilon_clip").get<double>();
  m.theta = j.at("theta").get<std::vector<double>>();
  const auto& jm = j.at("fit_meta");
  m.fit_meta.iterations = jm.at("iterations").get<int>();
  m.fit_meta.objective = jm.at("objective").get<double>();
  m.fit_meta.sample_count = jm.at("sample_count").get<std::size_t>();
  m.fit_meta.t_iou_labels = jm.at("t_iou_labels").get<double>();
  m.fit_meta.converged = jm.at("converged").get<bool>();
  m.validate();
  return m;
}

void save_model(const CalibrationModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << model_to_json(model);
  if (!out) throw IoError("failed writing '" + path + "'");
}

CalibrationModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return model_from_json(text);
}

}  // namespace boxcal
