#pragma once

// Simulation experiments: sample training data, fit a predictor, explain test
// points with every estimator and score them against the true Shapley values.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "depshap/coalitions.hpp"
#include "depshap/distributions.hpp"
#include "depshap/models.hpp"
#include "depshap/oracles.hpp"
#include "depshap/samplers.hpp"

namespace depshap {

/// MAE = mean over instances and features of |phi_true - phi_est|; phi0 is excluded.
double mae(const std::vector<Explanation>& estimated, const std::vector<TrueShapleyResult>& truth);

/// 1 - mae_q / mae_reference; throws DomainError("degenerate reference") when the reference is 0.
double skill_score(double mae_q, double mae_reference);

enum class FeatureFamily { kGaussian, kGH, kGH10, kMixture };
enum class TruthChoice { kAuto, kClosedForm, kQuadrature, kMonteCarlo };

std::string to_string(FeatureFamily family);
std::string to_string(SamplingModel model);
std::string to_string(TruthChoice truth);

struct ExperimentConfig {
  std::string experiment = "experiment";
  int dimension = 3;
  FeatureFamily family = FeatureFamily::kGaussian;
  // Swept distribution parameter: rho (gaussian), kappa (gh), gamma (mixture).
  // Ignored by gh10.
  std::vector<double> parameters{0.0};
  SamplingModel sampling = SamplingModel::kLinear;
  // The original (independence) method is always added as the skill reference.
  std::vector<SamplerSpec> estimators;
  int n_train = 2000;
  int n_test = 100;
  int batches = 10;
  double noise_sd = 0.1;
  int k = 1000;
  std::uint64_t seed = 1;
  TruthChoice truth = TruthChoice::kAuto;
  int n_mc = 100000;
  QuadratureOptions quadrature;
  PsiVariant psi_variant = PsiVariant::kInverse;
  BoostingOptions boosting;
  int threads = 1;

  void validate() const;
  // Estimators with "original" first and duplicates (by label) removed.
  std::vector<SamplerSpec> estimator_list() const;
};

std::unique_ptr<FeatureDistribution> make_distribution(const ExperimentConfig& config, double parameter);

struct EstimatorResult {
  std::string label;
  double mae = 0.0;
  double skill = 0.0;
  std::vector<double> batch_mae;
  std::vector<double> batch_skill;
  double seconds = 0.0;
  int efficiency_violations = 0;
};

struct ParameterResult {
  double parameter = 0.0;
  std::vector<EstimatorResult> estimators;
  // Test points by truth method actually used.
  std::map<std::string, int> truth_methods;
  std::vector<int> completed_batches;
  // Batch index -> error message for aborted batches.
  std::map<int, std::string> failed_batches;
  int explanations = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ParameterResult> results;
  double seconds = 0.0;

  int efficiency_violations() const;
};

struct BatchData {
  TrainingMatrix train;
  Eigen::VectorXd y;
  Eigen::MatrixXd test;
  std::unique_ptr<Model> model;
};

/// Training set, response, fitted predictor and test points of one batch.
BatchData prepare_batch(const ExperimentConfig& config, const FeatureDistribution& dist, double parameter, int batch);

/// Truth for every test row, chosen per config.truth; parallel over rows.
std::vector<TrueShapleyResult> compute_truth(const ExperimentConfig& config, const FeatureDistribution& dist,
                                             const Model& model, const Eigen::MatrixXd& test, std::uint64_t seed);

ExperimentReport run_experiment(const ExperimentConfig& config);

// Long-format CSV: experiment,parameter,estimator,batch,mae,skill.
std::string report_csv(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report);
// Plain-text table including wall-clock timings.
std::string report_summary(const ExperimentReport& report);

}  // namespace depshap
