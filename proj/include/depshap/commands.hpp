#pragma once

// The explain, simulate and cluster commands behind the depshap executable.
// Each writes its files into an output directory and throws on failure;
// exit_code maps the exception to the documented process status.

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "depshap/coalitions.hpp"
#include "depshap/experiment.hpp"
#include "depshap/grouping.hpp"
#include "depshap/models.hpp"
#include "depshap/samplers.hpp"

namespace depshap {

enum class ModelSource { kBuiltinOls, kBuiltinStumps, kExternal };

ModelSource parse_model_source(const std::string& text);

struct ExplainRequest {
  std::string train_path;
  std::string test_path;
  // Response column of the training CSV; required by the built-in models and
  // dropped from both files when present.
  std::string target;
  ModelSource model = ModelSource::kBuiltinOls;
  std::string model_command;
  int model_timeout_ms = 60000;
  BoostingOptions boosting;
  SamplerSpec estimator;
  int k = 1000;
  std::uint64_t seed = 1;
  std::string output_dir;
  std::optional<double> cluster_alpha;
  bool cluster_on_test = false;
  // Coalition draws used when there are too many features to enumerate.
  int coalition_samples = 2048;
  int threads = 1;
};

struct ExplainResult {
  std::vector<std::string> feature_names;
  std::vector<Explanation> explanations;
  std::optional<ClusterAssignment> clusters;
  std::vector<GroupExplanation> groups;
  bool sampled_design = false;
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

/// Writes explanations.csv and explanations.json (plus clusters.json when
/// clustering) into output_dir. Every record is checked for efficiency at
/// 1e-6 relative tolerance before anything is written.
ExplainResult run_explain(const ExplainRequest& request);

// CSV columns: instance_id, prediction, phi0, phi_<name>..., group_<label>...
std::string explanations_csv(const ExplainResult& result);
std::string explanations_json(const ExplainResult& result, const ExplainRequest& request);

/// Reads a config file, runs the experiment and writes report.csv,
/// report.json and summary.txt.
ExperimentReport run_simulate(const std::string& config_path, const std::string& output_dir,
                              std::optional<int> threads = std::nullopt);

/// Writes clusters.json, penalty.csv and kendall_tau.csv (the |tau| matrix).
ClusterAssignment run_cluster(const std::string& train_path, double alpha, const std::string& output_dir,
                              int threads = 1);

// 2 for schema and configuration errors, 3 for model protocol errors, 1 otherwise.
int exit_code(const std::exception& error);

}  // namespace depshap
