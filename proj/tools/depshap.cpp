// depshap: dependence-aware Kernel SHAP explanations from the command line.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "depshap/commands.hpp"
#include "depshap/errors.hpp"
#include "depshap/parallel.hpp"

namespace {

using depshap::ExplainRequest;

void add_explain(CLI::App& app, ExplainRequest& request, std::string& model, std::string& estimator,
                 std::optional<double>& alpha) {
  auto* cmd = app.add_subcommand("explain", "Explain every row of a test CSV");
  cmd->add_option("--train", request.train_path, "Training CSV (header row required)")->required();
  cmd->add_option("--test", request.test_path, "CSV of instances to explain")->required();
  cmd->add_option("--target", request.target, "Response column in the training CSV");
  cmd->add_option("--model", model, "builtin_ols, builtin_stumps or external")->capture_default_str();
  cmd->add_option("--model-cmd", request.model_command, "Shell command of the external model");
  cmd->add_option("--model-timeout-ms", request.model_timeout_ms, "Per-batch response timeout")
      ->capture_default_str();
  cmd->add_option("--estimator", estimator,
                  "original, Gaussian, copula, empirical-<sigma>, empirical-AICc-exact, "
                  "empirical-AICc-approx, or <empirical>+Gaussian / +copula")
      ->capture_default_str();
  cmd->add_option("--k", request.k, "Samples per coalition")->capture_default_str();
  cmd->add_option("--seed", request.seed, "Master seed")->capture_default_str();
  cmd->add_option("--out", request.output_dir, "Output directory")->required();
  cmd->add_option("--cluster-alpha", alpha, "Group features with this KGS alpha");
  cmd->add_flag("--cluster-on-test", request.cluster_on_test, "Cluster on the test rows instead");
  cmd->add_option("--coalition-samples", request.coalition_samples,
                  "Sampled coalitions when features exceed the enumeration limit")
      ->capture_default_str();
  cmd->add_option("--eta", request.estimator.eta, "Empirical weight-mass threshold")->capture_default_str();
  cmd->add_option("--k-cap", request.estimator.k_cap, "Cap on retained empirical samples")->capture_default_str();
  cmd->add_option("--d-star", request.estimator.d_star, "Largest coalition size routed to empirical")
      ->capture_default_str();
  cmd->add_option("--n-aicc", request.estimator.aicc.n_aicc, "AICc subsample size")->capture_default_str();
  cmd->add_option("--sigma-grid", request.estimator.aicc.sigma_grid, "AICc bandwidth grid")->delimiter(',');
  cmd->add_option("--tree-rounds", request.boosting.rounds, "Boosting rounds")->capture_default_str();
  cmd->add_option("--tree-depth", request.boosting.max_depth, "Tree depth")->capture_default_str();
  cmd->add_option("--learning-rate", request.boosting.learning_rate, "Boosting learning rate")
      ->capture_default_str();
  cmd->add_option("--threads", request.threads, "Worker threads (default: DEPSHAP_THREADS)");
}

int run(int argc, char** argv) {
  CLI::App app{"Dependence-aware Kernel SHAP explanations"};
  app.require_subcommand(1);

  ExplainRequest request;
  request.threads = depshap::default_thread_count();
  std::string model = "builtin_ols";
  std::string estimator = "original";
  std::optional<double> alpha;
  add_explain(app, request, model, estimator, alpha);

  std::string config_path;
  std::string simulate_out;
  std::optional<int> simulate_threads;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation experiment from a config file");
  simulate->add_option("config", config_path, "Experiment config (key = value lines)")->required();
  simulate->add_option("--out", simulate_out, "Output directory")->required();
  simulate->add_option("--threads", simulate_threads, "Worker threads (overrides the config)");

  std::string cluster_train;
  std::string cluster_out;
  double cluster_alpha = 1.0;
  int cluster_threads = depshap::default_thread_count();
  auto* cluster = app.add_subcommand("cluster", "Group features by Kendall's tau");
  cluster->add_option("--train", cluster_train, "CSV with numeric columns")->required();
  cluster->add_option("--alpha", cluster_alpha, "KGS cluster-count scale")->capture_default_str();
  cluster->add_option("--out", cluster_out, "Output directory")->required();
  cluster->add_option("--threads", cluster_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("explain")) {
      // Flags such as --eta refine the estimator chosen by label.
      const depshap::SamplerSpec tuned = request.estimator;
      request.estimator = depshap::parse_sampler_label(estimator);
      request.estimator.eta = tuned.eta;
      request.estimator.k_cap = tuned.k_cap;
      request.estimator.d_star = tuned.d_star;
      request.estimator.aicc = tuned.aicc;
      request.model = depshap::parse_model_source(model);
      request.cluster_alpha = alpha;
      const depshap::ExplainResult result = depshap::run_explain(request);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      std::cerr << "explained " << result.explanations.size() << " instances in " << result.seconds << " s\n";
    } else if (app.got_subcommand("simulate")) {
      const depshap::ExperimentReport report = depshap::run_simulate(config_path, simulate_out, simulate_threads);
      std::cout << depshap::report_summary(report);
    } else {
      const depshap::ClusterAssignment a = depshap::run_cluster(cluster_train, cluster_alpha, cluster_out, cluster_threads);
      std::cerr << a.groups.size() << " groups\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return depshap::exit_code(e);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
