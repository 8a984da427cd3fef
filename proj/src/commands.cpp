#include "depshap/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <memory>
#include <set>

#include <nlohmann/json.hpp>

#include "depshap/config.hpp"
#include "depshap/csv.hpp"
#include "depshap/errors.hpp"
#include "depshap/explainer.hpp"
#include "depshap/external_model.hpp"
#include "depshap/format.hpp"
#include "depshap/random.hpp"

namespace depshap {
namespace {

constexpr std::uint64_t kDesignStream = 0xDE5167;

std::string path_in(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

void ensure_directory(const std::string& dir) {
  if (dir.empty()) throw SchemaError("output directory is required");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create '" + dir + "': " + ec.message());
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

// Reorders the test columns to the training order; throws with the column diff.
Table align_schema(const Table& train, const Table& test) {
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  const std::set<std::string> train_names(train.names.begin(), train.names.end());
  const std::set<std::string> test_names(test.names.begin(), test.names.end());
  for (const auto& n : train.names) {
    if (!test_names.contains(n)) missing.push_back(n);
  }
  for (const auto& n : test.names) {
    if (!train_names.contains(n)) extra.push_back(n);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "test columns do not match training columns";
    if (!missing.empty()) msg += "; missing from test: " + join_names(missing);
    if (!extra.empty()) msg += "; not in training: " + join_names(extra);
    throw SchemaError(msg);
  }
  return test.select(train.names);
}

std::unique_ptr<Model> build_model(const ExplainRequest& request, const Table& features,
                                   const Eigen::VectorXd& y, Diagnostics* diag) {
  switch (request.model) {
    case ModelSource::kBuiltinOls:
      return fit_ols(features.values, y, diag);
    case ModelSource::kBuiltinStumps:
      return fit_boosted_trees(features.values, y, request.boosting);
    case ModelSource::kExternal: {
      ExternalModelOptions options;
      options.timeout = std::chrono::milliseconds(request.model_timeout_ms);
      return std::make_unique<ExternalModel>(request.model_command, options);
    }
  }
  throw DomainError("unknown model source");
}

}  // namespace

ModelSource parse_model_source(const std::string& text) {
  if (text == "builtin_ols") return ModelSource::kBuiltinOls;
  if (text == "builtin_stumps") return ModelSource::kBuiltinStumps;
  if (text == "external") return ModelSource::kExternal;
  throw SchemaError("unknown model '" + text + "' (expected builtin_ols, builtin_stumps or external)");
}

ExplainResult run_explain(const ExplainRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  request.estimator.validate();
  if (request.k < 1) throw DomainError("k must be positive");
  if (request.coalition_samples < 1) throw DomainError("coalition_samples must be positive");
  if (request.model == ModelSource::kExternal && request.model_command.empty()) {
    throw SchemaError("external model needs a command");
  }
  if (request.model != ModelSource::kExternal && request.target.empty()) {
    throw SchemaError("built-in models need a target column");
  }
  if (request.cluster_alpha && !(*request.cluster_alpha > 0)) throw DomainError("alpha must be positive");

  Table train = read_csv(request.train_path);
  Table test = read_csv(request.test_path);
  Eigen::VectorXd y;
  if (!request.target.empty()) {
    y = train.values.col(train.column(request.target));
    train = train.without(request.target);
    if (std::find(test.names.begin(), test.names.end(), request.target) != test.names.end()) {
      test = test.without(request.target);
    }
  }
  if (train.columns() < 1) throw SchemaError("training CSV has no feature columns");
  if (train.rows() < 2) throw SchemaError("training CSV needs at least two rows");
  test = align_schema(train, test);

  ExplainResult result;
  result.feature_names = train.names;
  Diagnostics setup;
  const TrainingMatrix training(train.values, train.names);
  const std::unique_ptr<Model> model = build_model(request, train, y, &setup);

  const int m = train.columns();
  CoalitionMatrix design;
  if (m <= kDefaultEnumerationCap) {
    design = enumerate_coalitions(m);
  } else {
    result.sampled_design = true;
    result.warnings.push_back(std::to_string(m) + " features exceed the enumeration limit of " +
                              std::to_string(kDefaultEnumerationCap) + "; using " +
                              std::to_string(request.coalition_samples) + " sampled coalitions");
    design = sample_coalitions(m, request.coalition_samples, derive_seed(request.seed, {kDesignStream}));
  }

  const ConditionalSampler sampler(request.estimator, training, *model, &setup);
  const Explainer explainer(sampler, design, ConstraintMode::kHard);
  std::vector<Diagnostics> diags;
  result.explanations =
      explainer.explain_all(test.values, ExplainOptions{request.k, request.seed, request.threads}, &diags);

  for (std::size_t i = 0; i < result.explanations.size(); ++i) {
    const Explanation& e = result.explanations[i];
    if (!satisfies_efficiency(e, 1e-6)) {
      throw Error("efficiency violated for instance " + std::to_string(i) + ": phi0 + sum(phi) = " +
                  format_number(e.total()) + ", prediction = " + format_number(e.prediction));
    }
  }

  if (request.cluster_alpha) {
    const Eigen::MatrixXd& source = request.cluster_on_test ? test.values : train.values;
    if (source.rows() < 2) throw SchemaError("clustering needs at least two rows");
    const Eigen::MatrixXd d = dissimilarity(source, &setup, request.threads);
    result.clusters = kgs_cut(complete_linkage(d), d, *request.cluster_alpha);
    for (const Explanation& e : result.explanations) result.groups.push_back(aggregate_shapley(e, *result.clusters));
  }

  std::set<std::string> unique(setup.messages.begin(), setup.messages.end());
  for (const Diagnostics& d : diags) unique.insert(d.messages.begin(), d.messages.end());
  result.warnings.insert(result.warnings.end(), unique.begin(), unique.end());

  ensure_directory(request.output_dir);
  write_text_file(path_in(request.output_dir, "explanations.csv"), explanations_csv(result));
  write_text_file(path_in(request.output_dir, "explanations.json"), explanations_json(result, request));
  if (result.clusters) {
    write_text_file(path_in(request.output_dir, "clusters.json"),
                    assignment_json(*result.clusters, result.feature_names));
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string explanations_csv(const ExplainResult& result) {
  std::string out = "instance_id,prediction,phi0";
  for (const auto& name : result.feature_names) out += ",phi_" + name;
  if (result.clusters) {
    for (const auto& label : result.clusters->labels) out += ",group_" + label;
  }
  out += '\n';
  for (std::size_t i = 0; i < result.explanations.size(); ++i) {
    const Explanation& e = result.explanations[i];
    out += std::to_string(i) + "," + format_number(e.prediction) + "," + format_number(e.phi0);
    for (Eigen::Index j = 0; j < e.phi.size(); ++j) out += "," + format_number(e.phi(j));
    if (result.clusters) {
      const GroupExplanation& g = result.groups[i];
      for (Eigen::Index j = 0; j < g.phi.size(); ++j) out += "," + format_number(g.phi(j));
    }
    out += '\n';
  }
  return out;
}

std::string explanations_json(const ExplainResult& result, const ExplainRequest& request) {
  nlohmann::ordered_json root;
  root["estimator"] = request.estimator.label();
  root["model"] = request.model == ModelSource::kBuiltinOls      ? "builtin_ols"
                  : request.model == ModelSource::kBuiltinStumps ? "builtin_stumps"
                                                                  : "external";
  root["seed"] = request.seed;
  root["k"] = request.k;
  root["design"] = result.sampled_design ? "sampled" : "enumerated";
  root["constraint"] = "hard";
  root["features"] = result.feature_names;
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.explanations.size(); ++i) {
    const Explanation& e = result.explanations[i];
    nlohmann::ordered_json r;
    r["instance_id"] = i;
    r["prediction"] = e.prediction;
    r["phi0"] = e.phi0;
    r["phi"] = std::vector<double>(e.phi.begin(), e.phi.end());
    if (result.clusters) {
      const GroupExplanation& g = result.groups[i];
      r["group_phi"] = std::vector<double>(g.phi.begin(), g.phi.end());
      std::vector<std::string> order;
      for (int w : g.waterfall) order.push_back(g.labels[static_cast<std::size_t>(w)]);
      r["waterfall"] = order;
    }
    records.push_back(r);
  }
  root["records"] = records;
  if (result.clusters) {
    root["groups"] = nlohmann::ordered_json::parse(assignment_json(*result.clusters, result.feature_names))["groups"];
  }
  root["diagnostics"] = result.warnings;
  return root.dump(2) + "\n";
}

ExperimentReport run_simulate(const std::string& config_path, const std::string& output_dir,
                              std::optional<int> threads) {
  ExperimentConfig config = parse_experiment_config(read_text_file(config_path));
  if (threads) {
    config.threads = *threads;
    config.validate();
  }
  ExperimentReport report = run_experiment(config);
  ensure_directory(output_dir);
  write_text_file(path_in(output_dir, "report.csv"), report_csv(report));
  write_text_file(path_in(output_dir, "report.json"), report_json(report));
  write_text_file(path_in(output_dir, "summary.txt"), report_summary(report));
  if (const int violations = report.efficiency_violations(); violations > 0) {
    throw Error(std::to_string(violations) + " explanations violated efficiency");
  }
  return report;
}

ClusterAssignment run_cluster(const std::string& train_path, double alpha, const std::string& output_dir,
                              int threads) {
  if (!(alpha > 0)) throw DomainError("alpha must be positive");
  const Table table = read_csv(train_path);
  if (table.columns() < 2) throw SchemaError("clustering needs at least two numeric columns");
  if (table.rows() < 2) throw SchemaError("clustering needs at least two rows");
  Diagnostics diag;
  const Eigen::MatrixXd d = dissimilarity(table.values, &diag, threads);
  ClusterAssignment assignment = kgs_cut(complete_linkage(d), d, alpha);

  ensure_directory(output_dir);
  write_text_file(path_in(output_dir, "clusters.json"), assignment_json(assignment, table.names));
  std::string penalty = "clusters,average_spread,normalized_spread,penalty\n";
  for (const PenaltyRow& r : assignment.penalty_table) {
    penalty += std::to_string(r.clusters) + "," + format_number(r.average_spread) + "," +
               format_number(r.normalized_spread) + "," + format_number(r.penalty) + "\n";
  }
  write_text_file(path_in(output_dir, "penalty.csv"), penalty);
  Table tau;
  tau.names = table.names;
  tau.values = (1.0 - d.array()).matrix();
  write_text_file(path_in(output_dir, "kendall_tau.csv"), format_csv(tau));
  return assignment;
}

int exit_code(const std::exception& error) {
  if (dynamic_cast<const ProtocolError*>(&error) != nullptr) return 3;
  if (dynamic_cast<const SchemaError*>(&error) != nullptr) return 2;
  if (dynamic_cast<const DomainError*>(&error) != nullptr) return 2;
  return 1;
}

}  // namespace depshap
