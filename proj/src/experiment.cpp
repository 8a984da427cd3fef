#include "depshap/experiment.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "depshap/errors.hpp"
#include "depshap/explainer.hpp"
#include "depshap/format.hpp"
#include "depshap/parallel.hpp"
#include "depshap/random.hpp"

namespace depshap {
namespace {

using Clock = std::chrono::steady_clock;

enum Stream : std::uint64_t { kTrain = 1, kResponse = 2, kTest = 3, kTruth = 4, kExplain = 5 };

std::uint64_t batch_seed(const ExperimentConfig& config, double parameter, int batch, Stream stream) {
  return derive_seed(config.seed, {std::bit_cast<std::uint64_t>(parameter), static_cast<std::uint64_t>(batch),
                                   static_cast<std::uint64_t>(stream)});
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double safe_skill(double mae_q, double mae_reference) {
  try {
    return skill_score(mae_q, mae_reference);
  } catch (const DomainError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double abs_error_sum(const std::vector<Explanation>& estimated, const std::vector<TrueShapleyResult>& truth) {
  if (estimated.size() != truth.size()) throw DomainError("mae: instance count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    if (estimated[i].phi.size() != truth[i].phi.size()) throw DomainError("mae: feature count mismatch");
    acc += (estimated[i].phi - truth[i].phi).cwiseAbs().sum();
  }
  return acc;
}

std::string penalty_name(AiccPenalty p) { return p == AiccPenalty::kCorrected ? "corrected" : "printed"; }

}  // namespace

double mae(const std::vector<Explanation>& estimated, const std::vector<TrueShapleyResult>& truth) {
  if (estimated.empty()) throw DomainError("mae: no instances");
  const double count = static_cast<double>(estimated.size()) * static_cast<double>(estimated.front().phi.size());
  return abs_error_sum(estimated, truth) / count;
}

double skill_score(double mae_q, double mae_reference) {
  if (mae_reference == 0.0) throw DomainError("degenerate reference");
  return 1.0 - mae_q / mae_reference;
}

std::string to_string(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::kGaussian: return "gaussian";
    case FeatureFamily::kGH: return "gh";
    case FeatureFamily::kGH10: return "gh10";
    case FeatureFamily::kMixture: return "mixture";
  }
  return "unknown";
}

std::string to_string(SamplingModel model) { return model == SamplingModel::kLinear ? "linear" : "piecewise"; }

std::string to_string(TruthChoice truth) {
  switch (truth) {
    case TruthChoice::kAuto: return "auto";
    case TruthChoice::kClosedForm: return "closed_form";
    case TruthChoice::kQuadrature: return "quadrature";
    case TruthChoice::kMonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (dimension != 3 && dimension != 10) throw DomainError("dimension must be 3 or 10");
  if (family == FeatureFamily::kGH10 && dimension != 10) throw DomainError("gh10 needs dimension 10");
  if (parameters.empty()) throw DomainError("parameter list is empty");
  if (n_train < 20) throw DomainError("n_train must be at least 20");
  if (n_test < 1) throw DomainError("n_test must be positive");
  if (batches < 1) throw DomainError("batches must be positive");
  if (k < 1) throw DomainError("k must be positive");
  if (n_mc < 2) throw DomainError("n_mc must be at least 2");
  if (threads < 1) throw DomainError("threads must be positive");
  if (!(noise_sd >= 0)) throw DomainError("noise_sd must be non-negative");
  for (const SamplerSpec& s : estimators) s.validate();
}

std::vector<SamplerSpec> ExperimentConfig::estimator_list() const {
  std::vector<SamplerSpec> out{SamplerSpec{}};
  for (const SamplerSpec& s : estimators) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const SamplerSpec& o) { return o.label() == s.label(); });
    if (!seen) out.push_back(s);
  }
  return out;
}

std::unique_ptr<FeatureDistribution> make_distribution(const ExperimentConfig& config, double parameter) {
  const int m = config.dimension;
  switch (config.family) {
    case FeatureFamily::kGaussian:
      return make_gaussian_distribution(Eigen::VectorXd::Zero(m), equicorrelated_covariance(m, parameter));
    case FeatureFamily::kGH:
      return make_gh_distribution(gh_experiment_params(m, parameter), config.psi_variant);
    case FeatureFamily::kGH10:
      return make_gh_distribution(gh10_params(), config.psi_variant);
    case FeatureFamily::kMixture:
      return make_mixture_distribution(mixture_experiment_params(m, parameter));
  }
  throw DomainError("unknown feature family");
}

BatchData prepare_batch(const ExperimentConfig& config, const FeatureDistribution& dist, double parameter, int batch) {
  BatchData data;
  data.train = TrainingMatrix(dist.sample(config.n_train, batch_seed(config, parameter, batch, kTrain)));
  data.y = sample_response(config.sampling, data.train.data(), config.noise_sd,
                           batch_seed(config, parameter, batch, kResponse));
  if (config.sampling == SamplingModel::kLinear) {
    data.model = fit_ols(data.train.data(), data.y);
  } else {
    data.model = fit_boosted_trees(data.train.data(), data.y, config.boosting);
  }
  data.test = dist.sample(config.n_test, batch_seed(config, parameter, batch, kTest));
  return data;
}

std::vector<TrueShapleyResult> compute_truth(const ExperimentConfig& config, const FeatureDistribution& dist,
                                             const Model& model, const Eigen::MatrixXd& test, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(test.rows());
  const int m = dist.dimension();
  std::vector<TrueShapleyResult> out(n);
  const auto coef = model.linear_coefficients();

  TruthChoice choice = config.truth;
  if (choice == TruthChoice::kAuto) {
    if (coef) {
      choice = TruthChoice::kClosedForm;
    } else if (m <= 4) {
      choice = TruthChoice::kQuadrature;
    } else {
      choice = TruthChoice::kMonteCarlo;
    }
  }
  if (choice == TruthChoice::kClosedForm && !coef) throw DomainError("closed-form truth needs a linear predictor");

  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(m);
  std::optional<double> quad_empty;
  if (choice == TruthChoice::kQuadrature) {
    const double coarse = quadrature_v(dist, model, Coalition::empty(), origin, config.quadrature.points,
                                       config.quadrature.half_width);
    const double fine = quadrature_v(dist, model, Coalition::empty(), origin, 2 * config.quadrature.points,
                                     config.quadrature.half_width);
    if (std::abs(fine - coarse) / m < config.quadrature.tolerance) {
      quad_empty = fine;
    } else if (config.truth == TruthChoice::kQuadrature) {
      throw QuadratureError("quadrature refinement did not converge for the empty coalition",
                            {{Coalition::empty(), std::abs(fine - coarse)}});
    } else {
      choice = TruthChoice::kMonteCarlo;
    }
  }

  // v(empty) does not depend on the instance; estimate it once per batch.
  std::optional<MonteCarloValue> mc_empty;
  if (choice == TruthChoice::kMonteCarlo || (choice == TruthChoice::kQuadrature && config.truth == TruthChoice::kAuto)) {
    mc_empty = monte_carlo_v(dist, model, Coalition::empty(), origin, config.n_mc, derive_seed(seed, {~0ULL}));
  }

  parallel_for(n, config.threads, [&](std::size_t i) {
    const Eigen::VectorXd x = test.row(static_cast<Eigen::Index>(i)).transpose();
    const std::uint64_t row_seed = derive_seed(seed, {i});
    switch (choice) {
      case TruthChoice::kClosedForm:
        out[i] = true_shapley_closed_form(dist, *coef, x);
        return;
      case TruthChoice::kQuadrature:
        try {
          out[i] = true_shapley_quadrature(dist, model, x, config.quadrature, quad_empty);
        } catch (const QuadratureError&) {
          if (config.truth == TruthChoice::kQuadrature) throw;
          out[i] = true_shapley_mc(dist, model, x, config.n_mc, row_seed, mc_empty);
        }
        return;
      default:
        out[i] = true_shapley_mc(dist, model, x, config.n_mc, row_seed, mc_empty);
        return;
    }
  });
  return out;
}

int ExperimentReport::efficiency_violations() const {
  int total = 0;
  for (const auto& r : results) {
    for (const auto& e : r.estimators) total += e.efficiency_violations;
  }
  return total;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = Clock::now();
  ExperimentReport report;
  report.config = config;
  const std::vector<SamplerSpec> specs = config.estimator_list();
  const int m = config.dimension;
  const CoalitionMatrix design = enumerate_coalitions(m);

  for (double parameter : config.parameters) {
    ParameterResult result;
    result.parameter = parameter;
    const auto dist = make_distribution(config, parameter);
    std::vector<double> abs_sum(specs.size(), 0.0);
    std::vector<double> seconds(specs.size(), 0.0);
    std::vector<int> violations(specs.size(), 0);
    std::vector<std::vector<double>> batch_mae(specs.size());
    std::size_t completed_points = 0;

    for (int batch = 0; batch < config.batches; ++batch) {
      try {
        const BatchData data = prepare_batch(config, *dist, parameter, batch);
        const std::vector<TrueShapleyResult> truth =
            compute_truth(config, *dist, *data.model, data.test, batch_seed(config, parameter, batch, kTruth));
        std::vector<double> batch_abs(specs.size());
        std::vector<double> batch_seconds(specs.size());
        std::vector<int> batch_violations(specs.size(), 0);
        for (std::size_t e = 0; e < specs.size(); ++e) {
          const auto t0 = Clock::now();
          const ConditionalSampler sampler(specs[e], data.train, *data.model);
          const Explainer explainer(sampler, design, ConstraintMode::kHard);
          const ExplainOptions options{config.k, batch_seed(config, parameter, batch, kExplain), config.threads};
          const std::vector<Explanation> phi = explainer.explain_all(data.test, options);
          batch_seconds[e] = seconds_since(t0);
          batch_abs[e] = abs_error_sum(phi, truth);
          for (const Explanation& x : phi) batch_violations[e] += satisfies_efficiency(x) ? 0 : 1;
        }
        const double count = static_cast<double>(truth.size()) * m;
        for (std::size_t e = 0; e < specs.size(); ++e) {
          abs_sum[e] += batch_abs[e];
          seconds[e] += batch_seconds[e];
          violations[e] += batch_violations[e];
          batch_mae[e].push_back(batch_abs[e] / count);
        }
        for (const TrueShapleyResult& t : truth) ++result.truth_methods[to_string(t.method)];
        completed_points += truth.size();
        result.completed_batches.push_back(batch);
      } catch (const std::exception& ex) {
        result.failed_batches[batch] = ex.what();
      }
    }

    result.explanations = static_cast<int>(completed_points * specs.size());
    const double count = static_cast<double>(completed_points) * m;
    for (std::size_t e = 0; e < specs.size(); ++e) {
      EstimatorResult er;
      er.label = specs[e].label();
      er.mae = completed_points > 0 ? abs_sum[e] / count : std::numeric_limits<double>::quiet_NaN();
      er.batch_mae = batch_mae[e];
      er.seconds = seconds[e];
      er.efficiency_violations = violations[e];
      result.estimators.push_back(er);
    }
    const EstimatorResult& reference = result.estimators.front();
    for (EstimatorResult& er : result.estimators) {
      er.skill = safe_skill(er.mae, reference.mae);
      for (std::size_t b = 0; b < er.batch_mae.size(); ++b) {
        er.batch_skill.push_back(safe_skill(er.batch_mae[b], reference.batch_mae[b]));
      }
    }
    report.results.push_back(std::move(result));
  }
  report.seconds = seconds_since(start);
  return report;
}

// ---------------------------------------------------------------------------

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "experiment,parameter,estimator,batch,mae,skill\n";
  for (const ParameterResult& r : report.results) {
    for (const EstimatorResult& e : r.estimators) {
      for (std::size_t b = 0; b < e.batch_mae.size(); ++b) {
        out << report.config.experiment << ',' << format_number(r.parameter) << ',' << e.label << ','
            << r.completed_batches[b] << ',' << format_number(e.batch_mae[b]) << ','
            << format_number(e.batch_skill[b]) << '\n';
      }
      out << report.config.experiment << ',' << format_number(r.parameter) << ',' << e.label << ",all,"
          << format_number(e.mae) << ',' << format_number(e.skill) << '\n';
    }
  }
  return out.str();
}

std::string report_json(const ExperimentReport& report) {
  const ExperimentConfig& c = report.config;
  nlohmann::ordered_json config;
  config["experiment"] = c.experiment;
  config["dimension"] = c.dimension;
  config["feature_family"] = to_string(c.family);
  config["parameters"] = c.parameters;
  config["sampling_model"] = to_string(c.sampling);
  std::vector<std::string> labels;
  for (const SamplerSpec& s : c.estimator_list()) labels.push_back(s.label());
  config["estimators"] = labels;
  config["n_train"] = c.n_train;
  config["n_test"] = c.n_test;
  config["batches"] = c.batches;
  config["noise_sd"] = c.noise_sd;
  config["k"] = c.k;
  config["seed"] = c.seed;
  config["truth"] = to_string(c.truth);
  config["n_mc"] = c.n_mc;
  config["quadrature_points"] = c.quadrature.points;
  config["quadrature_half_width"] = c.quadrature.half_width;
  config["quadrature_tolerance"] = c.quadrature.tolerance;
  config["psi_variant"] = c.psi_variant == PsiVariant::kInverse ? "inverse" : "printed";
  config["boosting_rounds"] = c.boosting.rounds;
  config["boosting_depth"] = c.boosting.max_depth;
  config["learning_rate"] = c.boosting.learning_rate;
  config["max_bins"] = c.boosting.max_bins;
  const SamplerSpec defaults = c.estimators.empty() ? SamplerSpec{} : c.estimators.front();
  config["eta"] = defaults.eta;
  config["k_cap"] = defaults.k_cap;
  config["d_star"] = defaults.d_star;
  config["sigma_grid"] = defaults.aicc.sigma_grid;
  config["n_aicc"] = defaults.aicc.n_aicc;
  config["aicc_penalty"] = penalty_name(defaults.aicc.penalty);
  config["constraint_mode"] = "hard";

  nlohmann::ordered_json results = nlohmann::ordered_json::array();
  for (const ParameterResult& r : report.results) {
    nlohmann::ordered_json jr;
    jr["parameter"] = r.parameter;
    jr["truth_methods"] = r.truth_methods;
    jr["completed_batches"] = r.completed_batches;
    nlohmann::ordered_json failed = nlohmann::ordered_json::object();
    for (const auto& [b, msg] : r.failed_batches) failed[std::to_string(b)] = msg;
    jr["failed_batches"] = failed;
    jr["explanations"] = r.explanations;
    nlohmann::ordered_json estimators = nlohmann::ordered_json::array();
    for (const EstimatorResult& e : r.estimators) {
      nlohmann::ordered_json je;
      je["estimator"] = e.label;
      je["mae"] = e.mae;
      je["skill"] = e.skill;
      je["batch_mae"] = e.batch_mae;
      je["batch_skill"] = e.batch_skill;
      je["efficiency_violations"] = e.efficiency_violations;
      estimators.push_back(je);
    }
    jr["estimators"] = estimators;
    results.push_back(jr);
  }
  nlohmann::ordered_json root;
  root["config"] = config;
  root["results"] = results;
  return root.dump(2) + "\n";
}

std::string report_summary(const ExperimentReport& report) {
  std::ostringstream out;
  const ExperimentConfig& c = report.config;
  out << "experiment " << c.experiment << ": " << to_string(c.family) << " features, " << to_string(c.sampling)
      << " model, dimension " << c.dimension << ", " << c.batches << " batches x " << c.n_test << " test points\n";
  for (const ParameterResult& r : report.results) {
    out << "\nparameter " << format_number(r.parameter) << " (truth:";
    for (const auto& [method, count] : r.truth_methods) out << ' ' << method << '=' << count;
    out << ")\n";
    char line[160];
    std::snprintf(line, sizeof line, "  %-30s %10s %10s %10s\n", "estimator", "MAE", "skill", "seconds");
    out << line;
    for (const EstimatorResult& e : r.estimators) {
      std::snprintf(line, sizeof line, "  %-30s %10.4f %10.4f %10.2f\n", e.label.c_str(), e.mae, e.skill, e.seconds);
      out << line;
    }
    for (const auto& [b, msg] : r.failed_batches) out << "  batch " << b << " failed: " << msg << '\n';
  }
  char total[64];
  std::snprintf(total, sizeof total, "\ntotal wall clock %.1f s\n", report.seconds);
  out << total;
  return out.str();
}

}  // namespace depshap
