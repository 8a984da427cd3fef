#pragma once

// AICc bandwidth selection for the empirical conditional estimator, which is a
// Nadaraya-Watson smoother with response f(x_Sbar^j, x_S*) and covariates x_S^j.

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "depshap/coalition.hpp"
#include "depshap/diagnostics.hpp"
#include "depshap/model.hpp"
#include "depshap/training.hpp"

namespace depshap {

enum class AiccPenalty {
  // (1 + tr(H)/n) / (1 - (tr(H)+2)/n)
  kCorrected,
  // (1 + tr(H)/n) / (1 - (tr(H)+2)/2), kept for auditing.
  kPrinted,
};

struct AiccOptions {
  std::vector<double> sigma_grid{0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2};
  int n_aicc = 400;
  AiccPenalty penalty = AiccPenalty::kCorrected;
};

struct AiccScore {
  double sigma = 0.0;
  double tau2 = 0.0;
  double trace = 0.0;
  double penalty = 0.0;
  // +inf when the penalty denominator is not positive.
  double aicc = std::numeric_limits<double>::infinity();
  bool admissible = false;
};

// Sorted, de-duplicated copy; throws on an empty grid or non-positive entries.
std::vector<double> normalized_grid(std::span<const double> grid);

double aicc_penalty(double trace, Eigen::Index n, AiccPenalty form);

/// Criterion for one bandwidth from the matrix of pairwise squared scaled
/// Mahalanobis distances. H_ij = w_ij / sum_l w_il, tau2 = mean (y - H y)^2.
AiccScore aicc_criterion(const Eigen::MatrixXd& distances2, const Eigen::VectorXd& responses, double sigma,
                         AiccPenalty form);

// Responses and covariate distances on a fixed training subsample.
struct AiccProblem {
  std::vector<Eigen::Index> rows;
  Eigen::MatrixXd distances2;
  Eigen::VectorXd responses;
};

// Uniform subsample (without replacement) of min(n_aicc, n_train) rows.
std::vector<Eigen::Index> aicc_subsample(Eigen::Index n_train, int n_aicc, std::uint64_t seed);

AiccProblem build_aicc_problem(const TrainingMatrix& train, const Model& model, Coalition s,
                               const Eigen::VectorXd& x_star, std::span<const Eigen::Index> rows,
                               Diagnostics* diag = nullptr);

// Criterion for every grid entry (grid must already be normalized).
std::vector<AiccScore> aicc_scores(const AiccProblem& problem, std::span<const double> grid, AiccPenalty form);

// Index of the admissible minimizer; ties go to the smaller sigma. Throws
// DomainError("no admissible bandwidth") when every entry is excluded.
std::size_t argmin_admissible(std::span<const double> criteria);

/// Per-coalition ("exact") AICc choice over the grid.
double aicc_bandwidth(const TrainingMatrix& train, const Model& model, Coalition s, const Eigen::VectorXd& x_star,
                      const AiccOptions& options, std::uint64_t seed, Diagnostics* diag = nullptr);

/// Shared ("approximate") choice for every coalition of the given size: the
/// grid point minimizing the sum of per-coalition criteria.
double aicc_bandwidth_for_size(const TrainingMatrix& train, const Model& model, int size,
                               const Eigen::VectorXd& x_star, const AiccOptions& options, std::uint64_t seed,
                               Diagnostics* diag = nullptr);

/// Shared choice for an explicit set of coalitions (used with sampled designs,
/// where only the coalitions present in the design are scored).
double aicc_bandwidth_shared(const TrainingMatrix& train, const Model& model, std::span<const Coalition> coalitions,
                             const Eigen::VectorXd& x_star, const AiccOptions& options, std::uint64_t seed,
                             Diagnostics* diag = nullptr);

}  // namespace depshap
