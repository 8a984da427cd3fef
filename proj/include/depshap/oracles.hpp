#pragma once

// Ground-truth Shapley values: closed forms for linear predictors and numerical
// integration against the true conditional feature distribution.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "depshap/coalition.hpp"
#include "depshap/distributions.hpp"
#include "depshap/errors.hpp"
#include "depshap/model.hpp"

namespace depshap {

enum class TruthMethod { kClosedForm, kQuadrature, kMonteCarlo };

std::string to_string(TruthMethod method);

struct LinearModelSpec {
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd feature_mean;
};

struct TrueShapleyResult {
  double phi0 = 0.0;
  Eigen::VectorXd phi;
  double prediction = 0.0;
  TruthMethod method = TruthMethod::kClosedForm;
  // Monte Carlo only: per-feature standard errors.
  std::optional<Eigen::VectorXd> mc_std_error;
  // Quadrature only: points per axis at the final resolution and the largest
  // change in any phi_j after doubling.
  int quadrature_points = 0;
  double quadrature_change = 0.0;
};

// Conditional mean E[x_free | x_S = x_star_S] for the non-members of S.
using ConditionalMeanFn = std::function<Eigen::VectorXd(Coalition, const Eigen::VectorXd&)>;

/// phi0 = beta0 + sum beta_j E[x_j], phi_j = beta_j (x_j* - E[x_j]).
TrueShapleyResult linear_independent_shapley(const LinearModelSpec& model, const Eigen::VectorXd& x_star);

/// Linear predictor evaluated at x_S = x_S*, x_free = E[x_free | x_S*].
double linear_dependent_v(const LinearModelSpec& model, const ConditionalMeanFn& cond_mean, Coalition s,
                          const Eigen::VectorXd& x_star);

/// Exact Shapley values of a linear predictor under a dependent distribution.
TrueShapleyResult linear_dependent_shapley(const LinearModelSpec& model, const ConditionalMeanFn& cond_mean,
                                           const Eigen::VectorXd& x_star);

TrueShapleyResult true_shapley_closed_form(const FeatureDistribution& dist, const LinearCoefficients& coef,
                                           const Eigen::VectorXd& x_star);

// Thrown when doubling the grid moves some phi_j by more than the tolerance.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, std::vector<std::pair<Coalition, double>> residuals)
      : Error(what), residuals_(std::move(residuals)) {}
  const std::vector<std::pair<Coalition, double>>& residuals() const { return residuals_; }

 private:
  std::vector<std::pair<Coalition, double>> residuals_;
};

struct QuadratureOptions {
  int points = 64;
  double half_width = 8.0;
  double tolerance = 1e-4;
};

/// E[f(x) | x_S = x_S*] by tensor Gauss-Legendre quadrature over the free
/// coordinates, one grid per conditional piece.
double quadrature_v(const FeatureDistribution& dist, const Model& model, Coalition s, const Eigen::VectorXd& x_star,
                    int points, double half_width);

/// Exact Shapley formula on quadrature v(S). v_empty may be supplied to skip
/// the full-dimensional integral (it does not depend on x_star).
TrueShapleyResult true_shapley_quadrature(const FeatureDistribution& dist, const Model& model,
                                          const Eigen::VectorXd& x_star, const QuadratureOptions& options = {},
                                          std::optional<double> v_empty = std::nullopt);

struct MonteCarloValue {
  double mean = 0.0;
  double std_error = 0.0;
};

MonteCarloValue monte_carlo_v(const FeatureDistribution& dist, const Model& model, Coalition s,
                              const Eigen::VectorXd& x_star, int n_mc, std::uint64_t seed);

/// Exact Shapley formula on Monte Carlo v(S), each coalition with its own
/// stream; standard errors are propagated through the formula's weights.
TrueShapleyResult true_shapley_mc(const FeatureDistribution& dist, const Model& model, const Eigen::VectorXd& x_star,
                                  int n_mc, std::uint64_t seed, std::optional<MonteCarloValue> v_empty = std::nullopt);

}  // namespace depshap
