#pragma once

// Feature distributions used by the simulation experiments, with exact
// conditional laws for computing true Shapley values.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "depshap/coalition.hpp"
#include "depshap/diagnostics.hpp"
#include "depshap/random.hpp"
#include "depshap/training.hpp"

namespace depshap {

// ---------------------------------------------------------------------------
// Gaussian with equicorrelated covariance

/// Unit diagonal, every off-diagonal equal to rho; rho in (-1/(m-1), 1).
Eigen::MatrixXd equicorrelated_covariance(int m, double rho);

Eigen::MatrixXd sample_multivariate_normal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, int n,
                                           std::uint64_t seed);

TrainingMatrix sample_equicorrelated_gaussian(int m, double rho, int n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Generalized inverse Gaussian, density proportional to
// w^(lambda-1) exp(-(chi/w + psi*w)/2) on w > 0.

void validate_gig(double lambda, double chi, double psi);

// log K_nu(z) for z > 0, stable where K_nu(z) underflows.
double log_bessel_k(double nu, double z);

double gig_mean(double lambda, double chi, double psi);
double gig_variance(double lambda, double chi, double psi);

double sample_gig_one(double lambda, double chi, double psi, Rng& rng);
std::vector<double> sample_gig(double lambda, double chi, double psi, int n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Generalized hyperbolic: X = mu + W beta + sqrt(W) U with W ~ GIG(lambda, chi, psi)
// and U ~ N(0, Sigma). The experiment parameterization has chi = psi = omega.

struct GHParams {
  double lambda = 1.0;
  double chi = 0.5;
  double psi = 0.5;
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  Eigen::VectorXd beta;

  int dimension() const { return static_cast<int>(mu.size()); }
  void validate() const;
};

GHParams gh_params(double lambda, double omega, Eigen::VectorXd mu, Eigen::MatrixXd sigma, Eigen::VectorXd beta);

/// Sigma = I, beta = (kappa/4) 1, mu = -E[W] beta so that the mean is zero.
GHParams gh_experiment_params(int m, double kappa);

/// lambda = 1, omega = 0.5, mu = 3, Sigma = diag(1,2,3,1,2,3,1,2,3,3),
/// beta = (1,1,1,1,1,0.5,0.5,0.5,0.5,0.5).
GHParams gh10_params();

Eigen::VectorXd gh_mean(const GHParams& p);
// E[W] Sigma + Var(W) beta beta^T.
Eigen::MatrixXd gh_covariance(const GHParams& p);

Eigen::MatrixXd sample_gh_rows(const GHParams& p, int n, std::uint64_t seed);
TrainingMatrix sample_gh(const GHParams& p, int n, std::uint64_t seed);

enum class PsiVariant {
  // psi + beta_1^T Sigma_11^{-1} beta_1
  kInverse,
  // psi + beta_1^T Sigma_11^T beta_1, the form printed in some references.
  kPrinted,
};

/// Law of the non-members of s given x_S = x_star_S.
GHParams gh_conditional(const GHParams& p, Coalition s, const Eigen::VectorXd& x_star,
                        PsiVariant variant = PsiVariant::kInverse, Diagnostics* diag = nullptr);

// Log density up to an additive constant.
double gh_log_density_unnormalized(const GHParams& p, const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------
// Gaussian mixture with a shared covariance

struct MixtureParams {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  Eigen::MatrixXd covariance;

  int dimension() const { return static_cast<int>(covariance.rows()); }
  void validate() const;
};

/// Two equal-weight components with means +-gamma (1, -0.5, 1, 1, -0.5, ...)
/// and covariance Sigma(0.2).
MixtureParams mixture_experiment_params(int m, double gamma);

Eigen::MatrixXd sample_mixture_rows(const MixtureParams& p, int n, std::uint64_t seed);
TrainingMatrix sample_mixture(const MixtureParams& p, int n, std::uint64_t seed);

// Posterior component weights given x_S = x_star_S.
Eigen::VectorXd mixture_posterior_weights(const MixtureParams& p, Coalition s, const Eigen::VectorXd& x_star);

// ---------------------------------------------------------------------------
// Common interface

/// One term of a conditional law written as a weighted sum of pieces. A piece
/// is integrated on x = center + transform * z over a box in z; log_density
/// may omit additive constants.
struct ConditionalPiece {
  double weight = 1.0;
  Eigen::VectorXd center;
  Eigen::MatrixXd transform;
  std::function<double(const Eigen::VectorXd&)> log_density;
};

class FeatureDistribution {
 public:
  virtual ~FeatureDistribution() = default;

  virtual std::string name() const = 0;
  virtual int dimension() const = 0;
  virtual Eigen::VectorXd mean() const = 0;
  virtual Eigen::MatrixXd sample(int n, std::uint64_t seed) const = 0;

  // k draws of the non-members of s given x_S = x_star_S; s may be empty.
  virtual Eigen::MatrixXd sample_conditional(Coalition s, const Eigen::VectorXd& x_star, int k,
                                             std::uint64_t seed) const = 0;
  virtual Eigen::VectorXd conditional_mean(Coalition s, const Eigen::VectorXd& x_star) const = 0;
  virtual std::vector<ConditionalPiece> conditional_pieces(Coalition s, const Eigen::VectorXd& x_star) const = 0;
};

std::unique_ptr<FeatureDistribution> make_gaussian_distribution(Eigen::VectorXd mean, Eigen::MatrixXd covariance);
std::unique_ptr<FeatureDistribution> make_gh_distribution(GHParams params, PsiVariant variant = PsiVariant::kInverse);
std::unique_ptr<FeatureDistribution> make_mixture_distribution(MixtureParams params);

}  // namespace depshap
