#pragma once

// Estimators of the contribution function v(S) = E[f(x) | x_S = x_S*].

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "depshap/aicc.hpp"
#include "depshap/coalition.hpp"
#include "depshap/diagnostics.hpp"
#include "depshap/model.hpp"
#include "depshap/training.hpp"

namespace depshap {

inline constexpr double kRidgeConditionThreshold = 1e8;

// Throws DomainError("invalid covariance") unless symmetric positive semi-definite.
void validate_covariance(const Eigen::MatrixXd& covariance);

// Adds ridge 1e-8 * trace / d to the diagonal when the condition number exceeds
// 1e8. Returns true when regularized.
bool regularize_if_ill_conditioned(Eigen::MatrixXd& block, Diagnostics* diag, const std::string& context);

// Copies x_star into k rows and overwrites the given columns with values.
Eigen::MatrixXd compose_rows(const Eigen::VectorXd& x_star, const std::vector<int>& columns,
                             const Eigen::MatrixXd& values);

// ---------------------------------------------------------------------------
// Independence (original Kernel SHAP)

/// Mean of f(x_Sbar^k, x_S*) over k training rows drawn uniformly with replacement.
double estimate_v_independent(const TrainingMatrix& train, const Model& model, Coalition s,
                              const Eigen::VectorXd& x_star, int k, std::uint64_t seed);

/// Same estimator evaluated once on every training row, without sampling.
double estimate_v_independent_full(const TrainingMatrix& train, const Model& model, Coalition s,
                                   const Eigen::VectorXd& x_star);

// ---------------------------------------------------------------------------
// Multivariate Gaussian

struct GaussianConditional {
  std::vector<int> given;  // S
  std::vector<int> free;   // complement of S
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  bool regularized = false;
};

/// mean = mu_free + Sigma_fs Sigma_ss^{-1} (x_s - mu_s),
/// cov  = Sigma_ff - Sigma_fs Sigma_ss^{-1} Sigma_sf.
GaussianConditional gaussian_conditional(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, Coalition s,
                                         const Eigen::VectorXd& x_star, Diagnostics* diag = nullptr);
GaussianConditional gaussian_conditional(const TrainingMatrix& train, Coalition s, const Eigen::VectorXd& x_star,
                                         Diagnostics* diag = nullptr);

// Symmetric square root L with L L^T = covariance; clips round-off negative
// eigenvalues, regularizes once on a genuine failure.
Eigen::MatrixXd symmetric_factor(const Eigen::MatrixXd& covariance, Diagnostics* diag = nullptr);

/// k x |free| draws from N(cond.mean, cond.covariance).
Eigen::MatrixXd sample_gaussian_conditional(const GaussianConditional& cond, int k, std::uint64_t seed,
                                            Diagnostics* diag = nullptr);

double estimate_v_gaussian(const TrainingMatrix& train, const Model& model, Coalition s,
                           const Eigen::VectorXd& x_star, int k, std::uint64_t seed, Diagnostics* diag = nullptr);

// ---------------------------------------------------------------------------
// Gaussian copula with empirical margins

inline constexpr Eigen::Index kMinCopulaRows = 20;

class CopulaState {
 public:
  int features() const { return static_cast<int>(sorted_.size()); }
  Eigen::Index rows() const { return sorted_.empty() ? 0 : std::ssize(sorted_.front()); }

  // Mid-rank / (n+1) empirical CDF; never returns 0 or 1.
  double to_uniform(int j, double x) const;
  // Left-continuous inverse of the empirical CDF (order statistic lookup).
  double from_uniform(int j, double u) const;
  double to_latent(int j, double x) const;
  double from_latent(int j, double v) const;

  const Eigen::MatrixXd& latent_correlation() const { return correlation_; }
  const std::vector<bool>& degenerate() const { return degenerate_; }
  double min(int j) const { return sorted_[static_cast<std::size_t>(j)].front(); }
  double max(int j) const { return sorted_[static_cast<std::size_t>(j)].back(); }

 private:
  friend CopulaState fit_copula(const TrainingMatrix& train, Diagnostics* diag);
  std::vector<std::vector<double>> sorted_;
  Eigen::MatrixXd correlation_;
  std::vector<bool> degenerate_;
};

CopulaState fit_copula(const TrainingMatrix& train, Diagnostics* diag = nullptr);

/// k x |free| draws in the original feature units.
Eigen::MatrixXd sample_copula_conditional(const CopulaState& state, Coalition s, const Eigen::VectorXd& x_star, int k,
                                          std::uint64_t seed, Diagnostics* diag = nullptr);

double estimate_v_copula(const CopulaState& state, const Model& model, Coalition s, const Eigen::VectorXd& x_star,
                         int k, std::uint64_t seed, Diagnostics* diag = nullptr);

// ---------------------------------------------------------------------------
// Empirical conditional distribution

struct EmpiricalWeights {
  Eigen::VectorXd distances;
  Eigen::VectorXd weights;
  double sigma = 0.0;
  // Training row indices sorted by weight, largest first (ties by index).
  std::vector<Eigen::Index> order;
};

/// Whitens the S-columns of rows with the (regularized) training covariance
/// block, so that squared Euclidean distance equals D_S^2 * |S|.
class MahalanobisMetric {
 public:
  MahalanobisMetric(const TrainingMatrix& train, Coalition s, Diagnostics* diag = nullptr);

  const std::vector<int>& columns() const { return columns_; }
  // Rows of the result are whitened S-coordinates divided by sqrt(|S|).
  Eigen::MatrixXd transform(const Eigen::MatrixXd& rows) const;
  Eigen::VectorXd transform_point(const Eigen::VectorXd& x) const;
  // Inverse of the (regularized) covariance block.
  Eigen::MatrixXd precision() const;

 private:
  std::vector<int> columns_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

EmpiricalWeights empirical_weights(const TrainingMatrix& train, Coalition s, const Eigen::VectorXd& x_star,
                                   double sigma, Diagnostics* diag = nullptr);

/// Smallest L whose top-L weights exceed fraction eta of the total, capped at k_cap.
int select_k(const EmpiricalWeights& weights, double eta, int k_cap);

/// Weighted mean of f(x_Sbar^[k], x_S*) over the top_k highest-weighted rows.
double estimate_v_empirical_top(const TrainingMatrix& train, const Model& model, Coalition s,
                                const Eigen::VectorXd& x_star, const EmpiricalWeights& weights, int top_k,
                                Diagnostics* diag = nullptr);

double estimate_v_empirical(const TrainingMatrix& train, const Model& model, Coalition s,
                            const Eigen::VectorXd& x_star, double sigma, double eta, int k_cap,
                            Diagnostics* diag = nullptr);

// ---------------------------------------------------------------------------
// Dispatch

enum class SamplerKind { kIndependence, kGaussian, kCopula, kEmpirical, kCombined };
enum class BandwidthMode { kFixed, kAiccExact, kAiccApprox };
enum class ParametricBackend { kGaussian, kCopula };

struct SamplerSpec {
  SamplerKind kind = SamplerKind::kIndependence;
  BandwidthMode bandwidth_mode = BandwidthMode::kFixed;
  double sigma = 0.1;
  int d_star = 3;
  ParametricBackend backend = ParametricBackend::kGaussian;
  double eta = 0.9;
  int k_cap = 5000;
  AiccOptions aicc;

  void validate() const;
  bool uses_empirical() const { return kind == SamplerKind::kEmpirical || kind == SamplerKind::kCombined; }
  bool uses_copula() const {
    return kind == SamplerKind::kCopula || (kind == SamplerKind::kCombined && backend == ParametricBackend::kCopula);
  }
  // Name used in reports, e.g. "empirical-0.1+Gaussian".
  std::string label() const;
};

// Inverse of SamplerSpec::label(); also accepts lower-case kind names.
SamplerSpec parse_sampler_label(const std::string& label);

// Bandwidths chosen for one explained instance by AICc.
struct BandwidthPlan {
  std::unordered_map<std::uint64_t, double> by_coalition;
  std::map<int, double> by_size;
};

/// A sampler fitted to one training set and model. Holds references to both;
/// they must outlive it. Immutable after construction and safe to share.
class ConditionalSampler {
 public:
  ConditionalSampler(SamplerSpec spec, const TrainingMatrix& train, const Model& model,
                     Diagnostics* diag = nullptr);

  const SamplerSpec& spec() const { return spec_; }
  const TrainingMatrix& train() const { return *train_; }
  const Model& model() const { return *model_; }
  const std::optional<CopulaState>& copula() const { return copula_; }
  // v(empty): mean prediction over the training rows.
  double mean_prediction() const { return mean_prediction_; }

  // True when the coalition is routed to the empirical estimator.
  bool routes_to_empirical(Coalition s) const;

  BandwidthPlan plan_bandwidths(std::span<const Coalition> coalitions, const Eigen::VectorXd& x_star,
                                std::uint64_t seed, Diagnostics* diag = nullptr) const;

  double estimate_v(Coalition s, const Eigen::VectorXd& x_star, int k, std::uint64_t seed,
                    const BandwidthPlan* plan = nullptr, Diagnostics* diag = nullptr) const;

 private:
  double bandwidth_for(Coalition s, const Eigen::VectorXd& x_star, std::uint64_t seed, const BandwidthPlan* plan,
                       Diagnostics* diag) const;

  SamplerSpec spec_;
  const TrainingMatrix* train_;
  const Model* model_;
  std::optional<CopulaState> copula_;
  double mean_prediction_ = 0.0;
};

/// One-shot v(S) estimate: fits the sampler and evaluates a single coalition.
double estimate_v(const SamplerSpec& spec, const TrainingMatrix& train, const Model& model, Coalition s,
                  const Eigen::VectorXd& x_star, int k, std::uint64_t seed, Diagnostics* diag = nullptr);

}  // namespace depshap
