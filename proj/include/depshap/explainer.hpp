#pragma once

// Kernel SHAP explanations: contribution estimates for every design coalition
// followed by the weighted least squares solve.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "depshap/coalitions.hpp"
#include "depshap/diagnostics.hpp"
#include "depshap/samplers.hpp"

namespace depshap {

struct ExplainOptions {
  int k = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Seed of the stream used for coalition s of instance `instance`.
std::uint64_t coalition_seed(std::uint64_t seed, std::uint64_t instance, Coalition s);

class Explainer {
 public:
  // The sampler must outlive the explainer.
  Explainer(const ConditionalSampler& sampler, const CoalitionMatrix& design, ConstraintMode mode);

  const WlsSolver& solver() const { return solver_; }
  const ConditionalSampler& sampler() const { return *sampler_; }

  ContributionVector contributions(const Eigen::VectorXd& x_star, std::uint64_t instance, int k,
                                   std::uint64_t seed, Diagnostics* diag = nullptr) const;

  Explanation explain(const Eigen::VectorXd& x_star, std::uint64_t instance, int k, std::uint64_t seed,
                      Diagnostics* diag = nullptr) const;

  // One explanation per row of x; row i uses instance index i, so results do
  // not depend on the thread count.
  std::vector<Explanation> explain_all(const Eigen::MatrixXd& x, const ExplainOptions& options,
                                       std::vector<Diagnostics>* diags = nullptr) const;

 private:
  const ConditionalSampler* sampler_;
  WlsSolver solver_;
};

}  // namespace depshap
